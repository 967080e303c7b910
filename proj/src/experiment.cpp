#include "dae/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "dae/checkpoint.hpp"
#include "dae/errors.hpp"
#include "dae/io.hpp"
#include "dae/oracles.hpp"
#include "dae/random.hpp"
#include "dae/training.hpp"

namespace dae {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kComplexitySalt = 50;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

double percent(double fraction) { return 100.0 * fraction; }

}  // namespace

// --- artifacts ---------------------------------------------------------------

ArtifactSet::ArtifactSet(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

void ArtifactSet::write(const std::string& relative, std::string_view contents) {
    write_file_atomic(root_ / relative, contents);
    entries_.emplace_back(relative, sha256_hex(contents));
    sizes_.push_back(contents.size());
}

json ArtifactSet::list() const {
    json out = json::array();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        out.push_back({{"path", entries_[i].first}, {"sha256", entries_[i].second}, {"bytes", sizes_[i]}});
    }
    return out;
}

// --- evaluation ---------------------------------------------------------------

TrainTestSplit make_run_dataset(const DataConfig& data, std::uint64_t seed) {
    MixtureSpec spec = data.mixture;
    spec.seed = seed;
    return make_toy_dataset(spec, data.train_per_cluster, data.test_per_cluster);
}

ModelEvaluation evaluate_model(const Model& model, const TrainTestSplit& split, const AnalysisConfig& analysis,
                               std::uint64_t seed) {
    const auto& train = split.train;
    const auto& test = split.test;
    ModelEvaluation e;
    const Tensor train_latent = model.encode(train.points);
    const Tensor test_latent = model.encode(test.points);
    e.latent_accuracy = percent(knn_accuracy(train_latent, train.labels, test_latent, test.labels, analysis.knn_k));

    const Tensor train_recon = model.reconstruct(train.points);
    const Tensor test_recon = model.reconstruct(test.points);
    e.reconstruction_accuracy = percent(knn_accuracy(train_recon, train.labels, test_recon, test.labels, analysis.knn_k));

    double sq = 0.0;
    for (std::size_t i = 0; i < test_recon.size(); ++i) {
        const double d = test_recon.values()[i] - test.points.values()[i];
        sq += d * d;
    }
    e.reconstruction_mse = sq / static_cast<double>(test_recon.size());
    e.complexity = model_complexity(model, test.points, analysis.n_pairs, derive_seed(seed, kComplexitySalt));
    return e;
}

double complexity_deviation(const ComplexityReport& r) {
    return std::abs(r.c_lip_encoder - 1.0) + std::abs(r.c_lip_decoder - 1.0);
}

namespace {

json complexity_json(const ComplexityReport& c) {
    return {{"c_lip_encoder", c.c_lip_encoder},
            {"c_lip_decoder", c.c_lip_decoder},
            {"deviation_from_one", complexity_deviation(c)},
            {"n_pairs", c.n_pairs},
            {"excluded_encoder", c.excluded_encoder},
            {"excluded_decoder", c.excluded_decoder},
            {"seed", c.seed}};
}

}  // namespace

json analysis_json(const Model& model, const TrainTestSplit& split, const AnalysisConfig& analysis, std::uint64_t seed) {
    const auto e = evaluate_model(model, split, analysis, seed);
    json j;
    j["model_kind"] = model_kind_name(model.kind());
    j["latent_knn_accuracy"] = e.latent_accuracy;
    j["reconstruction_knn_accuracy"] = e.reconstruction_accuracy;
    j["data_knn_accuracy"] =
        percent(knn_accuracy(split.train.points, split.train.labels, split.test.points, split.test.labels, analysis.knn_k));
    j["reconstruction_mse"] = e.reconstruction_mse;
    j["knn_k"] = analysis.knn_k;
    j["complexity"] = complexity_json(e.complexity);
    if (model.codebook()) {
        const auto& cb = *model.codebook();
        json c;
        const auto usage = code_usage_counts(cb, model.encode(split.test.points));
        std::size_t total = 0;
        std::size_t active = 0;
        for (auto u : usage) {
            total += u;
            active += u > 0 ? 1 : 0;
        }
        c["usage_counts"] = usage;
        c["usage_total"] = total;
        c["active_codes"] = active;
        c["size"] = cb.size();
        try {
            const auto stats = codebook_cosine_stats(cb);
            c["cosine_histogram"] = stats.cosine_histogram;
            c["histogram_range"] = {stats.bin_lo, stats.bin_hi};
            c["top_eigenvalues"] = stats.top_eigenvalues;
            c["zero_norm_codes"] = stats.zero_norm_codes;
        } catch (const DomainError& err) {
            c["cosine_error"] = err.what();
        }
        j["codebook"] = std::move(c);
    }
    return j;
}

// --- Accuracy table -----------------------------------------------------------------------

namespace {

struct ReferenceRow {
    const char* name;
    const char* metric;
    double mean;
    double std;
};

constexpr ReferenceRow kReferenceRows[] = {
    {"vae_64_128", "latent_accuracy", 80.6, 7.0},
    {"vae_128_64", "latent_accuracy", 87.8, 5.8},
    {"single_stage_128_128", "reconstruction_accuracy", 92.2, 6.1},
    {"dae_128_128", "reconstruction_accuracy", 98.0, 1.3},
};

constexpr double kSoftTolerance = 10.0;

std::size_t required_wins(std::size_t total, double fraction) {
    return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total) - 1e-9));
}

Table1Row make_row(std::string name, std::string metric, std::vector<double> values) {
    Table1Row row;
    row.name = std::move(name);
    row.metric = std::move(metric);
    row.values = std::move(values);
    const auto n = static_cast<double>(row.values.size());
    if (!row.values.empty()) {
        double s = 0.0;
        for (double v : row.values) s += v;
        row.mean = s / n;
        double ss = 0.0;
        for (double v : row.values) ss += (v - row.mean) * (v - row.mean);
        row.std = row.values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    for (const auto& p : kReferenceRows) {
        if (row.name == p.name) {
            row.reference_mean = p.mean;
            row.reference_std = p.std;
            row.within_soft_tolerance = std::abs(row.mean - p.mean) <= kSoftTolerance;
        }
    }
    return row;
}

ModelConfig table_model(const ExperimentConfig& config, std::size_t enc_width, std::size_t dec_width) {
    ModelConfig m = config.model_config();
    m.kind = ModelKind::Vae;
    for (std::size_t i = 1; i + 1 < m.encoder.layer_dims.size(); ++i) m.encoder.layer_dims[i] = enc_width;
    for (std::size_t i = 1; i + 1 < m.decoder.layer_dims.size(); ++i) m.decoder.layer_dims[i] = dec_width;
    return m;
}

}  // namespace

bool Table1Result::gating_checks_passed() const {
    for (const auto& c : checks)
        if (c.gating && !c.passed) return false;
    return true;
}

const DirectionalCheck& Table1Result::check(std::string_view name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw ContractError("no directional check named " + std::string(name));
}

Table1Result reproduce_table1(const ExperimentConfig& config, const Table1Progress& progress) {
    if (config.replications < 2) throw ConfigError("replications", "must be at least 2");
    const auto start = Clock::now();
    Table1Result result;
    result.base_seed = config.seed;
    result.replications = config.replications;

    for (std::size_t i = 0; i < config.replications; ++i) {
        const auto rep_start = Clock::now();
        Table1Replication rep;
        rep.seed = config.seed + i;
        try {
            const auto split = make_run_dataset(config.data, rep.seed);

            auto single = [&](const ModelConfig& model) {
                SingleStageConfig s;
                s.model = model;
                s.epochs = config.training.epochs;
                s.batch_size = config.training.batch_size;
                s.adam = config.optimizer;
                s.seed = rep.seed;
                return run_single_stage(s, split.train).model;
            };
            auto dae = [&](const WeakDecoderMode& weak) {
                ExperimentConfig c = config;
                c.kind = ExperimentKind::DaeVae;
                c.seed = rep.seed;
                c.training.weak_decoder = weak;
                DaeConfig d = c.dae_config();
                d.model = table_model(config, 128, 128);
                return run_dae(d, split.train).model;
            };

            rep.latent_64_128 = evaluate_model(single(table_model(config, 64, 128)), split, config.analysis, rep.seed)
                                    .latent_accuracy;
            rep.latent_128_64 = evaluate_model(single(table_model(config, 128, 64)), split, config.analysis, rep.seed)
                                    .latent_accuracy;
            const auto base = evaluate_model(single(table_model(config, 128, 128)), split, config.analysis, rep.seed);
            rep.recon_single = base.reconstruction_accuracy;
            rep.clip_single = base.complexity;
            const auto primary = evaluate_model(dae(config.training.weak_decoder), split, config.analysis, rep.seed);
            rep.recon_dae = primary.reconstruction_accuracy;
            rep.clip_dae = primary.complexity;
            const auto alt_mode = config.training.weak_decoder.kind == WeakDecoderKind::HalvedWidth
                                      ? WeakDecoderMode::dropout(0.5)
                                      : WeakDecoderMode::halved();
            rep.recon_dae_halved =
                evaluate_model(dae(alt_mode), split, config.analysis, rep.seed).reconstruction_accuracy;
            rep.completed = true;
        } catch (const NumericError& e) {
            rep.error = e.what();
            result.partial = true;
        }
        rep.seconds = seconds_since(rep_start);
        result.runs.push_back(rep);
        if (progress) progress(rep);
    }

    std::vector<double> l64, l128, rs, rd, rh;
    DirectionalCheck latent{"latent_128_64_over_64_128",
                            "1-NN latent accuracy of VAE(128,64) exceeds VAE(64,128) on the same seed"};
    DirectionalCheck recon{"recon_dae_over_single_stage",
                           "1-NN reconstruction accuracy of DAE(128,128) exceeds single-stage (128,128) on the same seed"};
    DirectionalCheck alt{"recon_dae_alternate_aux_over_single_stage",
                         "as above with the alternate auxiliary decoder (reported, not gating)"};
    DirectionalCheck clip{"complexity_dae_closer_to_one",
                          "|C_Lip(f)-1| + |C_Lip(g)-1| lower for DAE(128,128) than single-stage (128,128)"};
    alt.gating = false;
    for (const auto& r : result.runs) {
        if (!r.completed) continue;
        l64.push_back(r.latent_64_128);
        l128.push_back(r.latent_128_64);
        rs.push_back(r.recon_single);
        rd.push_back(r.recon_dae);
        rh.push_back(r.recon_dae_halved);
        latent.wins += r.latent_128_64 > r.latent_64_128 ? 1 : 0;
        recon.wins += r.recon_dae > r.recon_single ? 1 : 0;
        alt.wins += r.recon_dae_halved > r.recon_single ? 1 : 0;
        clip.wins += complexity_deviation(r.clip_dae) < complexity_deviation(r.clip_single) ? 1 : 0;
    }
    const bool alt_is_halved = config.training.weak_decoder.kind != WeakDecoderKind::HalvedWidth;
    result.rows.push_back(make_row("vae_64_128", "latent_accuracy", l64));
    result.rows.push_back(make_row("vae_128_64", "latent_accuracy", l128));
    result.rows.push_back(make_row("single_stage_128_128", "reconstruction_accuracy", rs));
    result.rows.push_back(make_row("dae_128_128", "reconstruction_accuracy", rd));
    result.rows.push_back(
        make_row(alt_is_halved ? "dae_128_128_halved_aux" : "dae_128_128_dropout_aux", "reconstruction_accuracy", rh));

    const auto total = config.replications;
    for (auto* c : {&latent, &recon, &alt}) {
        c->total = total;
        c->required = required_wins(total, 0.8);
    }
    clip.total = total;
    clip.required = required_wins(total, 0.7);
    latent.passed = !result.partial && latent.wins >= latent.required && result.rows[1].mean > result.rows[0].mean;
    recon.passed = !result.partial && recon.wins >= recon.required && result.rows[3].mean > result.rows[2].mean;
    alt.passed = !result.partial && alt.wins >= alt.required && result.rows[4].mean > result.rows[2].mean;
    clip.passed = !result.partial && clip.wins >= clip.required;
    result.checks = {latent, recon, alt, clip};
    result.seconds = seconds_since(start);
    return result;
}

json Table1Result::to_json() const {
    json j;
    j["base_seed"] = base_seed;
    j["replications"] = replications;
    j["seeds"] = json::array();
    for (std::size_t i = 0; i < replications; ++i) j["seeds"].push_back(base_seed + i);
    j["partial"] = partial;
    j["spread_statistic"] = "sample standard deviation (n - 1), percentage points";
    j["soft_tolerance_points"] = kSoftTolerance;
    j["rows"] = json::array();
    for (const auto& r : rows) {
        json row = {{"name", r.name}, {"metric", r.metric}, {"mean", r.mean}, {"std", r.std}, {"values", r.values}};
        if (r.reference_mean) {
            row["reference_mean"] = *r.reference_mean;
            row["reference_spread"] = *r.reference_std;
            row["within_soft_tolerance"] = *r.within_soft_tolerance;
        }
        j["rows"].push_back(std::move(row));
    }
    j["checks"] = json::array();
    for (const auto& c : checks) {
        j["checks"].push_back({{"name", c.name},
                               {"description", c.description},
                               {"wins", c.wins},
                               {"total", c.total},
                               {"required", c.required},
                               {"gating", c.gating},
                               {"passed", c.passed}});
    }
    j["runs"] = json::array();
    for (const auto& r : runs) {
        json run = {{"seed", r.seed}, {"completed", r.completed}};
        if (r.completed) {
            run["latent_64_128"] = r.latent_64_128;
            run["latent_128_64"] = r.latent_128_64;
            run["recon_single_stage"] = r.recon_single;
            run["recon_dae"] = r.recon_dae;
            run["recon_dae_alternate_aux"] = r.recon_dae_halved;
            run["complexity_single_stage"] = complexity_json(r.clip_single);
            run["complexity_dae"] = complexity_json(r.clip_dae);
        } else {
            run["error"] = r.error;
        }
        j["runs"].push_back(std::move(run));
    }
    j["gating_checks_passed"] = gating_checks_passed();
    return j;
}

std::string Table1Result::rows_csv() const {
    std::ostringstream out;
    out << "name,metric,n,mean,std,reference_mean,reference_spread,within_soft_tolerance\n";
    for (const auto& r : rows) {
        out << r.name << ',' << r.metric << ',' << r.values.size() << ',' << fmt(r.mean) << ',' << fmt(r.std) << ',';
        if (r.reference_mean) {
            out << fmt(*r.reference_mean) << ',' << fmt(*r.reference_std) << ',' << (*r.within_soft_tolerance ? "true" : "false");
        } else {
            out << ",,";
        }
        out << '\n';
    }
    return out.str();
}

std::string Table1Result::replications_csv() const {
    std::ostringstream out;
    out << "seed,completed,latent_64_128,latent_128_64,recon_single_stage,recon_dae,recon_dae_alternate_aux,"
           "c_lip_encoder_single_stage,c_lip_decoder_single_stage,c_lip_encoder_dae,c_lip_decoder_dae\n";
    for (const auto& r : runs) {
        out << r.seed << ',' << (r.completed ? "true" : "false");
        if (r.completed) {
            for (double v : {r.latent_64_128, r.latent_128_64, r.recon_single, r.recon_dae, r.recon_dae_halved,
                             r.clip_single.c_lip_encoder, r.clip_single.c_lip_decoder, r.clip_dae.c_lip_encoder,
                             r.clip_dae.c_lip_decoder}) {
                out << ',' << fmt(v);
            }
        } else {
            out << ",,,,,,,,,";
        }
        out << '\n';
    }
    return out.str();
}

// --- runner ----------------------------------------------------------------------------

namespace {

struct ComplexityRow {
    int stage;
    std::size_t epoch;
    ComplexityReport report;
};

std::string complexity_csv(const std::vector<ComplexityRow>& rows) {
    std::ostringstream out;
    out << "stage,epoch,c_lip_encoder,c_lip_decoder\n";
    for (const auto& r : rows) {
        out << r.stage << ',' << r.epoch << ',' << fmt(r.report.c_lip_encoder) << ',' << fmt(r.report.c_lip_decoder)
            << '\n';
    }
    return out.str();
}

std::string log_csv(const TrainLog& log, bool seconds) {
    std::ostringstream out;
    write_train_log_csv(out, log, seconds);
    return out.str();
}

json seed_json(const ExperimentConfig& config) {
    return {{"base", config.seed},
            {"data", config.seed},
            {"derivation", "child seeds are splitmix64(base, salt)"},
            {"salts", {{"init", 1}, {"stage1", 2}, {"stage2_init", 3}, {"stage2", 4}, {"complexity", kComplexitySalt}}}};
}

json base_manifest(const ExperimentConfig& config) {
    return {{"tool", "dae"}, {"version", kVersion}, {"config", config_to_json(config)}};
}

void finish_manifest(ArtifactSet& artifacts, json manifest, Clock::time_point start, const std::string& status) {
    manifest["artifacts"] = artifacts.list();
    manifest["wall_clock_seconds"] = seconds_since(start);
    manifest["status"] = status;
    write_file_atomic(artifacts.root() / "manifest.json", manifest.dump(2) + "\n");
}

ExperimentOutcome run_training(const ExperimentConfig& config, ArtifactSet& artifacts, std::ostream* progress,
                               json& manifest) {
    const auto split = make_run_dataset(config.data, config.seed);
    std::vector<ComplexityRow> complexity;
    std::size_t stage_epochs[3] = {0, config.training.epochs, 0};
    if (is_dae_kind(config.kind)) {
        const auto d = config.dae_config();
        stage_epochs[1] = d.stage1_epochs();
        stage_epochs[2] = d.stage2_epochs();
    }
    const auto every = config.analysis.complexity_every;
    auto hook = [&](const Model& model, const EpochRecord& rec) {
        const bool last = rec.epoch == stage_epochs[rec.stage];
        if ((every > 0 && rec.epoch % every == 0) || last) {
            complexity.push_back({rec.stage, rec.epoch,
                                  model_complexity(model, split.test.points, config.analysis.n_pairs,
                                                   derive_seed(config.seed, kComplexitySalt))});
        }
        if (progress && (last || rec.epoch % 10 == 0)) {
            *progress << "stage " << rec.stage << " epoch " << rec.epoch << " recon " << rec.recon_loss << " reg "
                      << rec.reg_loss << '\n';
        }
    };

    json analysis;
    TrainLog log;
    if (is_dae_kind(config.kind)) {
        auto result = run_dae(config.dae_config(), split.train, hook);
        log = result.log;
        artifacts.write("model.json", model_to_json(result.model).dump() + "\n");
        artifacts.write("stage1_model.json", model_to_json(result.stage1_model).dump() + "\n");
        analysis = analysis_json(result.model, split, config.analysis, config.seed);
        analysis["stage1"] = analysis_json(result.stage1_model, split, config.analysis, config.seed);
    } else {
        auto result = run_single_stage(config.single_stage_config(), split.train, hook);
        log = result.log;
        artifacts.write("model.json", model_to_json(result.model).dump() + "\n");
        analysis = analysis_json(result.model, split, config.analysis, config.seed);
    }
    analysis["kind"] = experiment_kind_name(config.kind);
    analysis["seed"] = config.seed;
    if (!log.records.empty()) {
        analysis["final_recon_loss"] = log.records.back().recon_loss;
        analysis["final_reg_loss"] = log.records.back().reg_loss;
    }

    artifacts.write("train_log.csv", log_csv(log, true));
    artifacts.write("metrics.csv", log_csv(log, false));
    artifacts.write("complexity.csv", complexity_csv(complexity));
    artifacts.write("analysis.json", analysis.dump(2) + "\n");
    manifest["seeds"] = seed_json(config);
    manifest["summary"] = {{"latent_knn_accuracy", analysis["latent_knn_accuracy"]},
                           {"reconstruction_knn_accuracy", analysis["reconstruction_knn_accuracy"]},
                           {"complexity", analysis["complexity"]}};
    return {kExitOk, manifest["summary"]};
}

ExperimentOutcome run_table1(const ExperimentConfig& config, ArtifactSet& artifacts, std::ostream* progress,
                             json& manifest) {
    auto result = reproduce_table1(config, [&](const Table1Replication& r) {
        if (!progress) return;
        *progress << "replication seed " << r.seed << (r.completed ? "" : " ABORTED: " + r.error) << " ("
                  << std::fixed << std::setprecision(1) << r.seconds << "s)";
        if (r.completed) {
            *progress << " latent(64,128)=" << r.latent_64_128 << " latent(128,64)=" << r.latent_128_64
                      << " recon(128,128)=" << r.recon_single << " recon DAE=" << r.recon_dae;
        }
        *progress << std::defaultfloat << '\n';
    });
    const json j = result.to_json();
    artifacts.write("table1.json", j.dump(2) + "\n");
    artifacts.write("table1.csv", result.rows_csv());
    artifacts.write("replications.csv", result.replications_csv());
    manifest["seeds"] = {{"base", config.seed}, {"replications", j["seeds"]}};
    json summary = {{"checks", j["checks"]}, {"partial", result.partial}};
    for (const auto& r : result.rows) summary[r.name] = {{"mean", r.mean}, {"std", r.std}};
    manifest["summary"] = summary;
    int code = kExitOk;
    if (result.partial) {
        code = kExitNumeric;
    } else if (!result.gating_checks_passed()) {
        code = kExitAcceptance;
    }
    return {code, summary};
}

ExperimentOutcome run_oracles(const ExperimentConfig& config, ArtifactSet& artifacts, json& manifest) {
    OracleSuiteOptions options;
    options.seed = config.seed;
    const auto report = run_oracle_suite(options);
    artifacts.write("oracles.json", report.to_json().dump(2) + "\n");
    manifest["seeds"] = {{"base", config.seed}};
    json summary = {{"passed", report.passed()}, {"checks", report.checks.size()}, {"failing", report.failing()}};
    manifest["summary"] = summary;
    return {report.passed() ? kExitOk : kExitAcceptance, summary};
}

ExperimentOutcome run_diagnose(const ExperimentConfig& config, ArtifactSet& artifacts, json& manifest) {
    const Model model = load_model(config.checkpoint);
    if (model.config().encoder.input_dim() != static_cast<std::size_t>(config.data.mixture.ambient_dim)) {
        throw ConfigError("checkpoint, data.ambient_dim", "checkpoint input dim " +
                                                              std::to_string(model.config().encoder.input_dim()) +
                                                              " does not match the configured data");
    }
    const auto split = make_run_dataset(config.data, config.seed);
    json analysis = analysis_json(model, split, config.analysis, config.seed);
    analysis["checkpoint"] = config.checkpoint;
    analysis["checkpoint_sha256"] = sha256_hex(read_file(config.checkpoint));
    artifacts.write("analysis.json", analysis.dump(2) + "\n");
    manifest["seeds"] = {{"data", config.seed}, {"complexity", derive_seed(config.seed, kComplexitySalt)}};
    manifest["summary"] = {{"latent_knn_accuracy", analysis["latent_knn_accuracy"]},
                           {"reconstruction_knn_accuracy", analysis["reconstruction_knn_accuracy"]}};
    return {kExitOk, manifest["summary"]};
}

}  // namespace

void write_error_record(const fs::path& dir, int code, const std::string& kind, const std::string& message,
                        const std::string& field) {
    json e = {{"status", "error"}, {"exit_code", code}, {"error", kind}, {"message", message}};
    if (!field.empty()) e["field"] = field;
    try {
        fs::create_directories(dir);
        write_file_atomic(dir / "error.json", e.dump(2) + "\n");
    } catch (const std::exception&) {
        // Output directory unusable; the exit code still reports the failure.
    }
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream* progress) {
    const auto start = Clock::now();
    const fs::path dir = config.output_dir.empty() ? fs::path("runs/default") : fs::path(config.output_dir);
    try {
        config.validate();
        fs::remove(dir / "error.json");
        ArtifactSet artifacts(dir);
        json manifest = base_manifest(config);
        ExperimentOutcome outcome;
        switch (config.kind) {
            case ExperimentKind::Table1: outcome = run_table1(config, artifacts, progress, manifest); break;
            case ExperimentKind::Oracles: outcome = run_oracles(config, artifacts, manifest); break;
            case ExperimentKind::Diagnose: outcome = run_diagnose(config, artifacts, manifest); break;
            default: outcome = run_training(config, artifacts, progress, manifest); break;
        }
        const std::string status = outcome.exit_code == kExitOk ? "pass" : "fail";
        if (outcome.exit_code != kExitOk) {
            write_error_record(dir, outcome.exit_code, outcome.exit_code == kExitNumeric ? "numeric" : "acceptance",
                        outcome.summary.dump());
        }
        finish_manifest(artifacts, manifest, start, status);
        return outcome;
    } catch (const ConfigError& e) {
        write_error_record(dir, kExitConfig, "config", e.what(), e.field());
        return {kExitConfig, {{"error", e.what()}, {"field", e.field()}}};
    } catch (const NumericError& e) {
        write_error_record(dir, kExitNumeric, "numeric", e.what());
        return {kExitNumeric, {{"error", e.what()}}};
    } catch (const std::exception& e) {
        write_error_record(dir, kExitFailure, "runtime", e.what());
        return {kExitFailure, {{"error", e.what()}}};
    }
}

}  // namespace dae
