#include "dae/config.hpp"

#include <array>
#include <set>

#include "dae/errors.hpp"
#include "dae/io.hpp"

namespace dae {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 9> kKindNames{{
    {ExperimentKind::BaselineAe, "baseline_ae"},
    {ExperimentKind::BaselineVae, "baseline_vae"},
    {ExperimentKind::VqAe, "vq_ae"},
    {ExperimentKind::DaeAe, "dae_ae"},
    {ExperimentKind::DaeVae, "dae_vae"},
    {ExperimentKind::DaeVq, "dae_vq"},
    {ExperimentKind::Table1, "table1"},
    {ExperimentKind::Oracles, "oracles"},
    {ExperimentKind::Diagnose, "diagnose"},
}};

// Walks a JSON object, rejecting keys that no reader asked for.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

    const json* get(std::string_view key) {
        seen_.insert(std::string(key));
        auto it = j_.find(std::string(key));
        return it == j_.end() ? nullptr : &*it;
    }

    void read(std::string_view key, std::size_t& out) {
        if (const json* v = get(key)) {
            if (!v->is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
            out = v->get<std::size_t>();
        }
    }

    void read_u64(std::string_view key, std::uint64_t& out) {
        if (const json* v = get(key)) {
            if (!v->is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }

    void read(std::string_view key, int& out) {
        if (const json* v = get(key)) {
            if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
            out = v->get<int>();
        }
    }

    void read(std::string_view key, double& out) {
        if (const json* v = get(key)) {
            if (!v->is_number()) throw ConfigError(field(key), "expected a number");
            out = v->get<double>();
        }
    }

    void read(std::string_view key, std::string& out) {
        if (const json* v = get(key)) {
            if (!v->is_string()) throw ConfigError(field(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.contains(it.key())) throw ConfigError(field(it.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

MlpConfig read_mlp(const json& j, const std::string& path, MlpConfig out) {
    Reader r(j, path);
    if (const json* dims = r.get("layer_dims")) {
        if (!dims->is_array()) throw ConfigError(r.field("layer_dims"), "expected an array of positive integers");
        out.layer_dims.clear();
        for (const auto& d : *dims) {
            if (!d.is_number_unsigned()) throw ConfigError(r.field("layer_dims"), "expected an array of positive integers");
            out.layer_dims.push_back(d.get<std::size_t>());
        }
    }
    std::string activation(activation_name(out.hidden));
    r.read("activation", activation);
    try {
        out.hidden = parse_activation(activation);
    } catch (const std::exception&) {
        throw ConfigError(r.field("activation"), "unknown activation '" + activation + "' (tanh or relu)");
    }
    r.finish();
    return out;
}

json mlp_json(const MlpConfig& c) { return {{"layer_dims", c.layer_dims}, {"activation", activation_name(c.hidden)}}; }

WeakDecoderMode read_weak(const json& j, const std::string& path) {
    Reader r(j, path);
    std::string mode = "dropout";
    double p = 0.5;
    r.read("mode", mode);
    r.read("p", p);
    r.finish();
    if (mode == "none") return WeakDecoderMode::none();
    if (mode == "halved_width") return WeakDecoderMode::halved();
    if (mode == "dropout") return WeakDecoderMode::dropout(p);
    throw ConfigError(r.field("mode"), "unknown weak decoder mode '" + mode + "' (none, halved_width, dropout)");
}

json weak_json(const WeakDecoderMode& m) {
    json j = {{"mode", weak_decoder_name(m)}};
    if (m.kind == WeakDecoderKind::Dropout) j["p"] = m.p;
    return j;
}

std::string dims_string(const std::vector<std::size_t>& dims) { return json(dims).dump(); }

}  // namespace

std::string_view experiment_kind_name(ExperimentKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
    for (const auto& [k, n] : kKindNames)
        if (n == name) return k;
    throw ConfigError("kind", "unknown experiment kind '" + std::string(name) + "'");
}

bool is_training_kind(ExperimentKind kind) {
    return kind != ExperimentKind::Table1 && kind != ExperimentKind::Oracles && kind != ExperimentKind::Diagnose;
}

bool is_dae_kind(ExperimentKind kind) {
    return kind == ExperimentKind::DaeAe || kind == ExperimentKind::DaeVae || kind == ExperimentKind::DaeVq;
}

ModelKind model_kind_for(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::BaselineAe:
        case ExperimentKind::DaeAe: return ModelKind::Ae;
        case ExperimentKind::VqAe:
        case ExperimentKind::DaeVq: return ModelKind::Vq;
        default: return ModelKind::Vae;
    }
}

ModelConfig ExperimentConfig::model_config() const {
    ModelConfig m;
    m.kind = model_kind_for(kind);
    m.encoder = encoder;
    m.decoder = decoder;
    m.codebook_size = codebook_size;
    m.beta_kl = beta_kl;
    m.beta_commit = beta_commit;
    return m;
}

DaeConfig ExperimentConfig::dae_config() const {
    DaeConfig d;
    d.model = model_config();
    d.total_epochs = training.epochs;
    d.stage1_fraction = training.stage1_fraction;
    d.batch_size = training.batch_size;
    d.weak_decoder = training.weak_decoder;
    d.adam = optimizer;
    d.seed = seed;
    return d;
}

SingleStageConfig ExperimentConfig::single_stage_config() const {
    SingleStageConfig s;
    s.model = model_config();
    s.epochs = training.epochs;
    s.batch_size = training.batch_size;
    s.adam = optimizer;
    s.seed = seed;
    return s;
}

void ExperimentConfig::validate() const {
    const auto& m = data.mixture;
    if (m.num_clusters < 1) throw ConfigError("data.num_clusters", "must be at least 1");
    if (!(m.radius > 0.0)) throw ConfigError("data.radius", "must be positive");
    if (!(m.variance >= 0.0)) throw ConfigError("data.variance", "must be non-negative");
    if (m.intrinsic_dim < 2) throw ConfigError("data.intrinsic_dim", "must be at least 2");
    if (m.ambient_dim < m.intrinsic_dim) throw ConfigError("data.ambient_dim", "must be at least data.intrinsic_dim");
    if (data.train_per_cluster < 1) throw ConfigError("data.train_per_cluster", "must be at least 1");
    if (data.test_per_cluster < 1) throw ConfigError("data.test_per_cluster", "must be at least 1");

    for (const auto& [name, mlp] : {std::pair{"encoder", &encoder}, std::pair{"decoder", &decoder}}) {
        const std::string field = std::string(name) + ".layer_dims";
        if (mlp->layer_dims.size() < 2) throw ConfigError(field, "needs at least an input and an output width");
        for (auto w : mlp->layer_dims)
            if (w == 0) throw ConfigError(field, "widths must be positive");
    }
    if (encoder.output_dim() != decoder.input_dim()) {
        throw ConfigError("encoder.layer_dims[-1], decoder.layer_dims[0]",
                          "encoder output dim " + std::to_string(encoder.output_dim()) + " != decoder input dim " +
                              std::to_string(decoder.input_dim()) + " (encoder " + dims_string(encoder.layer_dims) +
                              ", decoder " + dims_string(decoder.layer_dims) + ")");
    }
    const auto ambient = static_cast<std::size_t>(m.ambient_dim);
    if (encoder.input_dim() != ambient) {
        throw ConfigError("encoder.layer_dims[0], data.ambient_dim",
                          "encoder input dim " + std::to_string(encoder.input_dim()) + " != ambient dim " +
                              std::to_string(ambient));
    }
    if (decoder.output_dim() != ambient) {
        throw ConfigError("decoder.layer_dims[-1], data.ambient_dim",
                          "decoder output dim " + std::to_string(decoder.output_dim()) + " != ambient dim " +
                              std::to_string(ambient));
    }
    const bool vae_like = kind == ExperimentKind::BaselineVae || kind == ExperimentKind::DaeVae || kind == ExperimentKind::Table1;
    if (vae_like && encoder.layer_dims.size() < 3) {
        throw ConfigError("encoder.layer_dims", "a VAE encoder needs at least one hidden layer before its heads");
    }
    if (codebook_size < 1) throw ConfigError("codebook_size", "must be at least 1");
    if (!(beta_kl >= 0.0)) throw ConfigError("beta_kl", "must be non-negative");
    if (!(beta_commit >= 0.0)) throw ConfigError("beta_commit", "must be non-negative");

    if (!(optimizer.lr > 0.0)) throw ConfigError("optimizer.lr", "must be positive");
    if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) throw ConfigError("optimizer.beta1", "must lie in [0, 1)");
    if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) throw ConfigError("optimizer.beta2", "must lie in [0, 1)");
    if (!(optimizer.eps > 0.0)) throw ConfigError("optimizer.eps", "must be positive");

    if (training.epochs < 1) throw ConfigError("training.epochs", "must be at least 1");
    if (training.batch_size < 1) throw ConfigError("training.batch_size", "must be at least 1");
    if (training.weak_decoder.kind == WeakDecoderKind::Dropout &&
        !(training.weak_decoder.p >= 0.0 && training.weak_decoder.p < 1.0)) {
        throw ConfigError("training.weak_decoder.p", "dropout probability must lie in [0, 1)");
    }
    if (is_dae_kind(kind) || kind == ExperimentKind::Table1) {
        if (!(training.stage1_fraction > 0.0 && training.stage1_fraction < 1.0)) {
            throw ConfigError("training.stage1_fraction", "must lie strictly between 0 and 1");
        }
        if (training.stage1_fraction == 0.5 && training.epochs % 2 != 0) {
            throw ConfigError("training.epochs", "an equal two-stage split needs an even epoch total, got " +
                                                     std::to_string(training.epochs));
        }
        const auto dae = dae_config();
        if (dae.stage1_epochs() < 1 || dae.stage2_epochs() < 1) {
            throw ConfigError("training.epochs", "both stages need at least one epoch");
        }
    }

    if (analysis.n_pairs < 1) throw ConfigError("analysis.n_pairs", "must be at least 1");
    if (analysis.knn_k < 1) throw ConfigError("analysis.knn_k", "must be at least 1");
    if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
    if (kind == ExperimentKind::Table1 && replications < 2) throw ConfigError("replications", "must be at least 2");
    if (kind == ExperimentKind::Diagnose && checkpoint.empty()) {
        throw ConfigError("checkpoint", "diagnose needs a checkpoint path");
    }
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    Reader r(j, "");
    std::string kind(experiment_kind_name(c.kind));
    r.read("kind", kind);
    c.kind = parse_experiment_kind(kind);

    if (const json* d = r.get("data")) {
        Reader dr(*d, "data");
        dr.read("num_clusters", c.data.mixture.num_clusters);
        dr.read("radius", c.data.mixture.radius);
        dr.read("variance", c.data.mixture.variance);
        dr.read("intrinsic_dim", c.data.mixture.intrinsic_dim);
        dr.read("ambient_dim", c.data.mixture.ambient_dim);
        dr.read("train_per_cluster", c.data.train_per_cluster);
        dr.read("test_per_cluster", c.data.test_per_cluster);
        dr.finish();
    }
    if (const json* e = r.get("encoder")) c.encoder = read_mlp(*e, "encoder", c.encoder);
    if (const json* e = r.get("decoder")) c.decoder = read_mlp(*e, "decoder", c.decoder);
    r.read("codebook_size", c.codebook_size);
    r.read("beta_kl", c.beta_kl);
    r.read("beta_commit", c.beta_commit);
    if (const json* o = r.get("optimizer")) {
        Reader orr(*o, "optimizer");
        orr.read("lr", c.optimizer.lr);
        orr.read("beta1", c.optimizer.beta1);
        orr.read("beta2", c.optimizer.beta2);
        orr.read("eps", c.optimizer.eps);
        orr.finish();
    }
    if (const json* t = r.get("training")) {
        Reader tr(*t, "training");
        tr.read("epochs", c.training.epochs);
        tr.read("batch_size", c.training.batch_size);
        tr.read("stage1_fraction", c.training.stage1_fraction);
        if (const json* w = tr.get("weak_decoder")) c.training.weak_decoder = read_weak(*w, "training.weak_decoder");
        tr.finish();
    }
    if (const json* a = r.get("analysis")) {
        Reader ar(*a, "analysis");
        ar.read("n_pairs", c.analysis.n_pairs);
        ar.read("knn_k", c.analysis.knn_k);
        ar.read("complexity_every", c.analysis.complexity_every);
        ar.finish();
    }
    r.read("output_dir", c.output_dir);
    r.read_u64("seed", c.seed);
    r.read("replications", c.replications);
    r.read("checkpoint", c.checkpoint);
    r.finish();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    const auto& m = c.data.mixture;
    json j;
    j["kind"] = experiment_kind_name(c.kind);
    j["data"] = {{"num_clusters", m.num_clusters},         {"radius", m.radius},
                 {"variance", m.variance},                 {"intrinsic_dim", m.intrinsic_dim},
                 {"ambient_dim", m.ambient_dim},           {"train_per_cluster", c.data.train_per_cluster},
                 {"test_per_cluster", c.data.test_per_cluster}};
    j["encoder"] = mlp_json(c.encoder);
    j["decoder"] = mlp_json(c.decoder);
    j["codebook_size"] = c.codebook_size;
    j["beta_kl"] = c.beta_kl;
    j["beta_commit"] = c.beta_commit;
    j["optimizer"] = {{"lr", c.optimizer.lr}, {"beta1", c.optimizer.beta1}, {"beta2", c.optimizer.beta2}, {"eps", c.optimizer.eps}};
    j["training"] = {{"epochs", c.training.epochs},
                     {"batch_size", c.training.batch_size},
                     {"stage1_fraction", c.training.stage1_fraction},
                     {"weak_decoder", weak_json(c.training.weak_decoder)}};
    j["analysis"] = {{"n_pairs", c.analysis.n_pairs}, {"knn_k", c.analysis.knn_k}, {"complexity_every", c.analysis.complexity_every}};
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    j["replications"] = c.replications;
    if (!c.checkpoint.empty()) j["checkpoint"] = c.checkpoint;
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError("config", "cannot read " + path.string() + ": " + e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", "invalid JSON in " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace dae
