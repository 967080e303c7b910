#include "dae/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "dae/errors.hpp"
#include "dae/random.hpp"

namespace dae {
namespace {

Tensor gather_batch(const Tensor& points, const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
    const auto dim = points.cols();
    std::vector<double> rows((end - begin) * dim);
    for (std::size_t i = begin; i < end; ++i) {
        std::copy_n(points.values().begin() + static_cast<std::ptrdiff_t>(order[i] * dim), dim,
                    rows.begin() + static_cast<std::ptrdiff_t>((i - begin) * dim));
    }
    return Tensor::matrix(end - begin, dim, std::move(rows));
}

std::string location(const StageSchedule& s, std::size_t epoch, std::size_t batch) {
    return "stage " + std::to_string(s.stage_id) + ", epoch " + std::to_string(epoch) + ", batch " +
           std::to_string(batch);
}

// Salts for seeds derived from a run seed.
enum Salt : std::uint64_t { kInitSalt = 1, kStage1Salt = 2, kStage2InitSalt = 3, kStage2Salt = 4 };

}  // namespace

std::string weak_decoder_name(const WeakDecoderMode& mode) {
    switch (mode.kind) {
        case WeakDecoderKind::None: return "none";
        case WeakDecoderKind::HalvedWidth: return "halved_width";
        case WeakDecoderKind::Dropout: return "dropout";
    }
    return "none";
}

void TrainLog::append(const TrainLog& other) { records.insert(records.end(), other.records.begin(), other.records.end()); }

std::vector<EpochRecord> TrainLog::stage(int stage_id) const {
    std::vector<EpochRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [&](const EpochRecord& r) { return r.stage == stage_id; });
    return out;
}

void write_train_log_csv(std::ostream& out, const TrainLog& log, bool include_seconds) {
    const auto old_precision = out.precision(17);
    out << "stage,epoch,recon_loss,reg_loss" << (include_seconds ? ",seconds" : "") << '\n';
    for (const auto& r : log.records) {
        out << r.stage << ',' << r.epoch << ',' << r.recon_loss << ',' << r.reg_loss;
        if (include_seconds) out << ',' << r.seconds;
        out << '\n';
    }
    out.precision(old_precision);
}

TrainLog train_stage(Model& model, const LabeledDataset& data, const StageSchedule& schedule, const AdamHyper& hyper,
                     const EpochHook& hook) {
    if (data.dim() != model.config().encoder.input_dim()) {
        throw ContractError("dataset dimension " + std::to_string(data.dim()) + " does not match model input " +
                            std::to_string(model.config().encoder.input_dim()));
    }
    if (schedule.batch_size == 0) throw ConfigError("batch_size", "must be positive");
    for (const auto& name : schedule.frozen) {
        if (!model.has_group(name)) throw ConfigError("frozen", "unknown parameter group '" + name + "'");
    }
    if (schedule.weak_decoder.kind == WeakDecoderKind::Dropout &&
        !(schedule.weak_decoder.p >= 0.0 && schedule.weak_decoder.p < 1.0)) {
        throw ConfigError("weak_decoder.p", "dropout probability must lie in [0, 1)");
    }
    if (schedule.weak_decoder.kind == WeakDecoderKind::HalvedWidth && schedule.reference_decoder &&
        model.config().decoder != halved_width(*schedule.reference_decoder)) {
        throw ConfigError("weak_decoder", "halved_width stage needs a decoder with ceil(w/2) hidden widths");
    }

    TrainLog log;
    if (schedule.epochs == 0) return log;

    std::vector<Tensor*> trainable;
    for (const auto& name : model.group_names()) {
        const bool frozen = schedule.frozen.contains(name);
        for (Tensor* t : model.group(name)) {
            t->set_requires_grad(!frozen);
            if (!frozen) trainable.push_back(t);
        }
    }
    Adam adam(trainable, hyper);
    adam.zero_grad();

    std::mt19937_64 rng(schedule.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const bool use_dropout = schedule.weak_decoder.kind == WeakDecoderKind::Dropout && schedule.weak_decoder.p > 0.0;

    for (std::size_t epoch = 1; epoch <= schedule.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), rng);
        double recon_total = 0.0;
        double reg_total = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += schedule.batch_size, ++batch_index) {
            const auto end = std::min(order.size(), begin + schedule.batch_size);
            Tensor batch = gather_batch(data.points, order, begin, end);
            ForwardOptions options;
            options.noise_seed = rng();
            if (use_dropout) options.decoder_dropout = {schedule.weak_decoder.p, DropoutMode::Train, rng()};

            Graph g;
            LossTerms terms;
            try {
                terms = model.loss(g, batch, options);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at " + location(schedule, epoch, batch_index));
            }
            const double total = terms.total.value().item();
            if (!std::isfinite(total)) {
                throw NumericError("non-finite loss at " + location(schedule, epoch, batch_index));
            }
            g.backward(terms.total);
            adam.step();

            const double weight = static_cast<double>(end - begin);
            recon_total += terms.recon.value().item() * weight;
            reg_total += terms.reg.value().item() * weight;
        }
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        EpochRecord record{schedule.stage_id, epoch, recon_total / static_cast<double>(data.size()),
                           reg_total / static_cast<double>(data.size()), elapsed.count()};
        log.records.push_back(record);
        if (hook) hook(model, record);
    }

    for (Tensor* t : model.parameters()) t->set_requires_grad(true);
    return log;
}

AuxDecoderPlan build_aux_decoder(const MlpConfig& reference, const WeakDecoderMode& mode) {
    reference.validate();
    switch (mode.kind) {
        case WeakDecoderKind::HalvedWidth:
            return {halved_width(reference), true, 0.0};
        case WeakDecoderKind::Dropout:
            if (!(mode.p >= 0.0 && mode.p < 1.0)) throw ContractError("dropout probability must lie in [0, 1)");
            return {reference, false, mode.p};
        case WeakDecoderKind::None:
            break;
    }
    throw ContractError("auxiliary decoder needs mode halved_width or dropout(p)");
}

std::size_t DaeConfig::stage1_epochs() const {
    if (!(stage1_fraction > 0.0 && stage1_fraction < 1.0)) {
        throw ConfigError("stage1_fraction", "must lie strictly between 0 and 1");
    }
    if (stage1_fraction == 0.5 && total_epochs % 2 != 0) {
        throw ConfigError("epochs", "an equal two-stage split needs an even epoch total");
    }
    return static_cast<std::size_t>(std::llround(static_cast<double>(total_epochs) * stage1_fraction));
}

TrainResult run_single_stage(const SingleStageConfig& config, const LabeledDataset& data, const EpochHook& hook) {
    Model model = Model::init(config.model, derive_seed(config.seed, kInitSalt));
    StageSchedule schedule;
    schedule.stage_id = 1;
    schedule.epochs = config.epochs;
    schedule.batch_size = config.batch_size;
    schedule.seed = derive_seed(config.seed, kStage1Salt);
    auto log = train_stage(model, data, schedule, config.adam, hook);
    return {std::move(model), std::move(log)};
}

DaeResult run_dae(const DaeConfig& config, const LabeledDataset& data, const EpochHook& hook) {
    const auto stage1_epochs = config.stage1_epochs();
    const auto plan = build_aux_decoder(config.model.decoder, config.weak_decoder);

    ModelConfig stage1_config = config.model;
    stage1_config.decoder = plan.config;
    Model model = Model::init(stage1_config, derive_seed(config.seed, kInitSalt));

    StageSchedule stage1;
    stage1.stage_id = 1;
    stage1.epochs = stage1_epochs;
    stage1.batch_size = config.batch_size;
    stage1.weak_decoder = config.weak_decoder;
    stage1.seed = derive_seed(config.seed, kStage1Salt);
    stage1.reference_decoder = config.model.decoder;
    TrainLog log;
    try {
        log = train_stage(model, data, stage1, config.adam, hook);
    } catch (const NumericError& e) {
        throw NumericError(std::string("dae stage 1: ") + e.what());
    }

    Model stage1_model = model;
    auto stage2 = run_dae_stage2(std::move(model), config, data, hook);
    log.append(stage2.log);
    return {std::move(stage2.model), std::move(stage1_model), std::move(log)};
}

TrainResult run_dae_stage2(Model model, const DaeConfig& config, const LabeledDataset& data, const EpochHook& hook) {
    if (config.weak_decoder.kind == WeakDecoderKind::HalvedWidth ||
        model.config().decoder != config.model.decoder) {
        std::mt19937_64 rng(derive_seed(config.seed, kStage2InitSalt));
        model.replace_decoder(Mlp::init(config.model.decoder, rng));
    }

    StageSchedule stage2;
    stage2.stage_id = 2;
    stage2.epochs = config.stage2_epochs();
    stage2.batch_size = config.batch_size;
    stage2.frozen.insert(std::string(kEncoderGroup));
    if (model.codebook()) stage2.frozen.insert(std::string(kCodebookGroup));
    stage2.seed = derive_seed(config.seed, kStage2Salt);
    try {
        auto log = train_stage(model, data, stage2, config.adam, hook);
        return {std::move(model), std::move(log)};
    } catch (const NumericError& e) {
        throw NumericError(std::string("dae stage 2: ") + e.what());
    }
}

}  // namespace dae
