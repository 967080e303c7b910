#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dae/data.hpp"
#include "dae/models.hpp"
#include "dae/optim.hpp"

namespace dae {

enum class WeakDecoderKind { None, HalvedWidth, Dropout };

struct WeakDecoderMode {
    WeakDecoderKind kind = WeakDecoderKind::None;
    double p = 0.0;  // dropout only

    static WeakDecoderMode none() { return {}; }
    static WeakDecoderMode halved() { return {WeakDecoderKind::HalvedWidth, 0.0}; }
    static WeakDecoderMode dropout(double p) { return {WeakDecoderKind::Dropout, p}; }
};

std::string weak_decoder_name(const WeakDecoderMode& mode);

struct StageSchedule {
    int stage_id = 1;
    std::size_t epochs = 1;
    std::size_t batch_size = 128;
    std::set<std::string> frozen;
    WeakDecoderMode weak_decoder;
    std::uint64_t seed = 0;
    /// Full-size decoder the halved-width stage is checked against.
    std::optional<MlpConfig> reference_decoder;
};

struct EpochRecord {
    int stage = 1;
    std::size_t epoch = 0;  // 1-based within the stage
    double recon_loss = 0.0;
    double reg_loss = 0.0;
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> records;

    void append(const TrainLog& other);
    std::vector<EpochRecord> stage(int stage_id) const;
};

/// Header `stage,epoch,recon_loss,reg_loss,seconds`.
void write_train_log_csv(std::ostream& out, const TrainLog& log, bool include_seconds = true);

/// Called after every epoch with the model in its current state.
using EpochHook = std::function<void(const Model&, const EpochRecord&)>;

/// Runs schedule.epochs seeded-shuffle passes over `data`. Frozen groups get no
/// updates; dropout weak mode applies decoder dropout in train mode.
TrainLog train_stage(Model& model, const LabeledDataset& data, const StageSchedule& schedule, const AdamHyper& hyper,
                     const EpochHook& hook = {});

/// Stage-1 decoder plan for a weak auxiliary decoder.
struct AuxDecoderPlan {
    MlpConfig config;
    bool fresh_init = false;
    double dropout_p = 0.0;
};

AuxDecoderPlan build_aux_decoder(const MlpConfig& reference, const WeakDecoderMode& mode);

struct SingleStageConfig {
    ModelConfig model;
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    AdamHyper adam;
    std::uint64_t seed = 0;
};

struct DaeConfig {
    ModelConfig model;  // decoder here is the full (stage-2) decoder
    std::size_t total_epochs = 200;
    double stage1_fraction = 0.5;
    std::size_t batch_size = 128;
    WeakDecoderMode weak_decoder = WeakDecoderMode::dropout(0.5);
    AdamHyper adam;
    std::uint64_t seed = 0;

    std::size_t stage1_epochs() const;
    std::size_t stage2_epochs() const { return total_epochs - stage1_epochs(); }
};

struct TrainResult {
    Model model;
    TrainLog log;
};

struct DaeResult {
    Model model;
    Model stage1_model;
    TrainLog log;
};

TrainResult run_single_stage(const SingleStageConfig& config, const LabeledDataset& data, const EpochHook& hook = {});

/// Two-stage decoupled training: stage 1 trains encoder (+head/codebook) with
/// the auxiliary decoder; stage 2 freezes them and trains the full decoder.
DaeResult run_dae(const DaeConfig& config, const LabeledDataset& data, const EpochHook& hook = {});

/// Stage 2 alone, starting from a stage-1 model (e.g. a reloaded checkpoint).
TrainResult run_dae_stage2(Model stage1_model, const DaeConfig& config, const LabeledDataset& data,
                           const EpochHook& hook = {});

}  // namespace dae
