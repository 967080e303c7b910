#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "dae/data.hpp"
#include "dae/models.hpp"
#include "dae/optim.hpp"
#include "dae/training.hpp"

namespace dae {

enum class ExperimentKind { BaselineAe, BaselineVae, VqAe, DaeAe, DaeVae, DaeVq, Table1, Oracles, Diagnose };

std::string_view experiment_kind_name(ExperimentKind kind);
/// Throws ConfigError("kind") for unknown names.
ExperimentKind parse_experiment_kind(std::string_view name);

bool is_training_kind(ExperimentKind kind);
bool is_dae_kind(ExperimentKind kind);
/// Model family trained by a training kind (AE, VAE or VQ).
ModelKind model_kind_for(ExperimentKind kind);

struct DataConfig {
    MixtureSpec mixture;  // mixture.seed is overwritten by the run seed
    std::size_t train_per_cluster = 1000;
    std::size_t test_per_cluster = 200;
};

struct TrainingConfig {
    std::size_t epochs = 200;  // total over both stages for DAE kinds
    std::size_t batch_size = 128;
    double stage1_fraction = 0.5;
    WeakDecoderMode weak_decoder = WeakDecoderMode::dropout(0.5);
};

struct AnalysisConfig {
    std::size_t n_pairs = 4096;
    std::size_t knn_k = 1;
    /// Complexity CSV cadence in epochs; 0 records only the last epoch of each stage.
    std::size_t complexity_every = 10;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::BaselineVae;
    DataConfig data;
    MlpConfig encoder{{10, 128, 128, 2}, Activation::Tanh};
    MlpConfig decoder{{2, 128, 128, 10}, Activation::Tanh};
    std::size_t codebook_size = 64;
    double beta_kl = 1.0;
    double beta_commit = 0.25;
    AdamHyper optimizer;
    TrainingConfig training;
    AnalysisConfig analysis;
    std::string output_dir = "runs/default";
    std::uint64_t seed = 0;
    std::size_t replications = 10;
    std::string checkpoint;  // diagnose only

    ModelConfig model_config() const;
    DaeConfig dae_config() const;
    SingleStageConfig single_stage_config() const;

    /// Throws ConfigError naming the offending field(s).
    void validate() const;
};

/// Strict parse: unknown keys and wrong types raise ConfigError. Missing keys keep defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace dae
