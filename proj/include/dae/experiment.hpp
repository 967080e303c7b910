#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dae/analysis.hpp"
#include "dae/config.hpp"
#include "dae/data.hpp"
#include "dae/models.hpp"

namespace dae {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitAcceptance = 4;

inline constexpr const char* kVersion = "0.1.0";

/// Files written under one output directory, each recorded with its SHA-256.
class ArtifactSet {
public:
    explicit ArtifactSet(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    void write(const std::string& relative, std::string_view contents);
    nlohmann::json list() const;

private:
    std::filesystem::path root_;
    std::vector<std::pair<std::string, std::string>> entries_;  // path, sha256
    std::vector<std::size_t> sizes_;
};

/// Split for a run seed: the mixture seed is the run seed.
TrainTestSplit make_run_dataset(const DataConfig& data, std::uint64_t seed);

struct ModelEvaluation {
    double latent_accuracy = 0.0;          // percent, 1-NN of test latents against train latents
    double reconstruction_accuracy = 0.0;  // percent, same on reconstructions
    double reconstruction_mse = 0.0;       // test set, mean over elements
    ComplexityReport complexity;
};

ModelEvaluation evaluate_model(const Model& model, const TrainTestSplit& split, const AnalysisConfig& analysis,
                               std::uint64_t seed);

/// Evaluation plus codebook diagnostics for VQ models.
nlohmann::json analysis_json(const Model& model, const TrainTestSplit& split, const AnalysisConfig& analysis,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------

struct Table1Row {
    std::string name;
    std::string metric;  // "latent_accuracy" or "reconstruction_accuracy"
    std::vector<double> values;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1), percentage points
    std::optional<double> reference_mean;
    std::optional<double> reference_std;
    std::optional<bool> within_soft_tolerance;  // |mean - reference_mean| <= 10
};

struct DirectionalCheck {
    std::string name;
    std::string description;
    std::size_t wins = 0;
    std::size_t total = 0;
    std::size_t required = 0;
    bool gating = true;
    bool passed = false;
};

struct Table1Replication {
    std::uint64_t seed = 0;
    bool completed = false;
    std::string error;
    double latent_64_128 = 0.0;
    double latent_128_64 = 0.0;
    double recon_single = 0.0;
    double recon_dae = 0.0;
    double recon_dae_halved = 0.0;
    ComplexityReport clip_single;
    ComplexityReport clip_dae;
    double seconds = 0.0;
};

struct Table1Result {
    std::uint64_t base_seed = 0;
    std::size_t replications = 0;
    bool partial = false;
    std::vector<Table1Replication> runs;
    std::vector<Table1Row> rows;
    std::vector<DirectionalCheck> checks;
    double seconds = 0.0;

    bool gating_checks_passed() const;
    const DirectionalCheck& check(std::string_view name) const;
    nlohmann::json to_json() const;
    std::string rows_csv() const;
    std::string replications_csv() const;
};

/// |C_Lip(f) - 1| + |C_Lip(g) - 1|.
double complexity_deviation(const ComplexityReport& report);

using Table1Progress = std::function<void(const Table1Replication&)>;

/// Replication i uses seed config.seed + i for data and all five models.
/// Model widths come from the table; depth, activation, data and training
/// settings come from `config`.
Table1Result reproduce_table1(const ExperimentConfig& config, const Table1Progress& progress = {});

// ---------------------------------------------------------------------------

struct ExperimentOutcome {
    int exit_code = kExitOk;
    nlohmann::json summary;
};

/// Writes error.json {status, exit_code, error, message, field?} into `dir`; best effort.
void write_error_record(const std::filesystem::path& dir, int code, const std::string& kind, const std::string& message,
                        const std::string& field = {});

/// Runs the configured experiment and writes its artifacts plus manifest.json
/// under config.output_dir. Failures produce error.json and a nonzero code.
ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream* progress = nullptr);

}  // namespace dae
