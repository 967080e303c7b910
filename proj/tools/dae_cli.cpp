// Command-line front end: train, dae, table1, oracles, diagnose.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "dae/config.hpp"
#include "dae/errors.hpp"
#include "dae/experiment.hpp"

namespace {

struct SharedFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<std::size_t> replications;
    std::string checkpoint;
    bool quiet = false;
};

void add_shared(CLI::App* cmd, SharedFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON experiment config");
    cmd->add_option("--seed", flags.seed, "Base seed (overrides the config)");
    cmd->add_option("--out-dir", flags.out_dir, "Output directory (overrides the config)");
    cmd->add_option("--replications", flags.replications, "Replication count (overrides the config)");
    cmd->add_flag("--quiet", flags.quiet, "Suppress progress output");
}

bool kind_allowed(const std::string& command, dae::ExperimentKind kind) {
    using dae::ExperimentKind;
    if (command == "train") return dae::is_training_kind(kind) && !dae::is_dae_kind(kind);
    if (command == "dae") return dae::is_dae_kind(kind);
    if (command == "table1") return kind == ExperimentKind::Table1;
    if (command == "oracles") return kind == ExperimentKind::Oracles;
    return kind == ExperimentKind::Diagnose;
}

dae::ExperimentKind default_kind(const std::string& command) {
    using dae::ExperimentKind;
    if (command == "train") return ExperimentKind::BaselineVae;
    if (command == "dae") return ExperimentKind::DaeVae;
    if (command == "table1") return ExperimentKind::Table1;
    if (command == "oracles") return ExperimentKind::Oracles;
    return ExperimentKind::Diagnose;
}

int run(const std::string& command, const SharedFlags& flags) {
    dae::ExperimentConfig config;
    try {
        if (!flags.config_path.empty()) {
            config = dae::load_config(flags.config_path);
            if (!kind_allowed(command, config.kind)) {
                throw dae::ConfigError("kind", "experiment kind '" + std::string(dae::experiment_kind_name(config.kind)) +
                                                   "' cannot run under the '" + command + "' subcommand");
            }
        } else {
            config.kind = default_kind(command);
            config.output_dir = "runs/" + command;
        }
    } catch (const dae::ConfigError& e) {
        if (!flags.out_dir.empty()) dae::write_error_record(flags.out_dir, dae::kExitConfig, "config", e.what(), e.field());
        std::cerr << "config error: " << e.what() << '\n';
        return dae::kExitConfig;
    }
    if (flags.seed) config.seed = *flags.seed;
    if (!flags.out_dir.empty()) config.output_dir = flags.out_dir;
    if (flags.replications) config.replications = *flags.replications;
    if (!flags.checkpoint.empty()) config.checkpoint = flags.checkpoint;

    const auto outcome = dae::run_experiment(config, flags.quiet ? nullptr : &std::cerr);
    std::cout << outcome.summary.dump(2) << '\n';
    if (outcome.exit_code != dae::kExitOk) {
        std::cerr << "exit " << outcome.exit_code << "; details in " << config.output_dir << "/error.json\n";
    }
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decoupled autoencoder experiments on toy Gaussian mixtures"};
    app.require_subcommand(1);
    app.set_version_flag("--version", dae::kVersion);

    SharedFlags flags;
    auto* train = app.add_subcommand("train", "Single-stage training (baseline_ae, baseline_vae, vq_ae)");
    auto* two_stage = app.add_subcommand("dae", "Two-stage decoupled training (dae_ae, dae_vae, dae_vq)");
    auto* table1 = app.add_subcommand("table1", "Reproduce the toy classification-accuracy table");
    auto* oracles = app.add_subcommand("oracles", "Run the closed-form and brute-force oracle suite");
    auto* diagnose = app.add_subcommand("diagnose", "Analyse a saved checkpoint");
    for (auto* cmd : {train, two_stage, table1, oracles, diagnose}) add_shared(cmd, flags);
    diagnose->add_option("--checkpoint", flags.checkpoint, "Checkpoint JSON written by train or dae");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : dae::kExitConfig;
    }
    return run(app.get_subcommands().front()->get_name(), flags);
}
