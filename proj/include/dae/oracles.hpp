#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "dae/theory.hpp"

namespace dae {

struct OracleCheck {
    std::string name;
    bool passed = false;
    /// Largest deviation observed; NaN when the check has no numeric comparison.
    double residual = 0.0;
    double tolerance = 0.0;
    nlohmann::json inputs = nlohmann::json::object();
    std::string detail;
};

struct OracleReport {
    std::vector<OracleCheck> checks;

    bool passed() const;
    std::vector<std::string> failing() const;
    nlohmann::json to_json() const;
};

using DminusFn = std::function<double(const GaussianSpec&)>;

struct OracleSuiteOptions {
    std::uint64_t seed = 20240501;
    /// Closed form under test; replaced by fixtures to check mutation sensitivity.
    DminusFn dminus = gaussian_dminus_w2;
    /// Monte Carlo sample count for the truncation cross-check.
    std::size_t mc_samples = 10'000'000;
    /// Random instances for the trained linear-AE equivalence check.
    int linear_ae_instances = 50;
};

OracleReport run_oracle_suite(const OracleSuiteOptions& options = {});

}  // namespace dae
