#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dae/tensor.hpp"

namespace dae {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
    AdamHyper hyper;

    AdamState() = default;
    AdamState(std::size_t n, AdamHyper h) : m(n, 0.0), v(n, 0.0), hyper(h) {}
};

/// One bias-corrected Adam step, in place. Throws ContractError on length mismatch.
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state);

/// Adam over a fixed list of tensors; one state per tensor.
class Adam {
public:
    Adam(std::vector<Tensor*> params, AdamHyper hyper);

    /// Applies the accumulated grads, then zeroes them.
    void step();
    void zero_grad();
    std::uint64_t steps() const noexcept { return states_.empty() ? 0 : states_.front().t; }

private:
    std::vector<Tensor*> params_;
    std::vector<AdamState> states_;
};

/// Analytic gradient supplied alongside the scalar objective it differentiates.
using ScalarFn = std::function<double(std::span<const double>)>;

/// max_i |central_diff_i - grad_i| / max(|grad_i|, 1e-8). Throws ContractError for h <= 0.
double finite_diff_check(const ScalarFn& f, std::span<const double> params, std::span<const double> grad,
                         double h = 1e-5);

}  // namespace dae
