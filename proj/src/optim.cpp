#include "dae/optim.hpp"

#include <algorithm>
#include <cmath>

#include "dae/errors.hpp"

namespace dae {

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
        throw ContractError("adam_update: params, grads and moment arrays must have equal length");
    }
    const auto& h = state.hyper;
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(h.beta1, t);
    const double c2 = 1.0 - std::pow(h.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
        state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
}

Adam::Adam(std::vector<Tensor*> params, AdamHyper hyper) : params_(std::move(params)) {
    states_.reserve(params_.size());
    for (auto* p : params_) states_.emplace_back(p->size(), hyper);
}

void Adam::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& g = params_[i]->grad_buffer();
        adam_update(params_[i]->data(), g, states_[i]);
        std::fill(g.begin(), g.end(), 0.0);
    }
}

void Adam::zero_grad() {
    for (auto* p : params_) p->zero_grad();
}

double finite_diff_check(const ScalarFn& f, std::span<const double> params, std::span<const double> grad,
                         double h) {
    if (!(h > 0.0)) throw ContractError("finite_diff_check: step h must be positive");
    if (params.size() != grad.size()) throw ContractError("finite_diff_check: gradient length mismatch");
    std::vector<double> p(params.begin(), params.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + h;
        const double up = f(p);
        p[i] = saved - h;
        const double down = f(p);
        p[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(numeric - grad[i]) / std::max(std::abs(grad[i]), 1e-8));
    }
    return worst;
}

}  // namespace dae
