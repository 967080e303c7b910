#include "dae/theory.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "dae/autodiff.hpp"
#include "dae/errors.hpp"
#include "dae/optim.hpp"
#include "dae/linalg.hpp"
#include "dae/random.hpp"

namespace dae {

// --- linear autoencoders ---------------------------------------------------

Eigen::MatrixXd linear_ae_optimal_encoder(const Eigen::MatrixXd& decoder) {
    if (decoder.cols() == 0 || decoder.rows() < decoder.cols()) {
        throw SingularityError("decoder must be tall with full column rank");
    }
    const auto sv = singular_values(decoder);
    if (sv(sv.size() - 1) < 1e-10) {
        throw SingularityError("decoder is rank deficient (smallest singular value " + std::to_string(sv(sv.size() - 1)) +
                               ")");
    }
    const Eigen::MatrixXd gram = decoder.transpose() * decoder;
    return gram.ldlt().solve(decoder.transpose());
}

double pca_reconstruction_error(const Eigen::MatrixXd& x, int latent_dim) {
    const auto d = static_cast<int>(x.rows());
    if (latent_dim < 1 || latent_dim > d) throw ContractError("pca: latent_dim must lie in [1, d]");
    const auto eig = jacobi_eigen(x * x.transpose());
    double tail = 0.0;
    for (int i = latent_dim; i < d; ++i) tail += eig.values(i);
    return std::max(tail, 0.0);
}

LinearAeSolution pca_solution(const Eigen::MatrixXd& x, int latent_dim) {
    const auto d = static_cast<int>(x.rows());
    if (latent_dim < 1 || latent_dim > d) throw ContractError("pca: latent_dim must lie in [1, d]");
    const auto eig = jacobi_eigen(x * x.transpose());
    LinearAeSolution s;
    s.decoder = eig.vectors.leftCols(latent_dim);
    s.encoder = s.decoder.transpose();
    s.reconstruction_error = linear_ae_error(x, s.encoder, s.decoder);
    return s;
}

double linear_ae_error(const Eigen::MatrixXd& x, const Eigen::MatrixXd& encoder, const Eigen::MatrixXd& decoder) {
    if (encoder.cols() != x.rows() || decoder.cols() != encoder.rows() || decoder.rows() != x.rows()) {
        throw DimensionError("linear_ae_error: encoder " + std::to_string(encoder.rows()) + "x" +
                             std::to_string(encoder.cols()) + ", decoder " + std::to_string(decoder.rows()) + "x" +
                             std::to_string(decoder.cols()) + " do not compose with data of dimension " +
                             std::to_string(x.rows()));
    }
    return (x - decoder * (encoder * x)).squaredNorm();
}

LinearAeSolution train_linear_ae(const Eigen::MatrixXd& x, int latent_dim, const LinearAeTraining& options) {
    const auto d = static_cast<std::size_t>(x.rows());
    const auto n = static_cast<std::size_t>(x.cols());
    if (latent_dim < 1 || static_cast<std::size_t>(latent_dim) > d) throw ContractError("latent_dim must lie in [1, d]");
    if (n == 0) throw ContractError("train_linear_ae: no samples");
    const auto dz = static_cast<std::size_t>(latent_dim);

    Tensor data = Tensor::zeros({n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) data(i, j) = x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));

    std::mt19937_64 rng(derive_seed(options.seed, 0x1ae));
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor w1 = Tensor::zeros({dz, d}, true);
    Tensor w2 = Tensor::zeros({d, dz}, true);
    for (auto& v : w1.values()) v = normal(rng) / std::sqrt(static_cast<double>(d));
    for (auto& v : w2.values()) v = normal(rng) / std::sqrt(static_cast<double>(dz));
    AdamHyper hyper;
    hyper.lr = options.lr;
    Adam adam({&w1, &w2}, hyper);

    for (int step = 0; step < options.steps; ++step) {
        Graph g;
        auto input = g.constant(data);
        auto z = linear(g.parameter(w1), g.constant(Tensor::zeros({dz})), input);
        auto recon = linear(g.parameter(w2), g.constant(Tensor::zeros({d})), z);
        auto loss = scale(sum(squared_error(recon, input)), 1.0 / static_cast<double>(n));
        g.backward(loss);
        adam.step();
    }

    LinearAeSolution s;
    s.encoder.resize(latent_dim, static_cast<Eigen::Index>(d));
    s.decoder.resize(static_cast<Eigen::Index>(d), latent_dim);
    for (std::size_t i = 0; i < dz; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            s.encoder(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w1(i, j);
            s.decoder(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w2(j, i);
        }
    s.reconstruction_error = linear_ae_error(x, s.encoder, s.decoder);
    return s;
}

// --- bounded encoder -------------------------------------------------------

namespace {

Eigen::MatrixXd clip_spectral_norm(const Eigen::MatrixXd& w, double bound) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = svd.singularValues().cwiseMin(bound);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

// argmax_U tr(U^T M) over orthonormal columns.
Eigen::MatrixXd procrustes(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

double witness_error(const Eigen::MatrixXd& x, int latent_dim, const Eigen::VectorXd& decoder_singular_values) {
    const auto pca = pca_solution(x, latent_dim);
    const Eigen::MatrixXd decoder = pca.decoder * decoder_singular_values.asDiagonal();
    const Eigen::MatrixXd encoder = decoder_singular_values.cwiseInverse().asDiagonal() * pca.decoder.transpose();
    return linear_ae_error(x, encoder, decoder);
}

EncoderNormResult check_encoder_norm_failure(const Eigen::MatrixXd& x, int latent_dim, double encoder_norm_bound,
                                             const EncoderNormOptions& options) {
    if (!(encoder_norm_bound > 0.0)) throw ContractError("encoder norm bound must be positive");
    const auto d = static_cast<int>(x.rows());
    if (latent_dim < 1 || latent_dim > d) throw ContractError("latent_dim must lie in [1, d]");
    if (options.iterations < 1 || options.restarts < 1) throw ContractError("need at least one iteration and restart");

    Eigen::VectorXd s = options.decoder_singular_values.size() == 0 ? Eigen::VectorXd::Ones(latent_dim)
                                                                    : options.decoder_singular_values;
    if (s.size() != latent_dim || s.minCoeff() <= 0.0) {
        throw ContractError("decoder singular values must be d_z positive numbers");
    }
    const Eigen::MatrixXd gram = x * x.transpose();
    const double lambda_max = jacobi_eigen(gram).values(0);
    const double step = 1.0 / (2.0 * s.maxCoeff() * s.maxCoeff() * std::max(lambda_max, 1e-300));
    const auto S = s.asDiagonal();
    const double total = gram.trace();

    // With U^T U = I: ||X - U S W X||^2 = tr(C) - 2 tr(U^T C W^T S) + tr(S W C W^T S).
    auto error = [&](const Eigen::MatrixXd& u, const Eigen::MatrixXd& w) {
        const Eigen::MatrixXd sw = S * w;
        return total - 2.0 * (u.transpose() * gram * sw.transpose()).trace() + (sw * gram * sw.transpose()).trace();
    };

    EncoderNormResult result;
    result.pca_optimum = pca_reconstruction_error(x, latent_dim);
    result.witness_bound = 1.0 / s.minCoeff();
    result.best_error = std::numeric_limits<double>::infinity();

    std::mt19937_64 rng(derive_seed(options.seed, 0x7e0));
    std::normal_distribution<double> normal(0.0, 1.0);
    const int window = std::max(1, options.iterations / 20);

    for (int r = 0; r < options.restarts; ++r) {
        Eigen::MatrixXd w(latent_dim, d);
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = normal(rng) / std::sqrt(static_cast<double>(d));
        w = clip_spectral_norm(w, encoder_norm_bound);
        Eigen::MatrixXd u = procrustes(gram * w.transpose() * S);

        double err = error(u, w);
        double err_window_start = err;
        bool converged = false;
        for (int it = 1; it <= options.iterations; ++it) {
            const Eigen::MatrixXd grad = -2.0 * S * (u.transpose() * gram - S * w * gram);
            w = clip_spectral_norm(w - step * grad, encoder_norm_bound);
            u = procrustes(gram * w.transpose() * S);
            err = error(u, w);
            if (it % window == 0) {
                converged = std::abs(err_window_start - err) <= 1e-12 * std::max(1.0, std::abs(err));
                err_window_start = err;
            }
        }
        // Re-evaluate directly against the data to avoid trace round-off.
        err = (x - u * S * w * x).squaredNorm();
        result.restart_errors.push_back(err);
        result.best_error = std::min(result.best_error, err);
        result.conclusive = result.conclusive && converged;
    }
    result.achievable =
        result.best_error <= result.pca_optimum + options.relative_tolerance * std::max(result.pca_optimum, 1e-300);
    return result;
}

// --- Gaussian cross-dimensional W2 ------------------------------------------

void GaussianSpec::validate() const {
    if (!(sigma >= 0.0)) throw ContractError("sigma must be non-negative");
    if (eigenvalues.empty()) throw ContractError("need at least one eigenvalue");
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (!(eigenvalues[i] > 0.0)) throw ContractError("eigenvalues must be positive");
        if (i > 0 && eigenvalues[i] > eigenvalues[i - 1]) throw ContractError("eigenvalues must be sorted descending");
    }
}

double gaussian_dminus_w2(const GaussianSpec& spec) {
    spec.validate();
    const double lo = std::sqrt(spec.eigenvalues.back());
    const double hi = std::sqrt(spec.eigenvalues.front());
    if (spec.sigma < lo) return lo - spec.sigma;
    if (spec.sigma > hi) return spec.sigma - hi;
    return 0.0;
}

double numeric_dminus_w2(double sigma, const Eigen::Matrix2d& covariance, int resolution, bool refine) {
    if (resolution < 3) throw ContractError("numeric_dminus_w2: grid resolution must be at least 3");
    if (!(sigma >= 0.0)) throw ContractError("sigma must be non-negative");
    if (std::abs(covariance(0, 1) - covariance(1, 0)) > 1e-12 * covariance.norm()) {
        throw ContractError("covariance must be symmetric");
    }
    const double det = covariance(0, 0) * covariance(1, 1) - covariance(0, 1) * covariance(1, 0);
    if (!(covariance(0, 0) > 0.0) || !(det > 0.0)) throw ContractError("covariance must be positive definite");

    auto w2 = [&](double t) {
        const double c = std::cos(t);
        const double s = std::sin(t);
        const double var = c * c * covariance(0, 0) + 2.0 * c * s * covariance(0, 1) + s * s * covariance(1, 1);
        return std::abs(sigma - std::sqrt(var));
    };
    const double step = std::numbers::pi / resolution;
    double best = std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 0; i < resolution; ++i) {
        const double v = w2(step * i);
        if (v < best) {
            best = v;
            best_i = i;
        }
    }
    if (!refine) return best;

    // On a fine enough grid the objective is unimodal across the two cells next to the best node.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = step * (best_i - 1);
    double b = step * (best_i + 1);
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = w2(x1);
    double f2 = w2(x2);
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = w2(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = w2(x2);
        }
    }
    return std::min({best, f1, f2});
}

// --- truncation toy ----------------------------------------------------------

double normal_pdf(double x, double sigma) {
    return std::exp(-0.5 * (x / sigma) * (x / sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double normal_cdf(double x, double sigma) { return 0.5 * std::erfc(-x / (sigma * std::numbers::sqrt2)); }

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
    if (b <= a) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

double toy1_monte_carlo_tv(double sigma, double c, std::size_t samples, std::uint64_t seed) {
    if (!(sigma > 0.0) || !(c > 0.0)) throw ContractError("toy1_monte_carlo_tv: sigma and c must be positive");
    if (samples == 0) throw ContractError("toy1_monte_carlo_tv: need at least one sample");

    // x(1/2 + v) for v on a uniform grid over [0, 1/2].
    constexpr std::size_t kSteps = 200000;
    const double h = 0.5 / kSteps;
    auto slope = [&](double x) { return std::min(1.0 / normal_pdf(x, sigma), c); };
    std::vector<double> table(kSteps + 1, 0.0);
    for (std::size_t i = 0; i < kSteps; ++i) {
        const double x = table[i];
        const double k1 = slope(x);
        const double k2 = slope(x + 0.5 * h * k1);
        const double k3 = slope(x + 0.5 * h * k2);
        const double k4 = slope(x + h * k3);
        table[i + 1] = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    const double bin = sigma / 200.0;
    const std::size_t bins = static_cast<std::size_t>(std::ceil(std::max(12.0 * sigma, table.back() + sigma) / bin));
    std::vector<double> hist(bins, 0.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 0.5);
    for (std::size_t s = 0; s < samples; ++s) {
        const double pos = uniform(rng) / h;
        const auto i = std::min(static_cast<std::size_t>(pos), kSteps - 1);
        const double frac = pos - static_cast<double>(i);
        const double ax = table[i] + frac * (table[i + 1] - table[i]);
        ++hist[std::min(static_cast<std::size_t>(ax / bin), bins - 1)];
    }

    // Kadane over contiguous bins of |x|; the last bin extends to infinity.
    double best = 0.0;
    double run = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double lo = static_cast<double>(b) * bin;
        const double hi_tail = b + 1 == bins ? 0.0 : 2.0 * normal_cdf(-static_cast<double>(b + 1) * bin, sigma);
        const double exact = 2.0 * normal_cdf(-lo, sigma) - hi_tail;
        const double excess = exact - hist[b] / static_cast<double>(samples);
        run = std::max(run + excess, excess);
        best = std::max(best, run);
    }
    return best;
}

TruncationResult toy1_truncation(double sigma, double c) {
    if (!(sigma > 0.0) || !(c > 0.0)) throw ContractError("toy1_truncation: sigma and c must be positive");
    const double level = 1.0 / c;
    const double peak = normal_pdf(0.0, sigma);
    if (level > peak * (1.0 + 1e-15)) {
        throw DomainError("no truncation regime: 1/c exceeds the peak density");
    }

    TruncationResult r;
    // p_x is decreasing on [0, inf): bisect p_x(z) - 1/c.
    double lo = 0.0;
    double hi = 20.0 * sigma;
    if (normal_pdf(lo, sigma) <= level) {
        hi = 0.0;
    } else {
        for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            (normal_pdf(mid, sigma) > level ? lo : hi) = mid;
        }
    }
    r.z_c = 0.5 * (lo + hi);
    r.tail_mass = normal_cdf(-r.z_c, sigma);
    r.support_edge = r.z_c + c * r.tail_mass;
    if (c > 2.0 * std::numbers::pi) r.z_c_log_formula = std::sqrt(2.0 * sigma * sigma * std::log(c / (2.0 * std::numbers::pi)));

    const double z_c = r.z_c;
    const double edge = r.support_edge;
    auto pushforward = [=](double x) {
        const double ax = std::abs(x);
        if (ax <= z_c) return normal_pdf(x, sigma);
        if (ax <= edge) return level;
        return 0.0;
    };
    auto positive_gap = [&](double x) { return std::max(normal_pdf(x, sigma) - pushforward(x), 0.0); };

    // Symmetric: integrate [0, inf) piecewise on the density's breakpoints and double.
    const double tol = 1e-15;
    const double far = edge + 40.0 * sigma;
    double half = adaptive_simpson(positive_gap, 0.0, z_c, tol);
    half += adaptive_simpson(positive_gap, z_c, edge, tol);
    // The gap vanishes at the edge itself, so seed the tail with panels to keep
    // Simpson's first estimate from accepting a spurious zero.
    constexpr int kTailPanels = 160;
    const double panel = (far - edge) / kTailPanels;
    for (int i = 0; i < kTailPanels; ++i) {
        half += adaptive_simpson(positive_gap, edge + i * panel, edge + (i + 1) * panel, tol);
    }
    r.tv = std::clamp(2.0 * half, 0.0, 1.0);
    return r;
}

}  // namespace dae
