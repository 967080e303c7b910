#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace dae {

// ---------------------------------------------------------------------------
// Linear autoencoders and PCA. Data matrices are [d x n] (one sample per column).

struct LinearAeSolution {
    Eigen::MatrixXd encoder;  // [d_z x d]
    Eigen::MatrixXd decoder;  // [d x d_z]
    double reconstruction_error = 0.0;
};

/// Least-squares encoder for a fixed decoder: (W2^T W2)^{-1} W2^T.
/// Throws SingularityError when the smallest singular value of W2 is below 1e-10.
Eigen::MatrixXd linear_ae_optimal_encoder(const Eigen::MatrixXd& decoder);

/// Eckart-Young optimum: sum of the d - d_z smallest eigenvalues of X X^T.
double pca_reconstruction_error(const Eigen::MatrixXd& x, int latent_dim);

/// Decoder = top-d_z eigenvectors of X X^T, encoder = its transpose.
LinearAeSolution pca_solution(const Eigen::MatrixXd& x, int latent_dim);

/// ||X - W2 W1 X||_F^2.
double linear_ae_error(const Eigen::MatrixXd& x, const Eigen::MatrixXd& encoder, const Eigen::MatrixXd& decoder);

struct LinearAeTraining {
    int steps = 4000;
    double lr = 1e-2;
    std::uint64_t seed = 0;
};

/// Fits W1, W2 (no biases) by full-batch Adam on ||X - W2 W1 X||_F^2 / n.
LinearAeSolution train_linear_ae(const Eigen::MatrixXd& x, int latent_dim, const LinearAeTraining& options = {});

/// Options for the bounded-encoder experiment. The decoder is parameterized as
/// U diag(s) with orthonormal U; `decoder_singular_values` fixes s.
struct EncoderNormOptions {
    Eigen::VectorXd decoder_singular_values;  // length d_z; empty -> all ones
    int iterations = 10000;
    int restarts = 10;
    std::uint64_t seed = 0;
    double relative_tolerance = 1e-3;
};

struct EncoderNormResult {
    bool achievable = false;   // best_error within relative_tolerance of the PCA optimum
    bool conclusive = true;    // every restart converged
    double best_error = 0.0;
    double pca_optimum = 0.0;
    double witness_bound = 0.0;             // 1 / s_min, norm of the PCA-realizing encoder
    std::vector<double> restart_errors;
};

/// Minimizes ||X - U S W1 X||_F^2 over ||W1||_2 <= bound (projected gradient with
/// spectral clipping) and orthonormal U (closed-form Procrustes response).
EncoderNormResult check_encoder_norm_failure(const Eigen::MatrixXd& x, int latent_dim, double encoder_norm_bound,
                                             const EncoderNormOptions& options = {});

/// Error of the explicit PCA-realizing encoder diag(1/s) U^T paired with decoder U diag(s),
/// where U spans the top-d_z eigenspace of X X^T.
double witness_error(const Eigen::MatrixXd& x, int latent_dim, const Eigen::VectorXd& decoder_singular_values);

// ---------------------------------------------------------------------------
// Cross-dimensional Wasserstein-2 distance between N(0, sigma^2) and N(0, Sigma).

struct GaussianSpec {
    double sigma = 1.0;
    std::vector<double> eigenvalues;  // descending, positive

    void validate() const;
};

/// Infimum over unit projections a of W2(N(0, sigma^2), N(0, a^T Sigma a)), closed form:
/// sqrt(l_d) - sigma below, 0 on [sqrt(l_d), sqrt(l_1)], sigma - sqrt(l_1) above.
double gaussian_dminus_w2(const GaussianSpec& spec);

/// Grid search over a = (cos t, sin t), t = pi i / resolution, i < resolution. With
/// `refine`, a golden-section search then polishes the best cell's neighbourhood.
double numeric_dminus_w2(double sigma, const Eigen::Matrix2d& covariance, int resolution, bool refine = true);

// ---------------------------------------------------------------------------
// Lipschitz-capped monotone transport of U(0, 1) onto N(0, sigma^2).

struct TruncationResult {
    double z_c = 0.0;           // p_x(z_c) = 1 / c
    double tail_mass = 0.0;     // P_x(x < -z_c)
    double support_edge = 0.0;  // z_c + c * tail_mass
    double tv = 0.0;
    std::optional<double> z_c_log_formula;  // sqrt(2 sigma^2 log(c / 2 pi)), when defined
};

double normal_pdf(double x, double sigma);
double normal_cdf(double x, double sigma);

/// Throws DomainError when 1/c exceeds the peak density (no truncation regime).
TruncationResult toy1_truncation(double sigma, double c);

/// Monte Carlo TV between the capped transport and N(0, sigma^2). The map is
/// tabulated by RK4 on dx/du = min(1 / p_x(x), c) from x(1/2) = 0; the estimate is
/// the largest excess P_x(A) - P_hat(A) over annuli A = {t1 < |x| < t2}.
double toy1_monte_carlo_tv(double sigma, double c, std::size_t samples, std::uint64_t seed);

/// Adaptive Simpson quadrature of f on [a, b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth = 50);

}  // namespace dae
