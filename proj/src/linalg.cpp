#include "dae/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "dae/errors.hpp"

namespace dae {

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& symmetric, double tol, int max_sweeps) {
    if (symmetric.rows() != symmetric.cols()) throw DimensionError("jacobi_eigen: matrix must be square");
    const Eigen::Index n = symmetric.rows();
    const double scale = std::max(symmetric.norm(), 1e-300);
    if ((symmetric - symmetric.transpose()).norm() > 1e-12 * scale) {
        throw ContractError("jacobi_eigen: matrix is not symmetric");
    }
    if (!symmetric.allFinite()) throw NumericError("jacobi_eigen: non-finite entry");

    Eigen::MatrixXd a = symmetric;
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    int sweep = 0;
    auto off_norm = [&] {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    for (; sweep < max_sweeps && off_norm() > tol * scale; ++sweep) {
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Rotation angle that annihilates a(p, q).
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (off_norm() > tol * scale) throw NumericError("jacobi_eigen: no convergence within the sweep budget");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
    }
    out.sweeps = sweep;
    return out;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
    // One-sided (Hestenes) Jacobi: orthogonalize columns pairwise; the final
    // column norms are the singular values. Keeps small values accurate.
    Eigen::MatrixXd u = a.rows() >= a.cols() ? a : Eigen::MatrixXd(a.transpose());
    if (!u.allFinite()) throw NumericError("singular_values: non-finite entry");
    const Eigen::Index n = u.cols();
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double alpha = u.col(p).squaredNorm();
                const double beta = u.col(q).squaredNorm();
                const double gamma = u.col(p).dot(u.col(q));
                if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                const Eigen::VectorXd up = u.col(p);
                u.col(p) = c * up - s * u.col(q);
                u.col(q) = s * up + c * u.col(q);
            }
        }
        if (!rotated) break;
    }
    Eigen::VectorXd sv(n);
    for (Eigen::Index i = 0; i < n; ++i) sv(i) = u.col(i).norm();
    std::sort(sv.data(), sv.data() + n, std::greater<>());
    return sv;
}

double spectral_norm(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    return singular_values(a)(0);
}

}  // namespace dae
