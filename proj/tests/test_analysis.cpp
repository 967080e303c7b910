#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "dae/analysis.hpp"
#include "dae/errors.hpp"
#include "dae/linalg.hpp"
#include "test_util.hpp"

using namespace dae;
using dae::testing::random_tensor;

namespace {

Tensor scaled(const Tensor& t, double s) {
    Tensor out = t;
    for (auto& v : out.values()) v *= s;
    return out;
}

Tensor apply_matrix(const Eigen::MatrixXd& a, const Tensor& x) {
    Tensor out = Tensor::zeros({x.rows(), static_cast<std::size_t>(a.rows())});
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < x.cols(); ++c) s += a(r, static_cast<Eigen::Index>(c)) * x(i, c);
            out(i, static_cast<std::size_t>(r)) = s;
        }
    return out;
}

// Exhaustive 1-NN: first index at the minimum squared distance.
double brute_force_1nn(const Tensor& ref, const std::vector<int>& ref_labels, const Tensor& query,
                       const std::vector<int>& query_labels) {
    std::size_t correct = 0;
    for (std::size_t q = 0; q < query.rows(); ++q) {
        double best = std::numeric_limits<double>::infinity();
        int label = -1;
        for (std::size_t r = 0; r < ref.rows(); ++r) {
            double d = 0.0;
            for (std::size_t c = 0; c < ref.cols(); ++c) d += std::pow(query(q, c) - ref(r, c), 2);
            if (d < best) {
                best = d;
                label = ref_labels[r];
            }
        }
        correct += label == query_labels[q];
    }
    return static_cast<double>(correct) / static_cast<double>(query.rows());
}

Eigen::MatrixXd cosine_distance_oracle(const Tensor& entries) {
    const auto k = static_cast<Eigen::Index>(entries.rows());
    Eigen::MatrixXd m(k, static_cast<Eigen::Index>(entries.cols()));
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = entries(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    m.rowwise().normalize();
    Eigen::MatrixXd d = Eigen::MatrixXd::Ones(k, k) - m * m.transpose();
    d.diagonal().setZero();
    return d;
}

}  // namespace

TEST(Lipschitz, IdentityIsExactlyOne) {
    std::mt19937_64 rng(1);
    const auto x = random_tensor({100, 10}, rng);
    const auto est = lipschitz_complexity([](const Tensor& t) { return t; }, x, 4096, 7);
    EXPECT_EQ(est.value, 1.0);
    EXPECT_EQ(est.n_pairs, 4096u);
    EXPECT_EQ(est.excluded, 0u);
}

TEST(Lipschitz, DoublingIsExactlyTwo) {
    std::mt19937_64 rng(2);
    const auto x = random_tensor({100, 10}, rng);
    EXPECT_EQ(lipschitz_complexity([](const Tensor& t) { return scaled(t, 2.0); }, x, 4096, 7).value, 2.0);
}

TEST(Lipschitz, ScaleCovariance) {
    std::mt19937_64 rng(3);
    const auto x = random_tensor({200, 10}, rng);
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(4, 10);
    auto m = [&](const Tensor& t) {
        Tensor out = apply_matrix(a, t);
        for (auto& v : out.values()) v = std::tanh(v);
        return out;
    };
    const double base = lipschitz_complexity(m, x, 4096, 5).value;
    // Powers of two scale every norm exactly.
    for (double lambda : {0.5, 2.0}) {
        EXPECT_EQ(lipschitz_complexity([&](const Tensor& t) { return scaled(m(t), lambda); }, x, 4096, 5).value,
                  lambda * base);
    }
    const double ten = lipschitz_complexity([&](const Tensor& t) { return scaled(m(t), 10.0); }, x, 4096, 5).value;
    EXPECT_NEAR(ten, 10.0 * base, 1e-13 * 10.0 * base);
}

TEST(Lipschitz, LinearMapMatchesMonteCarlo) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd a(10, 10);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    const auto x = random_tensor({4000, 10}, rng);
    const double est = lipschitz_complexity([&](const Tensor& t) { return apply_matrix(a, t); }, x, 4096, 11).value;

    // x1 - x2 is isotropic Gaussian, so the ratio depends only on a uniform direction.
    double oracle = 0.0;
    const std::size_t draws = 1'000'000;
    Eigen::VectorXd u(10);
    for (std::size_t s = 0; s < draws; ++s) {
        for (Eigen::Index i = 0; i < 10; ++i) u(i) = normal(rng);
        oracle += (a * u).norm() / u.norm();
    }
    oracle /= static_cast<double>(draws);
    EXPECT_NEAR(est, oracle, 0.01 * oracle);
}

TEST(Lipschitz, DuplicatesExcludedAndCounted) {
    Tensor x = Tensor::zeros({4, 2});
    x(2, 0) = 1.0;
    x(3, 0) = 1.0;
    const auto est = lipschitz_ratio(x, x, 100, 3);
    EXPECT_EQ(est.n_pairs, 100u);
    EXPECT_GT(est.excluded, 0u);
    EXPECT_EQ(est.value, 1.0);
}

TEST(Lipschitz, DegenerateInputsRejected) {
    EXPECT_THROW(lipschitz_ratio(Tensor::zeros({1, 2}), Tensor::zeros({1, 2}), 10, 0), ContractError);
    EXPECT_THROW(lipschitz_ratio(Tensor::zeros({5, 2}), Tensor::zeros({5, 2}), 10, 0), ContractError);
    EXPECT_THROW(lipschitz_ratio(Tensor::zeros({5, 2}), Tensor::zeros({5, 2}), 0, 0), ContractError);
    EXPECT_THROW(lipschitz_ratio(Tensor::zeros({5, 2}), Tensor::zeros({4, 2}), 10, 0), DimensionError);
}

TEST(Lipschitz, ModelComplexityUsesQuantizedLatents) {
    ModelConfig c;
    c.kind = ModelKind::Vq;
    c.encoder = {{10, 8, 2}, Activation::Tanh};
    c.decoder = {{2, 8, 10}, Activation::Tanh};
    c.codebook_size = 4;
    const auto model = Model::init(c, 3);
    std::mt19937_64 rng(3);
    const auto x = random_tensor({300, 10}, rng);
    const auto report = model_complexity(model, x, 512, 9);

    const auto z = model.latent(x);
    const auto q = vq_quantize(*model.codebook(), model.encode(x));
    EXPECT_EQ(z.values(), q.z_q.values());
    EXPECT_EQ(report.c_lip_encoder, lipschitz_ratio(x, z, 512, 9).value);
    // With four codes most decoder pairs collapse onto the same latent and are excluded.
    EXPECT_GT(report.excluded_decoder, 0u);
    EXPECT_EQ(report.c_lip_decoder, lipschitz_ratio(z, model.decode(z), 512, 9).value);
}

TEST(Lipschitz, CollapsedCodebookLeavesDecoderUndefined) {
    ModelConfig c;
    c.kind = ModelKind::Vq;
    c.encoder = {{10, 8, 2}, Activation::Tanh};
    c.decoder = {{2, 8, 10}, Activation::Tanh};
    c.codebook_size = 1;
    const auto model = Model::init(c, 3);
    std::mt19937_64 rng(4);
    const auto x = random_tensor({50, 10}, rng);
    const auto report = model_complexity(model, x, 64, 9);
    EXPECT_TRUE(std::isnan(report.c_lip_decoder));
    EXPECT_EQ(report.c_lip_encoder, 0.0);
}

TEST(Knn, SelfQueryIsPerfect) {
    std::mt19937_64 rng(5);
    const auto x = random_tensor({50, 3}, rng);
    std::vector<int> labels(50);
    for (std::size_t i = 0; i < 50; ++i) labels[i] = static_cast<int>(i % 7);
    EXPECT_EQ(knn_accuracy(x, labels, x, labels, 1), 1.0);
}

TEST(Knn, WellSeparatedClusters) {
    std::mt19937_64 rng(6);
    Tensor ref = random_tensor({40, 2}, rng);
    Tensor query = random_tensor({40, 2}, rng);
    std::vector<int> labels(40);
    for (std::size_t i = 0; i < 40; ++i) {
        labels[i] = static_cast<int>(i % 2);
        ref(i, 0) += 100.0 * labels[i];
        query(i, 0) += 100.0 * labels[i];
    }
    EXPECT_EQ(knn_accuracy(ref, labels, query, labels, 1), 1.0);
}

TEST(Knn, MatchesBruteForceOnMixture) {
    MixtureSpec spec;
    spec.seed = 7;
    const auto split = make_toy_dataset(spec, 100, 50);
    EXPECT_EQ(knn_accuracy(split.train.points, split.train.labels, split.test.points, split.test.labels, 1),
              brute_force_1nn(split.train.points, split.train.labels, split.test.points, split.test.labels));
}

TEST(Knn, TieRules) {
    // Query at the origin is equidistant from both references: lower index wins.
    const auto ref = Tensor::matrix(2, 1, {1.0, -1.0});
    const auto query = Tensor::matrix(1, 1, {0.0});
    EXPECT_EQ(knn_accuracy(ref, {5, 3}, query, {5}, 1), 1.0);
    EXPECT_EQ(knn_accuracy(ref, {5, 3}, query, {3}, 1), 0.0);
    // k=2 vote tie goes to the smaller label.
    EXPECT_EQ(knn_accuracy(ref, {5, 3}, query, {3}, 2), 1.0);
}

TEST(Knn, InvariantUnderIsometry) {
    MixtureSpec spec;
    spec.seed = 8;
    const auto split = make_toy_dataset(spec, 50, 20);
    const double base = knn_accuracy(split.train.points, split.train.labels, split.test.points, split.test.labels, 3);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd g(10, 10);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    auto moved = [&](const Tensor& t) {
        Tensor out = apply_matrix(q, t);
        for (std::size_t i = 0; i < out.rows(); ++i) out(i, 0) += 3.0;
        return out;
    };
    EXPECT_EQ(knn_accuracy(moved(split.train.points), split.train.labels, moved(split.test.points), split.test.labels, 3),
              base);
}

TEST(Knn, InvalidInputsRejected) {
    EXPECT_THROW(knn_accuracy(Tensor::zeros({2, 2}), {0, 1}, Tensor::zeros({1, 3}), {0}, 1), ContractError);
    EXPECT_THROW(knn_accuracy(Tensor::zeros({2, 2}), {0, 1}, Tensor::zeros({1, 2}), {0}, 0), ContractError);
}

TEST(Codebook, OrthonormalSpectrum) {
    const std::size_t k = 8;
    Tensor e = Tensor::zeros({k, k});
    for (std::size_t i = 0; i < k; ++i) e(i, i) = 1.0;
    const auto report = codebook_cosine_stats(Codebook{e}, kHistogramBins, k);
    ASSERT_EQ(report.top_eigenvalues.size(), k);
    EXPECT_NEAR(report.top_eigenvalues[0], static_cast<double>(k - 1), 1e-8);
    for (std::size_t i = 1; i < k; ++i) EXPECT_NEAR(report.top_eigenvalues[i], -1.0, 1e-8);
    EXPECT_EQ(report.cosine_histogram[cosine_bin(0.0, kHistogramBins)], k * (k - 1) / 2);
}

TEST(Codebook, DuplicatedRowsCollapse) {
    Tensor e = Tensor::zeros({6, 3});
    for (std::size_t i = 0; i < 6; ++i) {
        e(i, 0) = 0.3 * (i + 1);
        e(i, 1) = -0.6 * (i + 1);
        e(i, 2) = 0.2 * (i + 1);
    }
    const auto report = codebook_cosine_stats(Codebook{e}, kHistogramBins, 6);
    EXPECT_EQ(report.cosine_histogram[cosine_bin(1.0, kHistogramBins)], 15u);
    for (double v : report.top_eigenvalues) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Codebook, EigenvaluesMatchDenseSolver) {
    std::mt19937_64 rng(9);
    const auto cb = Codebook::init(64, 2, rng);
    const auto report = codebook_cosine_stats(cb);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cosine_distance_oracle(cb.entries));
    Eigen::VectorXd expected = solver.eigenvalues().reverse();
    ASSERT_EQ(report.top_eigenvalues.size(), kTopEigenvalues);
    for (std::size_t i = 0; i < kTopEigenvalues; ++i)
        EXPECT_NEAR(report.top_eigenvalues[i], expected(static_cast<Eigen::Index>(i)), 1e-8);
    EXPECT_TRUE(std::is_sorted(report.top_eigenvalues.rbegin(), report.top_eigenvalues.rend()));
    EXPECT_EQ(std::accumulate(report.cosine_histogram.begin(), report.cosine_histogram.end(), std::size_t{0}),
              64u * 63u / 2u);
}

TEST(Codebook, InvariantUnderPositiveRescaling) {
    std::mt19937_64 rng(10);
    auto cb = Codebook::init(16, 3, rng);
    const auto base = codebook_cosine_stats(cb);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    for (std::size_t i = 0; i < 16; ++i) {
        const double s = scale(rng);
        for (std::size_t j = 0; j < 3; ++j) cb.entries(i, j) *= s;
    }
    const auto moved = codebook_cosine_stats(cb);
    EXPECT_EQ(moved.cosine_histogram, base.cosine_histogram);
    for (std::size_t i = 0; i < base.top_eigenvalues.size(); ++i)
        EXPECT_NEAR(moved.top_eigenvalues[i], base.top_eigenvalues[i], 1e-10);
}

TEST(Codebook, ZeroNormCodesExcluded) {
    auto e = Tensor::matrix(3, 2, {1, 0, 0, 0, 0, 1});
    const auto report = codebook_cosine_stats(Codebook{e}, kHistogramBins, 2);
    EXPECT_EQ(report.zero_norm_codes, (std::vector<std::size_t>{1}));
    EXPECT_EQ(std::accumulate(report.cosine_histogram.begin(), report.cosine_histogram.end(), std::size_t{0}), 1u);
    EXPECT_THROW(codebook_cosine_stats(Codebook{Tensor::zeros({3, 2})}), std::exception);
}

TEST(Codebook, HistogramBinEdges) {
    EXPECT_EQ(cosine_bin(-1.0, 101), 0u);
    EXPECT_EQ(cosine_bin(1.0, 101), 100u);
    EXPECT_EQ(cosine_bin(0.0, 101), 50u);
}

TEST(UsageCounts, SinglePointDataset) {
    std::mt19937_64 rng(11);
    const auto cb = Codebook::init(8, 2, rng);
    Tensor z = Tensor::zeros({25, 2});
    for (std::size_t i = 0; i < 25; ++i) {
        z(i, 0) = 0.1;
        z(i, 1) = -0.2;
    }
    const auto counts = code_usage_counts(cb, z);
    ASSERT_EQ(counts.size(), 8u);
    EXPECT_EQ(counts[0], 25u);
    for (std::size_t i = 1; i < 8; ++i) EXPECT_EQ(counts[i], 0u);
}

TEST(UsageCounts, ConservationThroughEncoder) {
    std::mt19937_64 rng(12);
    const auto cb = Codebook::init(32, 2, rng);
    const auto x = random_tensor({777, 5}, rng);
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(2, 5);
    const auto counts = code_usage_counts([&](const Tensor& t) { return apply_matrix(a, t); }, cb, x);
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), 777u);
    EXPECT_TRUE(std::is_sorted(counts.rbegin(), counts.rend()));
}

TEST(UsageCounts, UniformLatentsOnGridCodebook) {
    // 8x8 grid of cell centers on [0,1]^2; uniform latents land evenly.
    Tensor grid = Tensor::zeros({64, 2});
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) {
            grid(i * 8 + j, 0) = (i + 0.5) / 8.0;
            grid(i * 8 + j, 1) = (j + 0.5) / 8.0;
        }
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 100'000;
    Tensor z = Tensor::zeros({n, 2});
    for (auto& v : z.values()) v = u(rng);
    const auto counts = code_usage_counts(Codebook{grid}, z);
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), n);
    EXPECT_LT(static_cast<double>(counts.front()) / static_cast<double>(counts.back()), 2.0);
}

TEST(Linalg, JacobiMatchesEigenSolver) {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> normal;
    for (int n : {2, 5, 12, 30}) {
        Eigen::MatrixXd g(n, n);
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
        const Eigen::MatrixXd s = g + g.transpose();
        const auto mine = jacobi_eigen(s);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(s);
        const Eigen::VectorXd expected = ref.eigenvalues().reverse();
        EXPECT_LT((mine.values - expected).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT((s * mine.vectors - mine.vectors * mine.values.asDiagonal()).norm(), 1e-9 * s.norm());
    }
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
    asym(0, 1) = 1.0;
    EXPECT_THROW(jacobi_eigen(asym), ContractError);
}

TEST(Linalg, SingularValuesMatchEigenSvd) {
    std::mt19937_64 rng(15);
    std::normal_distribution<double> normal;
    for (auto [r, c] : {std::pair{3, 3}, std::pair{7, 4}, std::pair{4, 9}}) {
        Eigen::MatrixXd a(r, c);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
        const Eigen::VectorXd expected = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
        const Eigen::VectorXd mine = singular_values(a);
        ASSERT_EQ(mine.size(), expected.size());
        EXPECT_LT((mine - expected).cwiseAbs().maxCoeff(), 1e-12 * expected(0));
        EXPECT_NEAR(spectral_norm(a), expected(0), 1e-12 * expected(0));
    }
}
