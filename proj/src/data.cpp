#include "dae/data.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "dae/errors.hpp"

namespace dae {

void MixtureSpec::validate() const {
    if (num_clusters < 1) throw ContractError("num_clusters must be positive");
    if (!(radius > 0.0)) throw ContractError("radius must be positive");
    if (!(variance >= 0.0)) throw ContractError("variance must be non-negative");
    if (intrinsic_dim < 2) throw ContractError("intrinsic_dim must be at least 2");
    if (ambient_dim < intrinsic_dim) throw ContractError("ambient_dim must be >= intrinsic_dim");
}

std::vector<double> cluster_center(const MixtureSpec& spec, int k) {
    std::vector<double> c(static_cast<std::size_t>(spec.intrinsic_dim), 0.0);
    const double angle = 2.0 * std::numbers::pi * k / spec.num_clusters;
    c[0] = spec.radius * std::cos(angle);
    c[1] = spec.radius * std::sin(angle);
    return c;
}

LabeledDataset sample_mixture(const MixtureSpec& spec, std::size_t n_per_cluster) {
    spec.validate();
    if (n_per_cluster < 1) throw ContractError("n_per_cluster must be at least 1");
    const auto dim = static_cast<std::size_t>(spec.intrinsic_dim);
    const auto n = n_per_cluster * static_cast<std::size_t>(spec.num_clusters);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double stddev = std::sqrt(spec.variance);

    std::vector<double> points(n * dim);
    std::vector<int> labels(n);
    std::size_t row = 0;
    for (int k = 0; k < spec.num_clusters; ++k) {
        const auto center = cluster_center(spec, k);
        for (std::size_t i = 0; i < n_per_cluster; ++i, ++row) {
            for (std::size_t j = 0; j < dim; ++j) points[row * dim + j] = center[j] + stddev * normal(rng);
            labels[row] = k;
        }
    }
    return {Tensor::matrix(n, dim, std::move(points)), std::move(labels)};
}

OrthogonalEmbedding make_embedding(int intrinsic_dim, int ambient_dim, std::uint64_t seed) {
    if (intrinsic_dim < 1 || ambient_dim < intrinsic_dim) {
        throw ContractError("make_embedding: need 1 <= intrinsic_dim <= ambient_dim, got " +
                            std::to_string(intrinsic_dim) + " and " + std::to_string(ambient_dim));
    }
    const auto rows = static_cast<std::size_t>(ambient_dim);
    const auto cols = static_cast<std::size_t>(intrinsic_dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Column-major scratch for Gram-Schmidt.
    std::vector<std::vector<double>> q(cols, std::vector<double>(rows));
    for (auto& column : q) {
        for (auto& v : column) v = normal(rng);
    }
    for (std::size_t j = 0; j < cols; ++j) {
        // Two passes of classical Gram-Schmidt ("twice is enough").
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < j; ++i) {
                double dot = 0.0;
                for (std::size_t r = 0; r < rows; ++r) dot += q[i][r] * q[j][r];
                for (std::size_t r = 0; r < rows; ++r) q[j][r] -= dot * q[i][r];
            }
        }
        double norm = 0.0;
        for (double v : q[j]) norm += v * v;
        norm = std::sqrt(norm);
        if (!(norm > 1e-12)) throw NumericError("make_embedding: degenerate random draw");
        for (auto& v : q[j]) v /= norm;
    }

    std::vector<double> basis(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) basis[r * cols + c] = q[c][r];
    }
    return {Tensor::matrix(rows, cols, std::move(basis))};
}

LabeledDataset embed(const LabeledDataset& data, const OrthogonalEmbedding& embedding) {
    const auto& a = embedding.basis;
    if (data.dim() != a.cols()) {
        throw ContractError("embed: data dimension " + std::to_string(data.dim()) + " does not match embedding input " +
                            std::to_string(a.cols()));
    }
    const auto n = data.size();
    const auto out_dim = a.rows();
    const auto in_dim = a.cols();
    std::vector<double> out(n * out_dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < out_dim; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < in_dim; ++c) acc += a(r, c) * data.points(i, c);
            out[i * out_dim + r] = acc;
        }
    }
    return {Tensor::matrix(n, out_dim, std::move(out)), data.labels};
}

void write_dataset_csv(std::ostream& out, const LabeledDataset& data) {
    const auto dim = data.dim();
    for (std::size_t j = 0; j < dim; ++j) out << 'x' << j << ',';
    out << "label\n";
    const auto old_precision = out.precision(17);
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) out << data.points(i, j) << ',';
        out << data.labels[i] << '\n';
    }
    out.precision(old_precision);
}

TrainTestSplit make_toy_dataset(const MixtureSpec& spec, std::size_t train_per_cluster,
                                std::size_t test_per_cluster) {
    std::seed_seq seq{spec.seed, std::uint64_t{0x5eed}};
    std::vector<std::uint64_t> seeds(3);
    seq.generate(seeds.begin(), seeds.end());

    MixtureSpec train_spec = spec;
    train_spec.seed = seeds[0];
    MixtureSpec test_spec = spec;
    test_spec.seed = seeds[1];
    auto embedding = make_embedding(spec.intrinsic_dim, spec.ambient_dim, seeds[2]);
    return {embed(sample_mixture(train_spec, train_per_cluster), embedding),
            embed(sample_mixture(test_spec, test_per_cluster), embedding), std::move(embedding)};
}

}  // namespace dae
