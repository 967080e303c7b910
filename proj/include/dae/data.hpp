#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dae/tensor.hpp"

namespace dae {

/// Isotropic Gaussian clusters with centers evenly spaced on a circle.
struct MixtureSpec {
    int num_clusters = 8;
    double radius = 1.0;
    double variance = 0.25;  // per dimension
    int intrinsic_dim = 2;
    int ambient_dim = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

struct LabeledDataset {
    Tensor points;  // [n x dim]
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return points.cols(); }
};

/// Columns form an orthonormal basis of a dim_in-dimensional subspace of R^dim_out.
struct OrthogonalEmbedding {
    Tensor basis;  // [ambient x intrinsic]
};

/// Center of cluster k: radius * (cos 2πk/K, sin 2πk/K), zero in any further coordinates.
std::vector<double> cluster_center(const MixtureSpec& spec, int k);

/// n_per_cluster samples per cluster, cluster-major order.
LabeledDataset sample_mixture(const MixtureSpec& spec, std::size_t n_per_cluster);

OrthogonalEmbedding make_embedding(int intrinsic_dim, int ambient_dim, std::uint64_t seed);

LabeledDataset embed(const LabeledDataset& data, const OrthogonalEmbedding& embedding);

/// Header `x0,...,x{d-1},label`, one row per point.
void write_dataset_csv(std::ostream& out, const LabeledDataset& data);

struct TrainTestSplit {
    LabeledDataset train;
    LabeledDataset test;
    OrthogonalEmbedding embedding;
};

/// Train/test mixtures drawn with independent streams derived from spec.seed,
/// both embedded with the same orthogonal map.
TrainTestSplit make_toy_dataset(const MixtureSpec& spec, std::size_t train_per_cluster, std::size_t test_per_cluster);

}  // namespace dae
