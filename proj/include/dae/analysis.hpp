#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dae/data.hpp"
#include "dae/models.hpp"
#include "dae/tensor.hpp"

namespace dae {

/// Mean displacement ratio over sampled pairs.
struct LipschitzEstimate {
    double value = 0.0;
    std::size_t n_pairs = 0;    // valid pairs averaged
    std::size_t excluded = 0;   // draws rejected for a near-zero denominator
};

inline constexpr double kDenominatorFloor = 1e-9;

/// Mean over n_pairs seeded pairs (i != j) of ||out_i - out_j|| / ||in_i - in_j||.
/// Pairs with ||in_i - in_j|| < floor are redrawn and counted as excluded.
LipschitzEstimate lipschitz_ratio(const Tensor& inputs, const Tensor& outputs, std::size_t n_pairs,
                                  std::uint64_t seed, double floor = kDenominatorFloor);

using PointMap = std::function<Tensor(const Tensor&)>;

LipschitzEstimate lipschitz_complexity(const PointMap& map, const Tensor& points, std::size_t n_pairs,
                                       std::uint64_t seed);

struct ComplexityReport {
    double c_lip_encoder = 0.0;
    double c_lip_decoder = 0.0;  // NaN when every latent coincides
    std::size_t n_pairs = 0;
    std::size_t excluded_encoder = 0;
    std::size_t excluded_decoder = 0;
    std::uint64_t seed = 0;
};

/// Encoder: x -> tau(f(x)); decoder: tau(f(x)) -> g(tau(f(x))). Both use the same seed.
ComplexityReport model_complexity(const Model& model, const Tensor& points, std::size_t n_pairs, std::uint64_t seed);

/// k-nearest-neighbour majority vote; distance ties to the lower reference
/// index, vote ties to the smaller label.
double knn_accuracy(const Tensor& reference, const std::vector<int>& reference_labels, const Tensor& query,
                    const std::vector<int>& query_labels, std::size_t k = 1);

struct CodebookReport {
    double bin_lo = -1.0;
    double bin_hi = 1.0;
    std::vector<std::size_t> cosine_histogram;  // over pairs of non-zero codes
    std::vector<double> top_eigenvalues;        // descending
    std::vector<std::size_t> usage_counts;      // descending; empty until filled
    std::vector<std::size_t> zero_norm_codes;
};

inline constexpr std::size_t kHistogramBins = 101;
inline constexpr std::size_t kTopEigenvalues = 20;

/// Pairwise cosine similarities binned over [-1, 1] and the leading
/// eigenvalues of the cosine distance matrix 1 - S (zero diagonal).
CodebookReport codebook_cosine_stats(const Codebook& codebook, std::size_t bins = kHistogramBins,
                                     std::size_t top = kTopEigenvalues);

/// Histogram bin of a similarity value in [-1, 1].
std::size_t cosine_bin(double similarity, std::size_t bins);

/// Quantizes each latent row and counts code appearances, sorted descending.
std::vector<std::size_t> code_usage_counts(const Codebook& codebook, const Tensor& latents);

std::vector<std::size_t> code_usage_counts(const PointMap& encoder, const Codebook& codebook, const Tensor& points);

}  // namespace dae
