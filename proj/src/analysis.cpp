#include "dae/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "dae/errors.hpp"
#include "dae/linalg.hpp"

namespace dae {
namespace {

double row_distance(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) {
        const double d = a(i, c) - b(j, c);
        s += d * d;
    }
    return std::sqrt(s);
}

double squared_distance(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) {
        const double d = a(i, c) - b(j, c);
        s += d * d;
    }
    return s;
}

}  // namespace

LipschitzEstimate lipschitz_ratio(const Tensor& inputs, const Tensor& outputs, std::size_t n_pairs, std::uint64_t seed,
                                  double floor) {
    if (n_pairs < 1) throw ContractError("lipschitz: n_pairs must be at least 1");
    if (inputs.rank() != 2 || outputs.rank() != 2 || inputs.rows() != outputs.rows()) {
        throw DimensionError("lipschitz: inputs " + shape_string(inputs.shape()) + " and outputs " +
                             shape_string(outputs.shape()) + " must have matching row counts");
    }
    const auto n = inputs.rows();
    if (n < 2) throw ContractError("lipschitz: need at least 2 points");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::uniform_int_distribution<std::size_t> second(0, n - 2);
    const std::size_t max_draws = 1000 * n_pairs + 10000;

    LipschitzEstimate est;
    double total = 0.0;
    std::size_t draws = 0;
    while (est.n_pairs < n_pairs) {
        if (++draws > max_draws) {
            throw ContractError("lipschitz: fewer than 2 distinct points (every sampled pair is degenerate)");
        }
        const auto i = first(rng);
        auto j = second(rng);
        if (j >= i) ++j;
        const double den = row_distance(inputs, i, inputs, j);
        if (den < floor) {
            ++est.excluded;
            continue;
        }
        total += row_distance(outputs, i, outputs, j) / den;
        ++est.n_pairs;
    }
    est.value = total / static_cast<double>(est.n_pairs);
    return est;
}

LipschitzEstimate lipschitz_complexity(const PointMap& map, const Tensor& points, std::size_t n_pairs,
                                       std::uint64_t seed) {
    return lipschitz_ratio(points, map(points), n_pairs, seed);
}

ComplexityReport model_complexity(const Model& model, const Tensor& points, std::size_t n_pairs, std::uint64_t seed) {
    const Tensor latents = model.latent(points);
    const Tensor recon = model.decode(latents);
    const auto enc = lipschitz_ratio(points, latents, n_pairs, seed);
    // Quantized latents can collapse onto one code, leaving the decoder ratio undefined.
    bool distinct = false;
    for (std::size_t i = 1; i < latents.rows() && !distinct; ++i) distinct = squared_distance(latents, 0, latents, i) > 0.0;
    if (!distinct) {
        return {enc.value, std::numeric_limits<double>::quiet_NaN(), n_pairs, enc.excluded, 0, seed};
    }
    const auto dec = lipschitz_ratio(latents, recon, n_pairs, seed);
    return {enc.value, dec.value, n_pairs, enc.excluded, dec.excluded, seed};
}

double knn_accuracy(const Tensor& reference, const std::vector<int>& reference_labels, const Tensor& query,
                    const std::vector<int>& query_labels, std::size_t k) {
    if (k < 1) throw ContractError("knn: k must be at least 1");
    if (reference.rank() != 2 || query.rank() != 2 || reference.cols() != query.cols()) {
        throw DimensionError("knn: reference " + shape_string(reference.shape()) + " and query " +
                             shape_string(query.shape()) + " dimensions differ");
    }
    if (reference_labels.size() != reference.rows() || query_labels.size() != query.rows()) {
        throw DimensionError("knn: label counts do not match point counts");
    }
    const auto n_ref = reference.rows();
    const auto kk = std::min(k, n_ref);

    std::size_t correct = 0;
    std::vector<std::pair<double, std::size_t>> dist(n_ref);
    for (std::size_t q = 0; q < query.rows(); ++q) {
        int predicted = 0;
        if (kk == 1) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < n_ref; ++r) {
                const double d = squared_distance(query, q, reference, r);
                if (d < best_d) {
                    best_d = d;
                    best = r;
                }
            }
            predicted = reference_labels[best];
        } else {
            for (std::size_t r = 0; r < n_ref; ++r) dist[r] = {squared_distance(query, q, reference, r), r};
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
            std::map<int, std::size_t> votes;
            for (std::size_t i = 0; i < kk; ++i) ++votes[reference_labels[dist[i].second]];
            std::size_t best_votes = 0;
            for (const auto& [label, count] : votes) {
                if (count > best_votes) {  // map order: smallest label wins ties
                    best_votes = count;
                    predicted = label;
                }
            }
        }
        if (predicted == query_labels[q]) ++correct;
    }
    return query.rows() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(query.rows());
}

std::size_t cosine_bin(double similarity, std::size_t bins) {
    const double clamped = std::clamp(similarity, -1.0, 1.0);
    const auto idx = static_cast<std::size_t>(std::floor((clamped + 1.0) / 2.0 * static_cast<double>(bins)));
    return std::min(idx, bins - 1);
}

CodebookReport codebook_cosine_stats(const Codebook& codebook, std::size_t bins, std::size_t top) {
    const auto k = codebook.size();
    if (k < 2) throw ContractError("codebook_cosine_stats: need at least 2 codes");
    if (bins < 1) throw ContractError("codebook_cosine_stats: need at least one bin");
    const auto d = codebook.dim();

    CodebookReport report;
    std::vector<std::size_t> live;
    std::vector<double> norms(k);
    for (std::size_t i = 0; i < k; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += codebook.entries(i, j) * codebook.entries(i, j);
        norms[i] = std::sqrt(s);
        if (norms[i] > 0.0) {
            live.push_back(i);
        } else {
            report.zero_norm_codes.push_back(i);
        }
    }
    if (live.empty()) throw DomainError("codebook_cosine_stats: every code has zero norm");

    const auto m = static_cast<Eigen::Index>(live.size());
    Eigen::MatrixXd distance = Eigen::MatrixXd::Zero(m, m);
    report.cosine_histogram.assign(bins, 0);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = a + 1; b < m; ++b) {
            const auto i = live[static_cast<std::size_t>(a)];
            const auto j = live[static_cast<std::size_t>(b)];
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += codebook.entries(i, c) * codebook.entries(j, c);
            const double sim = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
            ++report.cosine_histogram[cosine_bin(sim, bins)];
            distance(a, b) = distance(b, a) = 1.0 - sim;
        }
    }

    const auto eig = jacobi_eigen(distance);
    const auto count = std::min<Eigen::Index>(static_cast<Eigen::Index>(top), m);
    report.top_eigenvalues.assign(eig.values.data(), eig.values.data() + count);
    return report;
}

std::vector<std::size_t> code_usage_counts(const Codebook& codebook, const Tensor& latents) {
    const auto q = vq_quantize(codebook, latents);
    std::vector<std::size_t> counts(codebook.size(), 0);
    for (auto idx : q.indices) ++counts[idx];
    std::sort(counts.begin(), counts.end(), std::greater<>());
    return counts;
}

std::vector<std::size_t> code_usage_counts(const PointMap& encoder, const Codebook& codebook, const Tensor& points) {
    return code_usage_counts(codebook, encoder(points));
}

}  // namespace dae
