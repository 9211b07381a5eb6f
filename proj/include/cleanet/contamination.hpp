#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cleanet/errors.hpp"
#include "cleanet/matrix.hpp"
#include "cleanet/parallel.hpp"

namespace cleanet {

/// Per-window contamination estimate: kNN cosine consistency in latent
/// space, its complement as the contamination score, and the sigmoidal
/// down-weight applied to the reconstruction loss.
struct ContaminationProfile {
    std::vector<double> consistency; // mean cosine similarity to k nearest neighbors
    std::vector<double> score;       // 1 - consistency; higher = more contaminated
    std::vector<double> weight;      // in (0,1), decreasing in score
    std::size_t k = 10;
    double alpha = 10.0;
    double tau = 0.0;

    std::size_t size() const { return score.size(); }
};

namespace detail {

inline double cosine_similarity(const double* a, const double* b, std::size_t dim) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0; // zero-norm latents are dissimilar to everything
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double squared_distance(const double* a, const double* b, std::size_t dim) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

} // namespace detail

/// Mean cosine similarity of each latent to its k nearest neighbors by
/// Euclidean distance (self excluded; distance ties broken by lower index).
inline std::vector<double> knn_consistency(const Matrix& latents, std::size_t k) {
    const std::size_t n = latents.rows;
    if (k == 0)
        throw config_error("neighbor count k must be positive");
    if (n < k + 1)
        throw config_error("need at least k+1 = " + std::to_string(k + 1) + " windows, got " +
                           std::to_string(n));
    if (!latents.all_finite())
        throw dimension_error("latents must be finite for contamination scoring");

    std::vector<double> out(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        std::vector<std::pair<double, std::size_t>> dist(n - 1);
        const double* zi = &latents.data[i * latents.cols];
        std::size_t idx = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dist[idx++] = {detail::squared_distance(zi, &latents.data[j * latents.cols], latents.cols), j};
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        double acc = 0.0;
        for (std::size_t m = 0; m < k; ++m)
            acc += detail::cosine_similarity(zi, &latents.data[dist[m].second * latents.cols],
                                             latents.cols);
        out[i] = acc / static_cast<double>(k);
    });
    return out;
}

/// Higher score = more contaminated: the affine complement of consistency.
inline std::vector<double> contamination_score(const std::vector<double>& consistency) {
    std::vector<double> out(consistency.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 - consistency[i];
    return out;
}

/// Sigmoidal down-weight: 1 / (1 + exp(alpha * (score - tau))), in (0,1),
/// strictly decreasing in score. Saturates instead of overflowing.
inline double adaptive_weight(double score, double alpha, double tau) {
    if (alpha <= 0.0)
        throw config_error("weight sharpness alpha must be positive");
    return sigmoid(-alpha * (score - tau));
}

/// Median + one standard deviation of the score distribution; tracks the
/// per-epoch spread so only the outlying tail is strongly down-weighted.
inline double auto_tau(std::vector<double> scores) {
    const std::size_t n = scores.size();
    if (n == 0)
        throw config_error("cannot derive tau from an empty score set");
    std::sort(scores.begin(), scores.end());
    const double median =
        n % 2 == 1 ? scores[n / 2] : 0.5 * (scores[n / 2 - 1] + scores[n / 2]);
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var /= static_cast<double>(n);
    return median + std::sqrt(var);
}

/// Full profile from latents: consistency -> score -> tau (auto unless
/// fixed_tau is given) -> weights.
inline ContaminationProfile compute_contamination_profile(
    const Matrix& latents, std::size_t k, double alpha,
    std::optional<double> fixed_tau = std::nullopt) {
    ContaminationProfile profile;
    profile.k = k;
    profile.alpha = alpha;
    profile.consistency = knn_consistency(latents, k);
    profile.score = contamination_score(profile.consistency);
    profile.tau = fixed_tau ? *fixed_tau : auto_tau(profile.score);
    profile.weight.resize(profile.score.size());
    for (std::size_t i = 0; i < profile.score.size(); ++i)
        profile.weight[i] = adaptive_weight(profile.score[i], alpha, profile.tau);
    return profile;
}

/// Weighted squared reconstruction error of one window: weight * ||x - x_hat||^2.
inline double awrl_loss(const Matrix& x, const Matrix& x_hat, double weight) {
    if (!x.same_shape(x_hat))
        throw dimension_error("awrl_loss: window and reconstruction shapes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x.data[i] - x_hat.data[i];
        acc += diff * diff;
    }
    return weight * acc;
}

inline void write_profile_csv(const ContaminationProfile& profile, std::ostream& out) {
    out << "window_index,consistency,score,weight\n";
    for (std::size_t i = 0; i < profile.size(); ++i)
        out << i << ',' << profile.consistency[i] << ',' << profile.score[i] << ','
            << profile.weight[i] << '\n';
}

} // namespace cleanet
