#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "cleanet/clustering.hpp"
#include "cleanet/errors.hpp"
#include "cleanet/matrix.hpp"

namespace cleanet {

/// One anchor with its positive and negative partners. Indices address rows
/// of the latent matrix handed to the loss; `group` identifies the cluster
/// the anchor came from (or the anchor itself in SimCLR mode) and is the
/// unit the loss averages over.
struct AnchorPairs {
    std::size_t anchor = 0;
    std::size_t group = 0;
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
};

struct PairSet {
    std::vector<AnchorPairs> anchors;
    double temperature = 0.1;

    bool empty() const { return anchors.empty(); }
};

/// Cluster-guided pair selection over one minibatch. Anchors are batch
/// members whose cluster has at least num_s members in the batch and is not
/// contamination-flagged; positives are the other in-batch members of that
/// cluster, negatives all in-batch members of the represented cluster whose
/// centroid lies farthest from the anchor's. Flagged clusters still serve
/// as negative sources. Returns batch-local indices.
inline PairSet select_pairs(const std::vector<std::size_t>& batch,
                            const ClusterPartition& partition, std::size_t num_s,
                            double temperature = 0.1) {
    if (num_s < 2)
        throw config_error("minimum cluster size num_s must be at least 2");
    if (temperature <= 0.0)
        throw config_error("contrastive temperature must be positive");

    PairSet pairs;
    pairs.temperature = temperature;

    // Batch positions per cluster, in cluster-id order of first appearance.
    std::vector<std::size_t> cluster_ids;
    std::vector<std::vector<std::size_t>> positions;
    for (std::size_t p = 0; p < batch.size(); ++p) {
        if (batch[p] >= partition.assignment.size())
            throw dimension_error("batch index outside the clustered window set");
        const std::size_t c = partition.assignment[batch[p]];
        auto it = std::find(cluster_ids.begin(), cluster_ids.end(), c);
        if (it == cluster_ids.end()) {
            cluster_ids.push_back(c);
            positions.emplace_back();
            positions.back().push_back(p);
        } else {
            positions[static_cast<std::size_t>(it - cluster_ids.begin())].push_back(p);
        }
    }
    if (cluster_ids.size() < 2) return pairs; // no negatives available

    auto centroid_dist2 = [&partition](std::size_t a, std::size_t b) {
        const Cluster& ca = partition.clusters[a];
        const Cluster& cb = partition.clusters[b];
        double acc = 0.0;
        for (std::size_t j = 0; j < ca.centroid.size(); ++j) {
            const double diff = ca.centroid[j] - cb.centroid[j];
            acc += diff * diff;
        }
        return acc;
    };

    for (std::size_t ci = 0; ci < cluster_ids.size(); ++ci) {
        const std::size_t c = cluster_ids[ci];
        if (positions[ci].size() < num_s) continue;
        if (partition.clusters[c].flagged) continue;

        // Farthest represented cluster; ties go to the smaller cluster id.
        double best = -1.0;
        std::size_t far_ci = cluster_ids.size();
        for (std::size_t cj = 0; cj < cluster_ids.size(); ++cj) {
            if (cj == ci) continue;
            const double dist = centroid_dist2(c, cluster_ids[cj]);
            if (dist > best || (dist == best && far_ci != cluster_ids.size() &&
                                cluster_ids[cj] < cluster_ids[far_ci])) {
                best = dist;
                far_ci = cj;
            }
        }
        const std::vector<std::size_t>& negatives = positions[far_ci];

        for (std::size_t p : positions[ci]) {
            AnchorPairs ap;
            ap.anchor = p;
            ap.group = c;
            for (std::size_t q : positions[ci])
                if (q != p) ap.positives.push_back(q);
            ap.negatives = negatives;
            pairs.anchors.push_back(std::move(ap));
        }
    }
    return pairs;
}

/// SimCLR-style pairing over a batch of size n whose latent matrix holds the
/// n batch rows followed by n augmented-view rows: anchor i pairs with its
/// own augmented view and treats every other batch member as a negative —
/// including overlapping or recurring windows, which is the failure mode
/// this mode exists to demonstrate.
inline PairSet simclr_pairs(std::size_t batch_count, double temperature = 0.1) {
    if (temperature <= 0.0)
        throw config_error("contrastive temperature must be positive");
    PairSet pairs;
    pairs.temperature = temperature;
    for (std::size_t i = 0; i < batch_count; ++i) {
        AnchorPairs ap;
        ap.anchor = i;
        ap.group = i;
        ap.positives.push_back(batch_count + i);
        for (std::size_t j = 0; j < batch_count; ++j)
            if (j != i) ap.negatives.push_back(j);
        if (!ap.negatives.empty()) pairs.anchors.push_back(std::move(ap));
    }
    return pairs;
}

/// Gaussian jitter augmentation for SimCLR mode.
inline std::vector<Matrix> jitter_windows(const std::vector<Matrix>& windows, double sigma,
                                          std::mt19937& rng) {
    std::vector<Matrix> out = windows;
    if (sigma <= 0.0) return out;
    std::normal_distribution<double> noise(0.0, sigma);
    for (Matrix& w : out)
        for (double& v : w.data) v += noise(rng);
    return out;
}

namespace detail {

struct PairGroup {
    std::size_t group = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pos; // (anchor, partner)
    std::vector<std::pair<std::size_t, std::size_t>> neg;
};

inline std::vector<PairGroup> group_pairs(const PairSet& pairs) {
    std::vector<PairGroup> groups;
    for (const AnchorPairs& ap : pairs.anchors) {
        PairGroup* g = nullptr;
        for (PairGroup& cand : groups)
            if (cand.group == ap.group) { g = &cand; break; }
        if (!g) {
            groups.emplace_back();
            groups.back().group = ap.group;
            g = &groups.back();
        }
        for (std::size_t p : ap.positives) g->pos.emplace_back(ap.anchor, p);
        for (std::size_t q : ap.negatives) g->neg.emplace_back(ap.anchor, q);
    }
    // Only groups with both sides defined contribute a loss term.
    std::erase_if(groups, [](const PairGroup& g) { return g.pos.empty() || g.neg.empty(); });
    return groups;
}

inline double log_sum_exp(const std::vector<double>& xs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : xs) mx = std::max(mx, x);
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

} // namespace detail

/// Per-group loss -log(sum_pos exp(sim/t) / sum_neg exp(sim/t)), averaged
/// over the groups that contributed pairs; sim is cosine similarity. With
/// infonce=true the denominator additionally includes the positive terms
/// (the conventional InfoNCE form, off by default).
inline double contrastive_loss(const PairSet& pairs, const Matrix& latents,
                               bool infonce = false) {
    const std::vector<detail::PairGroup> groups = detail::group_pairs(pairs);
    if (groups.empty()) return 0.0;
    const double t = pairs.temperature;

    auto sim = [&latents](std::size_t a, std::size_t b) {
        return detail::cosine_similarity(&latents.data[a * latents.cols],
                                         &latents.data[b * latents.cols], latents.cols);
    };

    double total = 0.0;
    for (const detail::PairGroup& g : groups) {
        std::vector<double> pos_terms, neg_terms;
        pos_terms.reserve(g.pos.size());
        for (const auto& [a, b] : g.pos) pos_terms.push_back(sim(a, b) / t);
        neg_terms.reserve(g.neg.size() + (infonce ? g.pos.size() : 0));
        for (const auto& [a, b] : g.neg) neg_terms.push_back(sim(a, b) / t);
        if (infonce)
            neg_terms.insert(neg_terms.end(), pos_terms.begin(), pos_terms.end());
        total += detail::log_sum_exp(neg_terms) - detail::log_sum_exp(pos_terms);
    }
    return total / static_cast<double>(groups.size());
}

/// Analytic gradient of contrastive_loss with respect to every latent row.
inline Matrix contrastive_gradient(const PairSet& pairs, const Matrix& latents,
                                   bool infonce = false) {
    Matrix grad(latents.rows, latents.cols);
    const std::vector<detail::PairGroup> groups = detail::group_pairs(pairs);
    if (groups.empty()) return grad;
    const double t = pairs.temperature;
    const double group_scale = 1.0 / static_cast<double>(groups.size());
    const std::size_t dim = latents.cols;

    // d sim(a,b) / d a = b/(|a||b|) - sim * a/|a|^2; accumulate coeff * that.
    auto add_sim_grad = [&](std::size_t a, std::size_t b, double coeff) {
        const double* za = &latents.data[a * dim];
        const double* zb = &latents.data[b * dim];
        double dot = 0.0, na2 = 0.0, nb2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            dot += za[j] * zb[j];
            na2 += za[j] * za[j];
            nb2 += zb[j] * zb[j];
        }
        if (na2 == 0.0 || nb2 == 0.0) return; // sim defined as constant 0 there
        const double na = std::sqrt(na2), nb = std::sqrt(nb2);
        const double s = dot / (na * nb);
        double* ga = &grad.data[a * dim];
        double* gb = &grad.data[b * dim];
        for (std::size_t j = 0; j < dim; ++j) {
            ga[j] += coeff * (zb[j] / (na * nb) - s * za[j] / na2);
            gb[j] += coeff * (za[j] / (na * nb) - s * zb[j] / nb2);
        }
    };

    auto sim = [&latents, dim](std::size_t a, std::size_t b) {
        return detail::cosine_similarity(&latents.data[a * dim], &latents.data[b * dim], dim);
    };

    for (const detail::PairGroup& g : groups) {
        std::vector<double> pos_terms, neg_terms;
        for (const auto& [a, b] : g.pos) pos_terms.push_back(sim(a, b) / t);
        for (const auto& [a, b] : g.neg) neg_terms.push_back(sim(a, b) / t);

        const double log_num = detail::log_sum_exp(pos_terms);
        std::vector<double> denom_terms = neg_terms;
        if (infonce) denom_terms.insert(denom_terms.end(), pos_terms.begin(), pos_terms.end());
        const double log_den = detail::log_sum_exp(denom_terms);

        // d(-log N)/d s_p = -softmax_N(p)/t; d(log D)/d s_q = softmax_D(q)/t.
        for (std::size_t p = 0; p < g.pos.size(); ++p) {
            double coeff = -std::exp(pos_terms[p] - log_num) / t;
            if (infonce) coeff += std::exp(pos_terms[p] - log_den) / t;
            add_sim_grad(g.pos[p].first, g.pos[p].second, group_scale * coeff);
        }
        for (std::size_t q = 0; q < g.neg.size(); ++q) {
            const double coeff = std::exp(neg_terms[q] - log_den) / t;
            add_sim_grad(g.neg[q].first, g.neg[q].second, group_scale * coeff);
        }
    }
    return grad;
}

} // namespace cleanet
