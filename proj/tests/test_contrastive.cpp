#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cleanet/contrastive.hpp"
#include "helpers.hpp"

using namespace cleanet;
using testutil::central_diff;
using testutil::close_rel;
using testutil::random_matrix;

namespace {

/// Partition with explicit assignments; centroids are set directly so pair
/// selection geometry is fully controlled.
ClusterPartition make_partition(const std::vector<std::size_t>& assignment,
                                const std::vector<std::vector<double>>& centroids,
                                const std::vector<bool>& flagged = {}) {
    ClusterPartition p;
    p.assignment = assignment;
    p.clusters.resize(centroids.size());
    for (std::size_t i = 0; i < assignment.size(); ++i)
        p.clusters[assignment[i]].members.push_back(i);
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        p.clusters[c].centroid = centroids[c];
        p.clusters[c].flagged = !flagged.empty() && flagged[c];
    }
    return p;
}

std::vector<std::size_t> iota_batch(std::size_t n) {
    std::vector<std::size_t> batch(n);
    for (std::size_t i = 0; i < n; ++i) batch[i] = i;
    return batch;
}

} // namespace

TEST_CASE("select_pairs follows the cluster rule") {
    // Windows 0-2 in cluster 0, windows 3-4 in cluster 1.
    const ClusterPartition p =
        make_partition({0, 0, 0, 1, 1}, {{0.0, 0.0}, {10.0, 0.0}});

    SECTION("anchors in a 3-member cluster get 2 positives and the far cluster") {
        const PairSet pairs = select_pairs(iota_batch(5), p, 2);
        REQUIRE(pairs.anchors.size() == 5); // both clusters meet num_s = 2
        const AnchorPairs& a0 = pairs.anchors.front();
        REQUIRE(a0.anchor == 0);
        REQUIRE(a0.positives == std::vector<std::size_t>{1, 2});
        REQUIRE(a0.negatives == std::vector<std::size_t>{3, 4});
    }
    SECTION("num_s filters small clusters") {
        const PairSet pairs = select_pairs(iota_batch(5), p, 3);
        REQUIRE(pairs.anchors.size() == 3); // only cluster 0 qualifies
        for (const AnchorPairs& ap : pairs.anchors) REQUIRE(ap.group == 0);
    }
    SECTION("a single-cluster batch yields no pairs") {
        const PairSet pairs = select_pairs({0, 1, 2}, p, 2);
        REQUIRE(pairs.empty());
    }
    SECTION("flagged clusters are skipped as anchors but serve as negatives") {
        const ClusterPartition flagged =
            make_partition({0, 0, 0, 1, 1}, {{0.0, 0.0}, {10.0, 0.0}}, {true, false});
        const PairSet pairs = select_pairs(iota_batch(5), flagged, 2);
        for (const AnchorPairs& ap : pairs.anchors) {
            REQUIRE(ap.group == 1);
            REQUIRE(ap.negatives == std::vector<std::size_t>{0, 1, 2});
        }
        REQUIRE(pairs.anchors.size() == 2);
    }
    SECTION("negatives come from the farthest represented cluster") {
        const ClusterPartition three = make_partition(
            {0, 0, 1, 1, 2, 2}, {{0.0, 0.0}, {5.0, 0.0}, {100.0, 0.0}});
        const PairSet pairs = select_pairs(iota_batch(6), three, 2);
        for (const AnchorPairs& ap : pairs.anchors) {
            if (ap.group == 0)
                REQUIRE(ap.negatives == std::vector<std::size_t>{4, 5});
            if (ap.group == 2)
                REQUIRE(ap.negatives == std::vector<std::size_t>{0, 1});
        }
    }
}

TEST_CASE("pair sets satisfy their invariants on random partitions") {
    std::mt19937 rng(202);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_int_distribution<std::size_t> nd(4, 24), cd(1, 5);
        const std::size_t n = nd(rng), n_clusters = cd(rng);
        std::vector<std::size_t> assignment(n);
        std::uniform_int_distribution<std::size_t> pick(0, n_clusters - 1);
        for (std::size_t& a : assignment) a = pick(rng);

        std::vector<std::vector<double>> centroids(n_clusters);
        std::uniform_real_distribution<double> coord(-5.0, 5.0);
        for (auto& c : centroids) c = {coord(rng), coord(rng)};
        std::vector<bool> flags(n_clusters);
        std::bernoulli_distribution flip(0.3);
        for (std::size_t c = 0; c < n_clusters; ++c) flags[c] = flip(rng);

        // Drop empty clusters to keep the partition well-formed.
        const ClusterPartition p = make_partition(assignment, centroids, flags);
        const PairSet pairs = select_pairs(iota_batch(n), p, 2);

        for (const AnchorPairs& ap : pairs.anchors) {
            const std::size_t anchor_cluster = p.assignment[ap.anchor];
            REQUIRE(ap.group == anchor_cluster);
            REQUIRE_FALSE(p.clusters[anchor_cluster].flagged);
            REQUIRE_FALSE(ap.positives.empty());
            REQUIRE_FALSE(ap.negatives.empty());
            for (std::size_t pos : ap.positives) {
                REQUIRE(pos != ap.anchor);
                REQUIRE(p.assignment[pos] == anchor_cluster);
            }
            const std::size_t neg_cluster = p.assignment[ap.negatives.front()];
            REQUIRE(neg_cluster != anchor_cluster);
            for (std::size_t neg : ap.negatives)
                REQUIRE(p.assignment[neg] == neg_cluster);
            for (std::size_t pos : ap.positives)
                REQUIRE(std::find(ap.negatives.begin(), ap.negatives.end(), pos) ==
                        ap.negatives.end());
        }
    }
}

TEST_CASE("contrastive loss on constructed pairs") {
    SECTION("aligned positive, orthogonal negative, unit temperature") {
        Matrix latents{{1, 0}, {2, 0}, {0, 3}};
        PairSet pairs;
        pairs.temperature = 1.0;
        pairs.anchors.push_back({0, 0, {1}, {2}});
        REQUIRE(contrastive_loss(pairs, latents) == Catch::Approx(-1.0).epsilon(1e-12));
    }
    SECTION("equal positive and negative sums give zero loss") {
        Matrix latents{{1, 0}, {2, 0}, {3, 0}};
        PairSet pairs;
        pairs.temperature = 0.5;
        pairs.anchors.push_back({0, 0, {1}, {2}});
        REQUIRE(contrastive_loss(pairs, latents) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("scaling all latents leaves the loss unchanged") {
        std::mt19937 rng(303);
        Matrix latents = random_matrix(8, 4, rng);
        PairSet pairs;
        pairs.temperature = 0.1;
        pairs.anchors.push_back({0, 0, {1, 2}, {5, 6}});
        pairs.anchors.push_back({3, 1, {4}, {7}});
        const double base = contrastive_loss(pairs, latents);
        for (double& v : latents.data) v *= 2.0;
        REQUIRE(contrastive_loss(pairs, latents) == Catch::Approx(base).margin(1e-12));
    }
    SECTION("empty pair sets cost nothing") {
        REQUIRE(contrastive_loss(PairSet{}, Matrix(3, 2, 1.0)) == 0.0);
    }
}

TEST_CASE("loss falls when positives align and rises when negatives do") {
    // Anchor on the x axis; rotate the positive/negative partner toward it.
    auto latents_at = [](double pos_angle, double neg_angle) {
        Matrix m(3, 2);
        m(0, 0) = 1.0;
        m(1, 0) = std::cos(pos_angle);
        m(1, 1) = std::sin(pos_angle);
        m(2, 0) = std::cos(neg_angle);
        m(2, 1) = std::sin(neg_angle);
        return m;
    };
    PairSet pairs;
    pairs.temperature = 0.2;
    pairs.anchors.push_back({0, 0, {1}, {2}});

    const double base = contrastive_loss(pairs, latents_at(1.0, 2.0));
    REQUIRE(contrastive_loss(pairs, latents_at(0.8, 2.0)) < base);
    REQUIRE(contrastive_loss(pairs, latents_at(1.0, 1.7)) > base);
}

TEST_CASE("simclr pairing structure") {
    SECTION("each anchor has its view as positive and the rest as negatives") {
        const PairSet pairs = simclr_pairs(4, 0.1);
        REQUIRE(pairs.anchors.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            const AnchorPairs& ap = pairs.anchors[i];
            REQUIRE(ap.anchor == i);
            REQUIRE(ap.positives == std::vector<std::size_t>{4 + i});
            REQUIRE(ap.negatives.size() == 3);
            // Every other batch member lands in the negatives, overlap or not.
            for (std::size_t j = 0; j < 4; ++j)
                if (j != i)
                    REQUIRE(std::find(ap.negatives.begin(), ap.negatives.end(), j) !=
                            ap.negatives.end());
        }
    }
    SECTION("zero jitter duplicates the anchor, cosine one") {
        std::mt19937 rng(404);
        const std::vector<Matrix> windows{random_matrix(2, 5, rng)};
        const std::vector<Matrix> views = jitter_windows(windows, 0.0, rng);
        REQUIRE(views[0].data == windows[0].data);
    }
    SECTION("nonzero jitter perturbs every view independently") {
        std::mt19937 rng(405);
        const std::vector<Matrix> windows{Matrix(2, 5, 0.5), Matrix(2, 5, 0.5)};
        const std::vector<Matrix> views = jitter_windows(windows, 0.1, rng);
        REQUIRE(views[0].data != windows[0].data);
        REQUIRE(views[0].data != views[1].data);
    }
}

TEST_CASE("contrastive gradient matches finite differences") {
    std::mt19937 rng(505);
    for (bool infonce : {false, true}) {
        for (int trial = 0; trial < 6; ++trial) {
            Matrix latents = random_matrix(7, 3, rng, 0.2, 1.0);
            PairSet pairs;
            pairs.temperature = 0.3;
            pairs.anchors.push_back({0, 0, {1, 2}, {4, 5}});
            pairs.anchors.push_back({1, 0, {0}, {4}});
            pairs.anchors.push_back({3, 1, {6}, {0, 1}});

            const Matrix grad = contrastive_gradient(pairs, latents, infonce);
            auto eval = [&]() { return contrastive_loss(pairs, latents, infonce); };
            for (std::size_t i = 0; i < latents.size(); ++i) {
                const double numeric = central_diff(latents.data[i], eval);
                INFO("infonce " << infonce << " trial " << trial << " entry " << i);
                REQUIRE(close_rel(grad.data[i], numeric, 1e-5));
            }
        }
    }
}
