#include <catch2/catch_amalgamated.hpp>

#include <queue>
#include <random>
#include <sstream>

#include "cleanet/clustering.hpp"
#include "helpers.hpp"

using namespace cleanet;
using testutil::random_matrix;

namespace {

Matrix column(std::initializer_list<double> values) {
    Matrix m(values.size(), 1);
    std::size_t i = 0;
    for (double v : values) m(i++, 0) = v;
    return m;
}

/// Independent oracle: materialize the first-neighbor adjacency (link when
/// j is i's first neighbor, i is j's, or they share one) and take connected
/// components by breadth-first search seeded in ascending index order.
std::vector<std::size_t> bfs_components(const Matrix& latents) {
    const std::vector<std::size_t> nn = first_neighbors(latents);
    const std::size_t n = latents.rows;
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (nn[i] == j || nn[j] == i || nn[i] == nn[j]) adj[i][j] = true;
        }
    }
    std::vector<std::size_t> comp(n, n);
    std::size_t next = 0;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (comp[seed] != n) continue;
        std::queue<std::size_t> frontier;
        frontier.push(seed);
        comp[seed] = next;
        while (!frontier.empty()) {
            const std::size_t u = frontier.front();
            frontier.pop();
            for (std::size_t v = 0; v < n; ++v) {
                if (adj[u][v] && comp[v] == n) {
                    comp[v] = next;
                    frontier.push(v);
                }
            }
        }
        ++next;
    }
    return comp;
}

} // namespace

TEST_CASE("first neighbors on constructed points") {
    SECTION("three 1-d latents") {
        const std::vector<std::size_t> nn = first_neighbors(column({0, 1, 10}));
        REQUIRE(nn == std::vector<std::size_t>{1, 0, 1});
    }
    SECTION("identical points are mutual neighbors") {
        const std::vector<std::size_t> nn = first_neighbors(column({4, 4}));
        REQUIRE(nn == std::vector<std::size_t>{1, 0});
    }
    SECTION("distance ties resolve to the smaller index") {
        // Point 0 sits exactly between points 2 and 5.
        const std::vector<std::size_t> nn =
            first_neighbors(column({0, 30, 1, 40, 50, -1}));
        REQUIRE(nn[0] == 2);
    }
    SECTION("fewer than two windows is a configuration error") {
        REQUIRE_THROWS_AS(first_neighbors(Matrix(1, 2, 0.0)), config_error);
    }
}

TEST_CASE("finch partition on constructed points") {
    SECTION("two well-separated pairs form two clusters") {
        const ClusterPartition p = finch_partition(column({0, 1, 10, 11}));
        REQUIRE(p.num_clusters() == 2);
        REQUIRE(p.assignment[0] == p.assignment[1]);
        REQUIRE(p.assignment[2] == p.assignment[3]);
        REQUIRE(p.assignment[0] != p.assignment[2]);
    }
    SECTION("identical points collapse to one cluster") {
        const ClusterPartition p = finch_partition(Matrix(6, 2, 3.3));
        REQUIRE(p.num_clusters() == 1);
        REQUIRE(p.clusters[0].members.size() == 6);
    }
    SECTION("a shared first neighbor merges its admirers") {
        // 0 and 2 both have 1 as first neighbor.
        const ClusterPartition p = finch_partition(column({0, 1, 2, 50, 51}));
        REQUIRE(p.assignment[0] == p.assignment[2]);
        REQUIRE(p.assignment[0] == p.assignment[1]);
        REQUIRE(p.num_clusters() == 2);
    }
    SECTION("centroids are member means") {
        const ClusterPartition p = finch_partition(column({0, 1, 10, 11}));
        const Cluster& c0 = p.clusters[p.assignment[0]];
        REQUIRE(c0.centroid[0] == Catch::Approx(0.5));
        const Cluster& c1 = p.clusters[p.assignment[2]];
        REQUIRE(c1.centroid[0] == Catch::Approx(10.5));
    }
}

TEST_CASE("finch matches the adjacency-component oracle on random latents") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<std::size_t> nd(2, 30), dd(1, 8);
        const Matrix latents = random_matrix(nd(rng), dd(rng), rng);
        const ClusterPartition p = finch_partition(latents);
        const std::vector<std::size_t> oracle = bfs_components(latents);
        // Both label components by first appearance, so ids agree directly.
        REQUIRE(p.assignment == oracle);
        REQUIRE(p.num_clusters() ==
                *std::max_element(oracle.begin(), oracle.end()) + 1);
    }
}

TEST_CASE("partition is invariant under window permutation") {
    std::mt19937 rng(123);
    const std::size_t n = 18;
    const Matrix latents = random_matrix(n, 4, rng);
    const ClusterPartition base = finch_partition(latents);

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix shuffled(n, 4);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 4; ++j) shuffled(perm[i], j) = latents(i, j);

    const ClusterPartition moved = finch_partition(shuffled);
    // Same grouping up to cluster-id renaming: co-membership must agree.
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const bool together_before = base.assignment[a] == base.assignment[b];
            const bool together_after = moved.assignment[perm[a]] == moved.assignment[perm[b]];
            REQUIRE(together_before == together_after);
        }
}

TEST_CASE("repeated clustering of the same latents is identical") {
    std::mt19937 rng(31);
    const Matrix latents = random_matrix(25, 3, rng);
    const ClusterPartition a = finch_partition(latents);
    const ClusterPartition b = finch_partition(latents);
    REQUIRE(a.assignment == b.assignment);
}

TEST_CASE("annotate_contamination attaches means and flags") {
    const Matrix latents = column({0, 1, 10, 11});
    ClusterPartition p = finch_partition(latents);

    ContaminationProfile profile;
    profile.score = {0.1, 0.3, 0.8, 1.0};
    profile.consistency = {0.9, 0.7, 0.2, 0.0};
    profile.weight = {0.9, 0.8, 0.2, 0.1};
    profile.tau = 0.5;

    p = annotate_contamination(std::move(p), profile);
    const Cluster& low = p.clusters[p.assignment[0]];
    const Cluster& high = p.clusters[p.assignment[2]];
    REQUIRE(low.mean_contamination == Catch::Approx(0.2));
    REQUIRE_FALSE(low.flagged);
    REQUIRE(high.mean_contamination == Catch::Approx(0.9));
    REQUIRE(high.flagged);

    SECTION("all-zero scores flag nothing") {
        ContaminationProfile zeros = profile;
        zeros.score = {0, 0, 0, 0};
        ClusterPartition q = annotate_contamination(finch_partition(latents), zeros);
        for (const Cluster& c : q.clusters) REQUIRE_FALSE(c.flagged);
    }
    SECTION("profile size mismatch is an error") {
        ContaminationProfile bad = profile;
        bad.score.pop_back();
        bad.consistency.pop_back();
        bad.weight.pop_back();
        REQUIRE_THROWS_AS(annotate_contamination(finch_partition(latents), bad),
                          dimension_error);
    }
}

TEST_CASE("partition csv dump has the documented columns") {
    const Matrix latents = column({0, 1, 10, 11});
    ContaminationProfile profile;
    profile.score = {0.1, 0.3, 0.8, 1.0};
    profile.consistency = {0.9, 0.7, 0.2, 0.0};
    profile.weight = {0.9, 0.8, 0.2, 0.1};
    profile.tau = 0.5;
    const ClusterPartition p = annotate_contamination(finch_partition(latents), profile);

    std::ostringstream out;
    write_partition_csv(p, out);
    const std::string text = out.str();
    REQUIRE(text.rfind("window_index,cluster_id,cluster_mean_contamination,flagged\n", 0) == 0);
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 5);
}
