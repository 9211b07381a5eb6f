#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "cleanet/contamination.hpp"
#include "cleanet/errors.hpp"
#include "cleanet/matrix.hpp"

namespace cleanet {

struct Cluster {
    std::vector<std::size_t> members;   // sorted window indices
    std::vector<double> centroid;       // mean of member latents
    double mean_contamination = 0.0;
    bool flagged = false;               // mean contamination above tau
};

/// First-neighbor clustering result: the lowest hierarchy level, i.e. the
/// connected components of the first-neighbor adjacency relation.
struct ClusterPartition {
    std::vector<std::size_t> assignment; // cluster id per window
    std::vector<Cluster> clusters;

    std::size_t num_clusters() const { return clusters.size(); }
};

/// Index of each latent's nearest neighbor by Euclidean distance, self
/// excluded; ties go to the smallest index.
inline std::vector<std::size_t> first_neighbors(const Matrix& latents) {
    const std::size_t n = latents.rows;
    if (n < 2)
        throw config_error("first-neighbor search needs at least 2 windows");
    std::vector<std::size_t> nn(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        const double* zi = &latents.data[i * latents.cols];
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = detail::squared_distance(zi, &latents.data[j * latents.cols],
                                                      latents.cols);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        nn[i] = best_j;
    }
    return nn;
}

namespace detail {

struct UnionFind {
    std::vector<std::size_t> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent[b] = a; else parent[a] = b; // keep smallest index as root
    }
};

} // namespace detail

/// Connected components of the adjacency that links i and j when j is i's
/// first neighbor, i is j's, or they share one. Linking every i to its
/// first neighbor generates exactly those components: a shared neighbor c
/// joins i and j through c, and a mutual pair is a single link. Cluster ids
/// are assigned by order of first appearance, so the partition is a pure
/// function of the latents.
inline ClusterPartition finch_partition(const Matrix& latents) {
    const std::vector<std::size_t> nn = first_neighbors(latents);
    const std::size_t n = latents.rows;

    detail::UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i) uf.unite(i, nn[i]);

    ClusterPartition partition;
    partition.assignment.assign(n, 0);
    std::vector<std::size_t> root_to_id(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = uf.find(i);
        if (root_to_id[root] == n) {
            root_to_id[root] = partition.clusters.size();
            partition.clusters.emplace_back();
        }
        const std::size_t id = root_to_id[root];
        partition.assignment[i] = id;
        partition.clusters[id].members.push_back(i);
    }
    for (Cluster& c : partition.clusters) {
        c.centroid.assign(latents.cols, 0.0);
        for (std::size_t m : c.members)
            for (std::size_t j = 0; j < latents.cols; ++j)
                c.centroid[j] += latents(m, j);
        for (double& v : c.centroid) v /= static_cast<double>(c.members.size());
    }
    return partition;
}

/// Attach mean member contamination to each cluster and flag clusters whose
/// mean exceeds the profile's tau.
inline ClusterPartition annotate_contamination(ClusterPartition partition,
                                               const ContaminationProfile& profile) {
    if (profile.size() != partition.assignment.size())
        throw dimension_error("contamination profile covers " + std::to_string(profile.size()) +
                              " windows, partition has " +
                              std::to_string(partition.assignment.size()));
    for (Cluster& c : partition.clusters) {
        double acc = 0.0;
        for (std::size_t m : c.members) acc += profile.score[m];
        c.mean_contamination = acc / static_cast<double>(c.members.size());
        c.flagged = c.mean_contamination > profile.tau;
    }
    return partition;
}

inline void write_partition_csv(const ClusterPartition& partition, std::ostream& out) {
    out << "window_index,cluster_id,cluster_mean_contamination,flagged\n";
    for (std::size_t i = 0; i < partition.assignment.size(); ++i) {
        const Cluster& c = partition.clusters[partition.assignment[i]];
        out << i << ',' << partition.assignment[i] << ',' << c.mean_contamination << ','
            << (c.flagged ? 1 : 0) << '\n';
    }
}

} // namespace cleanet
