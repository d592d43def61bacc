#pragma once

#include <cstdint>
#include <vector>

#include "divplan/planner.hpp"

namespace divplan {

struct ClusterConfig {
    int num_clusters = 5;     // reduced to the path count when larger
    int resample_points = 32; // waypoints per feature vector
    int max_iter = 100;
    std::uint64_t seed = 0;
};

struct Clustering {
    std::vector<std::size_t> assignments;        // per input path
    std::vector<std::vector<double>> centroids;  // k vectors of length 2m
    std::vector<std::size_t> representatives;    // k input path indices
    std::vector<double> wcss_history;            // per Lloyd iteration
};

// Uniform arc-length resampling to exactly m waypoints; the first and last
// equal the original endpoints.
Path resample(const Path& path, int m);

// Resample then flatten as (x1, y1, ..., xm, ym).
std::vector<double> featurize(const Path& path, int m);

// Seeded k-means++ initialization plus Lloyd iterations over featurized
// paths. Emptied clusters are repaired by moving the farthest member of the
// largest cluster. Each representative is the member path nearest its
// centroid (ties to the lowest path index). Deterministic per seed and
// invariant to input order.
Clustering cluster(const std::vector<Path>& paths, const ClusterConfig& cfg);

}  // namespace divplan
