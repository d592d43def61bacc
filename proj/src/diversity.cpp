#include "divplan/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "divplan/errors.hpp"
#include "divplan/rng.hpp"

namespace divplan {

namespace {

double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

Path resample(const Path& path, int m) {
    if (m < 2) {
        throw InvariantViolation("resample: m must be >= 2");
    }
    const auto& w = path.waypoints;
    if (w.size() < 2) {
        throw InvariantViolation("resample: path needs at least 2 waypoints");
    }
    std::vector<double> cum(w.size(), 0.0);
    for (std::size_t i = 1; i < w.size(); ++i) {
        cum[i] = cum[i - 1] + distance(w[i - 1], w[i]);
    }
    const double total = cum.back();

    Path out;
    out.waypoints.reserve(m);
    out.waypoints.push_back(w.front());
    std::size_t seg = 1;
    for (int i = 1; i + 1 < m; ++i) {
        const double target = total * static_cast<double>(i) / static_cast<double>(m - 1);
        while (seg + 1 < w.size() && cum[seg] < target) {
            ++seg;
        }
        const double seg_len = cum[seg] - cum[seg - 1];
        const double t = seg_len > 0.0 ? (target - cum[seg - 1]) / seg_len : 0.0;
        out.waypoints.push_back(w[seg - 1] + t * (w[seg] - w[seg - 1]));
    }
    out.waypoints.push_back(w.back());
    return out;
}

std::vector<double> featurize(const Path& path, int m) {
    const Path r = resample(path, m);
    std::vector<double> f;
    f.reserve(2 * r.waypoints.size());
    for (const Point& p : r.waypoints) {
        f.push_back(p.x);
        f.push_back(p.y);
    }
    return f;
}

Clustering cluster(const std::vector<Path>& paths, const ClusterConfig& cfg) {
    if (paths.empty()) {
        throw InvariantViolation("cluster: need at least one path");
    }
    if (cfg.num_clusters < 1) {
        throw InvariantViolation("cluster: cluster count must be >= 1");
    }
    const std::size_t n = paths.size();
    const std::size_t k = std::min(static_cast<std::size_t>(cfg.num_clusters), n);

    std::vector<std::vector<double>> feats(n);
    for (std::size_t i = 0; i < n; ++i) {
        feats[i] = featurize(paths[i], cfg.resample_points);
    }

    // Work in a content-sorted order so the result does not depend on how the
    // caller happened to arrange the paths.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return feats[a] != feats[b] ? feats[a] < feats[b] : a < b;
    });
    std::vector<const std::vector<double>*> sf(n);
    for (std::size_t i = 0; i < n; ++i) {
        sf[i] = &feats[order[i]];
    }

    // k-means++ seeding.
    Rng rng(cfg.seed);
    std::vector<std::vector<double>> centroids;
    std::vector<bool> is_center(n, false);
    {
        const std::size_t first = rng.index(n);
        centroids.push_back(*sf[first]);
        is_center[first] = true;
    }
    std::vector<double> d2(n);
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = sqdist(*sf[i], centroids[0]);
            for (std::size_t c = 1; c < centroids.size(); ++c) {
                best = std::min(best, sqdist(*sf[i], centroids[c]));
            }
            d2[i] = best;
            total += best;
        }
        std::size_t pick = n;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        if (pick == n) {
            // All remaining mass is on existing centers; take the lowest
            // index not yet used so we still end with k of them.
            for (std::size_t i = 0; i < n; ++i) {
                if (!is_center[i]) {
                    pick = i;
                    break;
                }
            }
        }
        is_center[pick] = true;
        centroids.push_back(*sf[pick]);
    }

    std::vector<std::size_t> assign(n, 0);
    std::vector<std::size_t> prev_assign;
    std::vector<double> history;
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best_c = 0;
            double best_d = sqdist(*sf[i], centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = sqdist(*sf[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best_c = c;
                }
            }
            assign[i] = best_c;
        }

        std::vector<std::vector<std::size_t>> members(k);
        for (std::size_t i = 0; i < n; ++i) {
            members[assign[i]].push_back(i);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (!members[c].empty()) {
                continue;
            }
            // Move the farthest member of the largest cluster here.
            std::size_t donor = 0;
            for (std::size_t d = 1; d < k; ++d) {
                if (members[d].size() > members[donor].size()) {
                    donor = d;
                }
            }
            std::size_t moved = members[donor][0];
            double far_d = -1.0;
            for (std::size_t idx : members[donor]) {
                const double d = sqdist(*sf[idx], centroids[donor]);
                if (d > far_d || (d == far_d && order[idx] < order[moved])) {
                    far_d = d;
                    moved = idx;
                }
            }
            members[donor].erase(std::find(members[donor].begin(), members[donor].end(), moved));
            members[c].push_back(moved);
            assign[moved] = c;
        }

        if (!prev_assign.empty() && assign == prev_assign) {
            break;
        }
        prev_assign = assign;

        for (std::size_t c = 0; c < k; ++c) {
            std::vector<double> m(centroids[c].size(), 0.0);
            for (std::size_t idx : members[c]) {
                for (std::size_t d = 0; d < m.size(); ++d) {
                    m[d] += (*sf[idx])[d];
                }
            }
            for (double& v : m) {
                v /= static_cast<double>(members[c].size());
            }
            centroids[c] = std::move(m);
        }
        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            wcss += sqdist(*sf[i], centroids[assign[i]]);
        }
        history.push_back(wcss);
    }

    Clustering result;
    result.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.assignments[order[i]] = assign[i];
    }
    result.centroids = centroids;
    result.wcss_history = std::move(history);
    result.representatives.assign(k, n);
    std::vector<double> best_d(k, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = result.assignments[i];
        const double d = sqdist(feats[i], centroids[c]);
        if (d < best_d[c]) {
            best_d[c] = d;
            result.representatives[c] = i;
        }
    }
    return result;
}

}  // namespace divplan
