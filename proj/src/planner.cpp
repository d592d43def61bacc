#include "divplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "divplan/errors.hpp"
#include "divplan/rng.hpp"

namespace divplan {

namespace {

constexpr double kJoinEps = 1e-12;

struct Tree {
    std::vector<Point> pts;
    std::vector<std::size_t> parent;

    explicit Tree(Point root) : pts{root}, parent{0} {}

    std::size_t add(Point p, std::size_t par) {
        pts.push_back(p);
        parent.push_back(par);
        return pts.size() - 1;
    }

    std::size_t nearest(Point q) const {
        std::size_t best = 0;
        double best_d = distance(pts[0], q);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            const double d = distance(pts[i], q);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    // Root-to-node point sequence.
    std::vector<Point> branch(std::size_t node) const {
        std::vector<Point> out;
        for (std::size_t i = node;; i = parent[i]) {
            out.push_back(pts[i]);
            if (i == parent[i]) {
                break;
            }
        }
        std::reverse(out.begin(), out.end());
        return out;
    }
};

Point step_toward(Point from, Point to, double max_step) {
    const double d = distance(from, to);
    if (d <= max_step) {
        return to;
    }
    return from + (max_step / d) * (to - from);
}

Point sample_bounds(const Environment& env, Rng& rng) {
    return {rng.uniform(env.bounds.min.x, env.bounds.max.x),
            rng.uniform(env.bounds.min.y, env.bounds.max.y)};
}

// Greedy shortcutting: from each kept waypoint jump to the farthest later
// waypoint still reachable by a free straight segment. Tree growth leaves a
// lot of sampling jitter in the raw branch; this removes it without leaving
// the free space.
std::vector<Point> prune_waypoints(const Environment& env, const std::vector<Point>& pts,
                                   double step) {
    std::vector<Point> kept{pts.front()};
    std::size_t i = 0;
    while (i + 1 < pts.size()) {
        std::size_t j = pts.size() - 1;
        for (; j > i + 1; --j) {
            if (segment_free(env, pts[i], pts[j], step)) {
                break;
            }
        }
        kept.push_back(pts[j]);
        i = j;
    }
    return kept;
}

}  // namespace

double path_length(const Path& path) {
    double total = 0.0;
    for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
        total += distance(path.waypoints[i - 1], path.waypoints[i]);
    }
    return total;
}

void validate_problem(const PlanningProblem& problem) {
    if (!is_finite(problem.start) || !is_finite(problem.goal)) {
        throw InvariantViolation("problem: start and goal must be finite");
    }
    if (collides(problem.scene, problem.start)) {
        throw InvariantViolation("problem: start is in collision");
    }
    if (collides(problem.scene, problem.goal)) {
        throw InvariantViolation("problem: goal is in collision");
    }
    if (distance(problem.start, problem.goal) <= 0.0) {
        throw InvariantViolation("problem: start and goal coincide");
    }
}

void validate_path(const Path& path, const PlanningProblem& problem, double collision_step) {
    if (path.waypoints.size() < 2) {
        throw InvariantViolation("path: needs at least 2 waypoints");
    }
    if (distance(path.waypoints.front(), problem.start) > 1e-9 ||
        distance(path.waypoints.back(), problem.goal) > 1e-9) {
        throw InvariantViolation("path: endpoints must match problem start/goal");
    }
    for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
        if (!segment_free(problem.scene, path.waypoints[i - 1], path.waypoints[i],
                          collision_step)) {
            throw InvariantViolation("path: segment " + std::to_string(i) + " collides");
        }
    }
}

double edge_cost(const CostFunction& cost, Point a, Point b, const PlanningProblem& problem) {
    const double base = distance(a, b);
    if (cost.kind == CostKind::euclidean) {
        return base;
    }

    const Point chord = problem.goal - problem.start;
    const double chord_len = norm(chord);
    if (chord_len <= 0.0) {
        return base;
    }
    const Point tangent = (1.0 / chord_len) * chord;
    const Point normal{-tangent.y, tangent.x};
    const Point mid = 0.5 * (a + b);
    const Point rel = mid - problem.start;
    const double along = dot(rel, tangent);
    const double offset = dot(rel, normal);

    double deviation = 0.0;
    if (cost.kind == CostKind::sinusoidal) {
        if (cost.amplitude != 0.0) {
            const double ref =
                cost.amplitude * std::sin(2.0 * M_PI * cost.periods * along / chord_len);
            deviation = std::abs(offset - ref);
        }
    } else {
        const double h = cost.bulge;
        if (h == 0.0) {
            deviation = std::abs(offset);
        } else {
            // Circle through start and goal with sagitta h at the chord
            // midpoint: R = (4h^2 + L^2) / (8|h|), center on the mid-normal.
            const double radius = (4.0 * h * h + chord_len * chord_len) / (8.0 * std::abs(h));
            const Point chord_mid = problem.start + (0.5 * chord_len) * tangent;
            const double center_off = h - (h > 0.0 ? radius : -radius);
            const Point center = chord_mid + center_off * normal;
            deviation = std::abs(distance(mid, center) - radius);
        }
    }
    return base * (1.0 + cost.weight * deviation);
}

std::optional<Path> birrt(const PlanningProblem& problem, const PlannerConfig& cfg,
                          std::uint64_t seed) {
    validate_problem(problem);
    const Environment& env = problem.scene;
    Rng rng(seed);

    Tree start_tree(problem.start);
    Tree goal_tree(problem.goal);
    Tree* grow = &start_tree;
    Tree* meet = &goal_tree;
    bool grow_is_start = true;

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        const Point target =
            rng.uniform() < cfg.goal_bias ? meet->pts[0] : sample_bounds(env, rng);

        const std::size_t near = grow->nearest(target);
        std::optional<std::size_t> fresh;
        if (distance(grow->pts[near], target) > kJoinEps) {
            const Point next = step_toward(grow->pts[near], target, cfg.extend_step);
            if (segment_free(env, grow->pts[near], next, cfg.collision_step)) {
                fresh = grow->add(next, near);
            }
        }

        if (fresh) {
            // Walk the other tree toward the new node until blocked or joined.
            const Point bridge = grow->pts[*fresh];
            std::size_t cur = meet->nearest(bridge);
            while (true) {
                const Point at = meet->pts[cur];
                const double gap = distance(at, bridge);
                if (gap <= kJoinEps) {
                    std::vector<Point> half = grow->branch(*fresh);
                    std::vector<Point> rest = meet->branch(cur);
                    std::reverse(rest.begin(), rest.end());
                    half.insert(half.end(), rest.begin() + 1, rest.end());
                    if (!grow_is_start) {
                        std::reverse(half.begin(), half.end());
                    }
                    return Path{prune_waypoints(env, half, cfg.collision_step)};
                }
                const Point next = step_toward(at, bridge, cfg.extend_step);
                if (!segment_free(env, at, next, cfg.collision_step)) {
                    break;
                }
                cur = meet->add(next, cur);
            }
        }

        std::swap(grow, meet);
        grow_is_start = !grow_is_start;
    }
    return std::nullopt;
}

Roadmap prm_build(const Environment& env, const PlannerConfig& cfg, std::uint64_t seed) {
    if (cfg.prm_samples < 2) {
        throw InvariantViolation("prm_build: prm_samples must be >= 2");
    }
    Rng rng(seed);
    Roadmap map;
    map.radius = cfg.prm_radius;
    map.collision_step = cfg.collision_step;

    const long attempt_cap = 1000L * cfg.prm_samples;
    for (long attempt = 0;
         attempt < attempt_cap && map.nodes.size() < static_cast<std::size_t>(cfg.prm_samples);
         ++attempt) {
        const Point p = sample_bounds(env, rng);
        if (!collides(env, p)) {
            map.nodes.push_back(p);
        }
    }

    map.adjacency.resize(map.nodes.size());
    for (std::size_t i = 0; i < map.nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < map.nodes.size(); ++j) {
            if (distance(map.nodes[i], map.nodes[j]) > cfg.prm_radius) {
                continue;
            }
            if (segment_free(env, map.nodes[i], map.nodes[j], cfg.collision_step)) {
                map.adjacency[i].push_back(j);
                map.adjacency[j].push_back(i);
            }
        }
    }
    return map;
}

namespace {

// Nearest node reachable by a straight free segment, or nullopt.
std::optional<std::size_t> attach(const Roadmap& map, const Environment& env, Point p) {
    std::vector<std::size_t> order(map.nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = distance(p, map.nodes[a]);
        const double db = distance(p, map.nodes[b]);
        return da != db ? da < db : a < b;
    });
    for (std::size_t i : order) {
        if (segment_free(env, p, map.nodes[i], map.collision_step)) {
            return i;
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<Path> prm_query(const Roadmap& roadmap, const PlanningProblem& problem,
                              const CostFunction& cost) {
    validate_problem(problem);
    if (roadmap.nodes.empty()) {
        return std::nullopt;
    }
    const auto s = attach(roadmap, problem.scene, problem.start);
    const auto g = attach(roadmap, problem.scene, problem.goal);
    if (!s || !g) {
        return std::nullopt;
    }

    const std::size_t n = roadmap.nodes.size();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> prev(n, n);
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[*s] = 0.0;
    heap.push({0.0, *s});
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) {
            continue;
        }
        if (u == *g) {
            break;
        }
        for (std::size_t v : roadmap.adjacency[u]) {
            const double nd = d + edge_cost(cost, roadmap.nodes[u], roadmap.nodes[v], problem);
            if (nd < dist[v]) {
                dist[v] = nd;
                prev[v] = u;
                heap.push({nd, v});
            }
        }
    }
    if (!std::isfinite(dist[*g])) {
        return std::nullopt;
    }

    std::vector<Point> pts{problem.goal};
    for (std::size_t u = *g;; u = prev[u]) {
        pts.push_back(roadmap.nodes[u]);
        if (u == *s) {
            break;
        }
    }
    pts.push_back(problem.start);
    std::reverse(pts.begin(), pts.end());
    return Path{std::move(pts)};
}

std::vector<Path> generate_candidates(const PlanningProblem& problem, const PlannerConfig& cfg,
                                      std::uint64_t base_seed) {
    validate_problem(problem);
    if (cfg.num_candidates < 1) {
        throw InvariantViolation("planner: candidate count must be >= 1");
    }
    const auto n = static_cast<std::uint64_t>(cfg.num_candidates);
    const double chord = distance(problem.start, problem.goal);

    std::vector<Path> out;
    for (std::uint64_t i = 0; i < n; ++i) {
        if (auto p = birrt(problem, cfg, base_seed + i)) {
            out.push_back(std::move(*p));
        }
    }
    for (std::uint64_t j = 0; j < n; ++j) {
        CostFunction cost;
        cost.weight = 2.0;
        switch (j % 3) {
            case 0:
                cost.kind = CostKind::euclidean;
                break;
            case 1:
                cost.kind = CostKind::sinusoidal;
                cost.periods = 1 + static_cast<int>((j / 3) % 2);
                cost.amplitude = 0.15 * chord / cost.periods;
                break;
            default:
                cost.kind = CostKind::circular;
                cost.bulge = ((j / 3) % 2 == 0 ? 0.2 : -0.2) * chord;
                break;
        }
        const Roadmap map = prm_build(problem.scene, cfg, base_seed + n + j);
        if (auto p = prm_query(map, problem, cost)) {
            out.push_back(std::move(*p));
        }
    }
    if (out.empty()) {
        throw CandidateGenerationFailed("no planner run produced a path");
    }
    return out;
}

}  // namespace divplan
