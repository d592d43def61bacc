#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "divplan/world.hpp"

namespace divplan {

struct Path {
    std::vector<Point> waypoints;  // first = start, last = goal
};

double path_length(const Path& path);

struct PlanningProblem {
    Environment scene;
    Point start;
    Point goal;
};

// Throws InvariantViolation when start/goal collide or coincide.
void validate_problem(const PlanningProblem& problem);

// Throws InvariantViolation unless the path runs start to goal (1e-9) with
// every consecutive segment collision-free.
void validate_path(const Path& path, const PlanningProblem& problem, double collision_step);

struct PlannerConfig {
    int num_candidates = 50;   // runs per planner family
    int max_iterations = 5000; // per bidirectional-tree run
    double extend_step = 0.25;
    double goal_bias = 0.05;
    int prm_samples = 500;
    double prm_radius = 1.5;
    double collision_step = 0.02;
};

enum class CostKind { euclidean, sinusoidal, circular };

struct CostFunction {
    CostKind kind = CostKind::euclidean;
    double amplitude = 0.0;  // sinusoidal reference height
    int periods = 1;         // sinusoidal full periods along the chord
    double bulge = 0.0;      // signed arc sagitta at the chord midpoint
    double weight = 1.0;     // deviation penalty factor
};

// Cost of traversing segment a->b. Euclidean is exactly |b-a|; the other two
// multiply |b-a| by 1 + weight * (deviation of the segment midpoint from a
// reference curve anchored on the problem's start->goal chord): a sinusoid of
// the given amplitude and period count, or a circular arc whose sagitta is
// `bulge`. Zero amplitude or zero weight reduces both to euclidean.
double edge_cost(const CostFunction& cost, Point a, Point b, const PlanningProblem& problem);

// Grows one tree from the start and one from the goal, alternating roles:
// extend one tree a single step toward a sample (goal-biased toward the other
// tree's root), then greedily extend the other toward the new node until
// blocked or joined. The joined branch is shortcut-pruned before it is
// returned. Returns nullopt after max_iterations without a join.
std::optional<Path> birrt(const PlanningProblem& problem, const PlannerConfig& cfg,
                          std::uint64_t seed);

struct Roadmap {
    std::vector<Point> nodes;
    std::vector<std::vector<std::size_t>> adjacency;  // sorted, symmetric
    double radius = 0.0;
    double collision_step = 0.02;
};

// Samples cfg.prm_samples collision-free nodes and connects every pair within
// cfg.prm_radius whose joining segment is free. May return a disconnected
// graph.
Roadmap prm_build(const Environment& env, const PlannerConfig& cfg, std::uint64_t seed);

// Attaches start and goal to their nearest reachable nodes, then finds the
// minimum-total-edge-cost node sequence by Dijkstra. Nullopt when either
// endpoint cannot attach or the attachments are disconnected.
std::optional<Path> prm_query(const Roadmap& roadmap, const PlanningProblem& problem,
                              const CostFunction& cost);

// Runs both planner families num_candidates times each: tree runs with seeds
// base..base+n-1, roadmap runs with seeds base+n..base+2n-1 cycling the cost
// kinds euclidean/sinusoidal/circular. Failed runs are skipped; output order
// is all tree paths by seed, then all roadmap paths by seed. Throws
// CandidateGenerationFailed when every run comes back empty.
std::vector<Path> generate_candidates(const PlanningProblem& problem, const PlannerConfig& cfg,
                                      std::uint64_t base_seed = 0);

}  // namespace divplan
