#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "divplan/errors.hpp"
#include "divplan/planner.hpp"
#include "divplan/rng.hpp"
#include "divplan/world.hpp"

using namespace divplan;

namespace {

Environment empty_env(double xmax = 10.0, double ymax = 10.0) {
    Environment env;
    env.bounds = {{0.0, 0.0}, {xmax, ymax}};
    return env;
}

// Wall across the middle with a gap near the top.
Environment gap_wall_env() {
    Environment env = empty_env();
    env.obstacles.push_back({Rect{{4.5, 0.0}, {5.5, 8.0}}, ""});
    return env;
}

// Closed rectangular ring; the interior is free but unreachable.
Environment ring_env() {
    Environment env = empty_env();
    env.obstacles.push_back({Rect{{3.0, 3.0}, {7.0, 3.5}}, ""});
    env.obstacles.push_back({Rect{{3.0, 6.5}, {7.0, 7.0}}, ""});
    env.obstacles.push_back({Rect{{3.0, 3.5}, {3.5, 6.5}}, ""});
    env.obstacles.push_back({Rect{{6.5, 3.5}, {7.0, 6.5}}, ""});
    return env;
}

void check_valid(const Path& p, const PlanningProblem& prob, double step) {
    REQUIRE(p.waypoints.size() >= 2);
    CHECK(distance(p.waypoints.front(), prob.start) <= 1e-9);
    CHECK(distance(p.waypoints.back(), prob.goal) <= 1e-9);
    for (std::size_t i = 1; i < p.waypoints.size(); ++i) {
        CHECK(segment_free(prob.scene, p.waypoints[i - 1], p.waypoints[i], step));
    }
}

// Test-local re-implementation of endpoint attachment: nearest node first,
// ties by index, first one visible from the point wins.
std::optional<std::size_t> oracle_attach(const Roadmap& map, const Environment& env, Point p) {
    std::vector<std::size_t> order(map.nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = distance(p, map.nodes[a]);
        const double db = distance(p, map.nodes[b]);
        return da != db ? da < db : a < b;
    });
    for (std::size_t i : order) {
        if (segment_free(env, p, map.nodes[i], map.collision_step)) return i;
    }
    return std::nullopt;
}

// Exhaustive minimum over all simple node paths from s to g, with partial-cost
// pruning. Only usable on small roadmaps.
void enumerate_paths(const Roadmap& map, const PlanningProblem& prob, const CostFunction& cost,
                     std::size_t at, std::size_t goal, std::vector<bool>& used, double sofar,
                     double& best) {
    if (sofar >= best) return;
    if (at == goal) {
        best = sofar;
        return;
    }
    for (std::size_t next : map.adjacency[at]) {
        if (used[next]) continue;
        used[next] = true;
        enumerate_paths(map, prob, cost, next, goal,
                        used, sofar + edge_cost(cost, map.nodes[at], map.nodes[next], prob), best);
        used[next] = false;
    }
}

double brute_force_query_cost(const Roadmap& map, const PlanningProblem& prob,
                              const CostFunction& cost) {
    const auto s = oracle_attach(map, prob.scene, prob.start);
    const auto g = oracle_attach(map, prob.scene, prob.goal);
    if (!s || !g) return std::numeric_limits<double>::infinity();
    std::vector<bool> used(map.nodes.size(), false);
    used[*s] = true;
    double best = std::numeric_limits<double>::infinity();
    enumerate_paths(map, prob, cost, *s, *g, used, 0.0, best);
    if (!std::isfinite(best)) return best;
    return edge_cost(cost, prob.start, map.nodes[*s], prob) + best +
           edge_cost(cost, map.nodes[*g], prob.goal, prob);
}

double total_cost(const Path& p, const PlanningProblem& prob, const CostFunction& cost) {
    double sum = 0.0;
    for (std::size_t i = 1; i < p.waypoints.size(); ++i) {
        sum += edge_cost(cost, p.waypoints[i - 1], p.waypoints[i], prob);
    }
    return sum;
}

}  // namespace

TEST_CASE("tree planner keeps endpoints exact in an empty scene") {
    const PlanningProblem prob{empty_env(2.0, 2.0), {0.0, 0.0}, {1.0, 1.0}};
    PlannerConfig cfg;
    const auto p = birrt(prob, cfg, 1);
    REQUIRE(p.has_value());
    CHECK(p->waypoints.front().x == 0.0);
    CHECK(p->waypoints.front().y == 0.0);
    CHECK(p->waypoints.back().x == 1.0);
    CHECK(p->waypoints.back().y == 1.0);
    check_valid(*p, prob, cfg.collision_step);
}

TEST_CASE("tree planner threads the gap and survives re-validation") {
    const PlanningProblem prob{gap_wall_env(), {2.0, 5.0}, {8.0, 5.0}};
    PlannerConfig cfg;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto p = birrt(prob, cfg, seed);
        REQUIRE_MESSAGE(p.has_value(), "seed ", seed);
        check_valid(*p, prob, cfg.collision_step);
        CHECK_NOTHROW(validate_path(*p, prob, cfg.collision_step));
    }
}

TEST_CASE("tree planner reports failure on an enclosed goal") {
    const PlanningProblem prob{ring_env(), {1.0, 1.0}, {5.0, 5.0}};
    PlannerConfig cfg;
    cfg.max_iterations = 400;
    CHECK_FALSE(birrt(prob, cfg, 3).has_value());
}

TEST_CASE("tree planner is deterministic per seed") {
    const PlanningProblem prob{gap_wall_env(), {2.0, 5.0}, {8.0, 5.0}};
    PlannerConfig cfg;
    const auto a = birrt(prob, cfg, 11);
    const auto b = birrt(prob, cfg, 11);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    REQUIRE(a->waypoints.size() == b->waypoints.size());
    for (std::size_t i = 0; i < a->waypoints.size(); ++i) {
        CHECK(a->waypoints[i].x == b->waypoints[i].x);
        CHECK(a->waypoints[i].y == b->waypoints[i].y);
    }
}

TEST_CASE("planner rejects invalid problems") {
    PlanningProblem bad{gap_wall_env(), {5.0, 1.0}, {8.0, 5.0}};  // start inside the wall
    CHECK_THROWS_AS(birrt(bad, PlannerConfig{}, 0), InvariantViolation);
    PlanningProblem same{empty_env(), {1.0, 1.0}, {1.0, 1.0}};
    CHECK_THROWS_AS(birrt(same, PlannerConfig{}, 0), InvariantViolation);
}

TEST_CASE("edge costs") {
    const PlanningProblem prob{empty_env(), {0.0, 0.0}, {4.0, 0.0}};
    CostFunction euc;

    SUBCASE("euclidean is chord length") {
        CHECK(edge_cost(euc, {0, 0}, {3, 4}, prob) == 5.0);
    }

    SUBCASE("zero amplitude or zero weight collapses to euclidean") {
        Rng rng(5);
        CostFunction flat{CostKind::sinusoidal, 0.0, 2, 0.0, 1.0};
        CostFunction sin0{CostKind::sinusoidal, 0.7, 2, 0.0, 0.0};
        CostFunction arc0{CostKind::circular, 0.0, 1, 0.9, 0.0};
        for (int i = 0; i < 200; ++i) {
            const Point a{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
            const Point b{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
            const double base = edge_cost(euc, a, b, prob);
            CHECK(edge_cost(flat, a, b, prob) == base);
            CHECK(edge_cost(sin0, a, b, prob) == base);
            CHECK(edge_cost(arc0, a, b, prob) == base);
        }
    }

    SUBCASE("midpoint on the reference sinusoid costs the chord length") {
        CostFunction wave{CostKind::sinusoidal, 0.5, 1, 0.0, 1.0};
        // ref offset at along=1 is 0.5*sin(pi/2) = 0.5
        const Point a{0.9, 0.45};
        const Point b{1.1, 0.55};
        CHECK(edge_cost(wave, a, b, prob) == doctest::Approx(distance(a, b)));
        // and off the curve it is strictly more expensive
        const Point c{0.9, -0.45};
        const Point d{1.1, -0.55};
        CHECK(edge_cost(wave, c, d, prob) > distance(c, d) + 0.1);
    }

    SUBCASE("midpoint on the reference arc costs the chord length") {
        CostFunction arc{CostKind::circular, 0.0, 1, 1.0, 1.0};
        // sagitta 1 over chord (0,0)-(4,0): peak at (2,1)
        CHECK(edge_cost(arc, {1.8, 1.0}, {2.2, 1.0}, prob) ==
              doctest::Approx(0.4).epsilon(1e-9));
        // another arc point, via center (2,-1.5) radius 2.5
        const Point on{2.0 + 2.5 * std::sin(0.3), -1.5 + 2.5 * std::cos(0.3)};
        const Point a = on - Point{0.1, 0.05};
        const Point b = on + Point{0.1, 0.05};
        CHECK(edge_cost(arc, a, b, prob) == doctest::Approx(distance(a, b)));
        CHECK(edge_cost(arc, {1.8, -1.0}, {2.2, -1.0}, prob) > 0.4 + 0.5);
    }

    SUBCASE("costs never undercut the segment length") {
        Rng rng(6);
        const std::vector<CostFunction> costs = {
            euc,
            {CostKind::sinusoidal, 0.8, 3, 0.0, 2.0},
            {CostKind::circular, 0.0, 1, -1.2, 2.0},
        };
        for (int i = 0; i < 200; ++i) {
            const Point a{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
            const Point b{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
            for (const auto& c : costs) {
                CHECK(edge_cost(c, a, b, prob) >= distance(a, b) - 1e-12);
            }
        }
    }

    SUBCASE("euclidean obeys the triangle inequality") {
        Rng rng(7);
        for (int i = 0; i < 200; ++i) {
            const Point a{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
            const Point b{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
            const Point c{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
            CHECK(edge_cost(euc, a, c, prob) <=
                  edge_cost(euc, a, b, prob) + edge_cost(euc, b, c, prob) + 1e-12);
        }
    }
}

TEST_CASE("roadmap construction") {
    SUBCASE("empty scene with radius past the diagonal gives a complete graph") {
        PlannerConfig cfg;
        cfg.prm_samples = 100;
        cfg.prm_radius = 15.0;
        const Roadmap map = prm_build(empty_env(), cfg, 21);
        REQUIRE(map.nodes.size() == 100);
        for (const auto& adj : map.adjacency) {
            CHECK(adj.size() == 99);
        }
    }

    SUBCASE("no edge crosses a bisecting wall") {
        Environment env = empty_env();
        env.obstacles.push_back({Rect{{4.9, 0.0}, {5.1, 10.0}}, ""});
        PlannerConfig cfg;
        cfg.prm_samples = 60;
        cfg.prm_radius = 4.0;
        const Roadmap map = prm_build(env, cfg, 22);
        for (std::size_t i = 0; i < map.nodes.size(); ++i) {
            for (std::size_t j : map.adjacency[i]) {
                const bool left_i = map.nodes[i].x < 4.9;
                const bool left_j = map.nodes[j].x < 4.9;
                CHECK(left_i == left_j);
            }
        }
    }

    SUBCASE("same seed reproduces nodes and edges") {
        PlannerConfig cfg;
        cfg.prm_samples = 40;
        const Roadmap a = prm_build(gap_wall_env(), cfg, 9);
        const Roadmap b = prm_build(gap_wall_env(), cfg, 9);
        REQUIRE(a.nodes.size() == b.nodes.size());
        for (std::size_t i = 0; i < a.nodes.size(); ++i) {
            CHECK(a.nodes[i].x == b.nodes[i].x);
            CHECK(a.nodes[i].y == b.nodes[i].y);
        }
        CHECK(a.adjacency == b.adjacency);
    }
}

TEST_CASE("roadmap queries") {
    SUBCASE("three-node line gives the unique path and its length as cost") {
        Roadmap map;
        map.nodes = {{2, 2}, {5, 2}, {8, 2}};
        map.adjacency = {{1}, {0, 2}, {1}};
        map.radius = 3.5;
        map.collision_step = 0.02;
        const PlanningProblem prob{empty_env(), {1.0, 2.0}, {9.0, 2.0}};
        const auto p = prm_query(map, prob, CostFunction{});
        REQUIRE(p.has_value());
        REQUIRE(p->waypoints.size() == 5);
        CHECK(p->waypoints[1].x == 2.0);
        CHECK(p->waypoints[2].x == 5.0);
        CHECK(p->waypoints[3].x == 8.0);
        CHECK(path_length(*p) == doctest::Approx(8.0));
        CHECK(total_cost(*p, prob, CostFunction{}) == doctest::Approx(8.0));
    }

    SUBCASE("disconnected components yield no path") {
        Roadmap map;
        map.nodes = {{2, 2}, {8, 2}};
        map.adjacency = {{}, {}};
        map.radius = 1.0;
        map.collision_step = 0.02;
        const PlanningProblem prob{empty_env(), {1.0, 2.0}, {9.0, 2.0}};
        CHECK_FALSE(prm_query(map, prob, CostFunction{}).has_value());
    }
}

TEST_CASE("roadmap query cost matches brute-force enumeration") {
    PlannerConfig cfg;
    cfg.prm_samples = 14;
    cfg.prm_radius = 4.5;
    const std::vector<CostFunction> costs = {
        {CostKind::euclidean, 0.0, 1, 0.0, 1.0},
        {CostKind::sinusoidal, 0.6, 2, 0.0, 1.5},
        {CostKind::circular, 0.0, 1, 1.1, 1.5},
    };
    Rng rng(31);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        Environment env = empty_env();
        env.obstacles.push_back(
            {Circle{{rng.uniform(3.0, 7.0), rng.uniform(3.0, 7.0)}, rng.uniform(0.5, 1.5)}, ""});
        const PlanningProblem prob{env, {0.5, 0.5}, {9.5, 9.5}};
        const Roadmap map = prm_build(env, cfg, 1000 + trial);
        for (const auto& cost : costs) {
            const auto p = prm_query(map, prob, cost);
            const double oracle = brute_force_query_cost(map, prob, cost);
            if (!p.has_value()) {
                CHECK(!std::isfinite(oracle));
                continue;
            }
            REQUIRE(std::isfinite(oracle));
            const double got = total_cost(*p, prob, cost);
            CHECK(std::abs(got - oracle) <= 1e-9 * std::max(1.0, oracle));
            ++checked;
        }
    }
    CHECK(checked >= 60);
}

TEST_CASE("candidate generation") {
    SUBCASE("empty scene yields both families, endpoint-exact") {
        const PlanningProblem prob{empty_env(2.0, 2.0), {0.2, 0.2}, {1.8, 1.8}};
        PlannerConfig cfg;
        cfg.num_candidates = 5;
        const auto paths = generate_candidates(prob, cfg, 0);
        CHECK(paths.size() == 10);
        for (const auto& p : paths) {
            check_valid(p, prob, cfg.collision_step);
        }
    }

    SUBCASE("every survivor re-validates in a cluttered scene") {
        const PlanningProblem prob{gap_wall_env(), {2.0, 5.0}, {8.0, 5.0}};
        PlannerConfig cfg;
        cfg.num_candidates = 6;
        const auto paths = generate_candidates(prob, cfg, 77);
        CHECK(paths.size() >= 6);
        for (const auto& p : paths) {
            check_valid(p, prob, cfg.collision_step);
        }
        const auto again = generate_candidates(prob, cfg, 77);
        REQUIRE(again.size() == paths.size());
        for (std::size_t i = 0; i < paths.size(); ++i) {
            REQUIRE(again[i].waypoints.size() == paths[i].waypoints.size());
            for (std::size_t w = 0; w < paths[i].waypoints.size(); ++w) {
                CHECK(again[i].waypoints[w].x == paths[i].waypoints[w].x);
                CHECK(again[i].waypoints[w].y == paths[i].waypoints[w].y);
            }
        }
    }

    SUBCASE("total failure raises") {
        const PlanningProblem prob{ring_env(), {1.0, 1.0}, {5.0, 5.0}};
        PlannerConfig cfg;
        cfg.num_candidates = 2;
        cfg.max_iterations = 150;
        cfg.prm_samples = 30;
        CHECK_THROWS_AS(generate_candidates(prob, cfg, 0), CandidateGenerationFailed);
    }
}
