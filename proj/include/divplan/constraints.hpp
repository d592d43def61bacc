#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "divplan/planner.hpp"
#include "divplan/world.hpp"

namespace divplan {

enum class ProximityMode { near, far, between };
enum class StyleKind { straight, curved, zigzag, shortest };

struct ProximitySpec {
    ProximityMode mode = ProximityMode::near;
    std::string object_a;
    std::optional<std::string> object_b;  // required for between
};

struct StyleSpec {
    StyleKind kind = StyleKind::straight;
};

struct Constraint {
    std::string instruction;  // free-form text shown to the judge
    std::variant<ProximitySpec, StyleSpec> spec;
};

// Throws InvariantViolation for a structurally bad constraint and
// UnknownObject when a referenced object is missing from the scene.
void validate_constraint(const Constraint& constraint, const Environment& env);

// JSON form: {"instruction": "...", "spec": {"type": "proximity"|"style", ...}}
Constraint constraint_from_json(const std::string& text);
std::string constraint_to_json(const Constraint& constraint);

struct PathMetrics {
    double length = 0.0;   // of the resampled polyline
    double chord = 0.0;    // endpoint separation
    double straightness = 1.0;  // length / chord
    double total_turning = 0.0;  // radians, sum of |heading changes|
    int curvature_sign_flips = 0;
    std::map<std::string, double> min_obj_distance;
    std::map<std::string, double> mean_obj_distance;
    bool between_crossing = false;
};

// Radians of accumulated reverse turning before a direction change counts as
// a curvature sign flip; smaller wiggles are treated as noise.
inline constexpr double kDefaultFlipThreshold = 0.4;

struct OracleConfig {
    double sigma = 1.0;        // meters, proximity falloff
    int resample_points = 32;  // metrics resolution
    double flip_threshold = kDefaultFlipThreshold;
    double full_turn = 3.14159265358979323846;  // turning for full curved credit
    double full_flips = 3.0;   // flips for full zigzag credit
    double zigzag_slack = 0.2; // excess straightness for full zigzag credit
};

// Metrics over the m-resampled path. Distance entries appear for each object
// the constraint references; between_crossing is true iff the path crosses
// the open segment joining the two objects' centroids at a point outside
// both shapes.
PathMetrics compute_metrics(const Path& path, const Environment& env,
                            const Constraint& constraint, int m,
                            double flip_threshold = kDefaultFlipThreshold);

// Deterministic score in [0, 100]:
//   near      100 * exp(-mean_dist / sigma)
//   far       100 * (1 - exp(-min_dist / sigma))
//   between   100 if crossing else 0
//   straight  100 * clamp(2 - straightness, 0, 1)
//   shortest  100 * reference / length (standalone reference = chord)
//   curved    100 * min(turning / full_turn, 1) / (1 + flips)
//   zigzag    100 * min(flips / full_flips, 1) * clamp((straightness - 1) / zigzag_slack, 0, 1)
double oracle_score(const Path& path, const Environment& env, const Constraint& constraint,
                    const OracleConfig& cfg = {});

// Scores every candidate (shortest uses the minimum candidate length as the
// reference) and returns the argmax index, ties to the lowest index.
std::pair<std::size_t, std::vector<double>> oracle_select(const std::vector<Path>& candidates,
                                                          const Environment& env,
                                                          const Constraint& constraint,
                                                          const OracleConfig& cfg = {});

}  // namespace divplan
