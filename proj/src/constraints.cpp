#include "divplan/constraints.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "divplan/diversity.hpp"
#include "divplan/errors.hpp"

namespace divplan {

namespace {

using json = nlohmann::json;

double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

// True when segment p0->p1 crosses the open segment a->b at a point outside
// both shapes.
bool crosses_between(Point p0, Point p1, Point a, Point b, const Shape& sa, const Shape& sb) {
    const Point r = p1 - p0;
    const Point s = b - a;
    const double denom = cross(r, s);
    if (std::abs(denom) < 1e-15) {
        return false;  // parallel or degenerate
    }
    const Point qp = a - p0;
    const double t = cross(qp, s) / denom;  // along the path segment
    const double u = cross(qp, r) / denom;  // along the centroid segment
    if (t < 0.0 || t > 1.0 || u <= 0.0 || u >= 1.0) {
        return false;
    }
    const Point hit = p0 + t * r;
    return !shape_contains(sa, hit) && !shape_contains(sb, hit);
}

const ProximitySpec* as_proximity(const Constraint& c) {
    return std::get_if<ProximitySpec>(&c.spec);
}

ProximityMode parse_mode(const std::string& s) {
    if (s == "near") return ProximityMode::near;
    if (s == "far") return ProximityMode::far;
    if (s == "between") return ProximityMode::between;
    throw ParseError("constraint: unknown proximity mode '" + s + "'");
}

StyleKind parse_style(const std::string& s) {
    if (s == "straight") return StyleKind::straight;
    if (s == "curved") return StyleKind::curved;
    if (s == "zigzag") return StyleKind::zigzag;
    if (s == "shortest") return StyleKind::shortest;
    throw ParseError("constraint: unknown style kind '" + s + "'");
}

const char* mode_name(ProximityMode m) {
    switch (m) {
        case ProximityMode::near: return "near";
        case ProximityMode::far: return "far";
        default: return "between";
    }
}

const char* style_name(StyleKind k) {
    switch (k) {
        case StyleKind::straight: return "straight";
        case StyleKind::curved: return "curved";
        case StyleKind::zigzag: return "zigzag";
        default: return "shortest";
    }
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Shared scorer; `shortest_ref` is the length that earns a 100 under the
// shortest style.
double score_metrics(const PathMetrics& m, const Constraint& c, const OracleConfig& cfg,
                     double shortest_ref) {
    if (const ProximitySpec* p = as_proximity(c)) {
        switch (p->mode) {
            case ProximityMode::near:
                return 100.0 * std::exp(-m.mean_obj_distance.at(p->object_a) / cfg.sigma);
            case ProximityMode::far:
                return 100.0 * (1.0 - std::exp(-m.min_obj_distance.at(p->object_a) / cfg.sigma));
            case ProximityMode::between:
                return m.between_crossing ? 100.0 : 0.0;
        }
    }
    const StyleKind kind = std::get<StyleSpec>(c.spec).kind;
    switch (kind) {
        case StyleKind::straight:
            return 100.0 * clamp01(2.0 - m.straightness);
        case StyleKind::shortest:
            return m.length > 0.0 ? 100.0 * shortest_ref / m.length : 100.0;
        case StyleKind::curved:
            return 100.0 * std::min(m.total_turning / cfg.full_turn, 1.0) /
                   (1.0 + m.curvature_sign_flips);
        case StyleKind::zigzag:
            return 100.0 * std::min(m.curvature_sign_flips / cfg.full_flips, 1.0) *
                   clamp01((m.straightness - 1.0) / cfg.zigzag_slack);
    }
    return 0.0;
}

}  // namespace

void validate_constraint(const Constraint& constraint, const Environment& env) {
    if (const ProximitySpec* p = as_proximity(constraint)) {
        if (p->object_a.empty()) {
            throw InvariantViolation("constraint: proximity needs object_a");
        }
        if (p->mode == ProximityMode::between && !p->object_b) {
            throw InvariantViolation("constraint: between needs object_b");
        }
        if (p->mode != ProximityMode::between && p->object_b) {
            throw InvariantViolation("constraint: object_b only applies to between");
        }
        if (!env.objects.count(p->object_a)) {
            throw UnknownObject("no object named '" + p->object_a + "'");
        }
        if (p->object_b && !env.objects.count(*p->object_b)) {
            throw UnknownObject("no object named '" + *p->object_b + "'");
        }
    }
}

Constraint constraint_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("constraint: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("instruction") || !doc["instruction"].is_string() ||
        !doc.contains("spec") || !doc["spec"].is_object()) {
        throw ParseError("constraint: expected {\"instruction\", \"spec\"}");
    }
    Constraint c;
    c.instruction = doc["instruction"].get<std::string>();
    const json& spec = doc["spec"];
    if (!spec.contains("type") || !spec["type"].is_string()) {
        throw ParseError("constraint: spec needs a 'type'");
    }
    const std::string type = spec["type"].get<std::string>();
    if (type == "proximity") {
        ProximitySpec p;
        if (!spec.contains("mode") || !spec["mode"].is_string() ||
            !spec.contains("object_a") || !spec["object_a"].is_string()) {
            throw ParseError("constraint: proximity spec needs 'mode' and 'object_a'");
        }
        p.mode = parse_mode(spec["mode"].get<std::string>());
        p.object_a = spec["object_a"].get<std::string>();
        if (spec.contains("object_b")) {
            if (!spec["object_b"].is_string()) {
                throw ParseError("constraint: object_b must be a string");
            }
            p.object_b = spec["object_b"].get<std::string>();
        }
        if (p.mode == ProximityMode::between && !p.object_b) {
            throw InvariantViolation("constraint: between needs object_b");
        }
        c.spec = std::move(p);
    } else if (type == "style") {
        if (!spec.contains("kind") || !spec["kind"].is_string()) {
            throw ParseError("constraint: style spec needs 'kind'");
        }
        c.spec = StyleSpec{parse_style(spec["kind"].get<std::string>())};
    } else {
        throw ParseError("constraint: unknown spec type '" + type + "'");
    }
    return c;
}

std::string constraint_to_json(const Constraint& constraint) {
    json doc;
    doc["instruction"] = constraint.instruction;
    json spec;
    if (const ProximitySpec* p = as_proximity(constraint)) {
        spec["type"] = "proximity";
        spec["mode"] = mode_name(p->mode);
        spec["object_a"] = p->object_a;
        if (p->object_b) {
            spec["object_b"] = *p->object_b;
        }
    } else {
        spec["type"] = "style";
        spec["kind"] = style_name(std::get<StyleSpec>(constraint.spec).kind);
    }
    doc["spec"] = std::move(spec);
    return doc.dump();
}

PathMetrics compute_metrics(const Path& path, const Environment& env,
                            const Constraint& constraint, int m, double flip_threshold) {
    validate_constraint(constraint, env);
    const Path rp = resample(path, m);
    const auto& w = rp.waypoints;

    PathMetrics out;
    out.length = path_length(rp);
    out.chord = distance(w.front(), w.back());
    out.straightness = out.chord > 0.0 ? out.length / out.chord : 1.0;

    // Heading changes over non-degenerate segments.
    std::vector<double> headings;
    for (std::size_t i = 1; i < w.size(); ++i) {
        const Point d = w[i] - w[i - 1];
        if (norm(d) > 1e-12) {
            headings.push_back(std::atan2(d.y, d.x));
        }
    }
    int regime = 0;
    double acc = 0.0;
    for (std::size_t i = 1; i < headings.size(); ++i) {
        const double delta = wrap_angle(headings[i] - headings[i - 1]);
        out.total_turning += std::abs(delta);
        acc += delta;
        if (std::abs(acc) >= flip_threshold) {
            const int sign = acc > 0.0 ? 1 : -1;
            if (regime != 0 && sign != regime) {
                ++out.curvature_sign_flips;
            }
            regime = sign;
            acc = 0.0;
        }
    }

    if (const ProximitySpec* p = as_proximity(constraint)) {
        std::vector<std::string> names{p->object_a};
        if (p->object_b) {
            names.push_back(*p->object_b);
        }
        for (const std::string& name : names) {
            double lo = std::numeric_limits<double>::infinity();
            double sum = 0.0;
            for (const Point& pt : w) {
                const double d = distance_to_object(env, pt, name);
                lo = std::min(lo, d);
                sum += d;
            }
            out.min_obj_distance[name] = lo;
            out.mean_obj_distance[name] = sum / static_cast<double>(w.size());
        }
        if (p->mode == ProximityMode::between) {
            const Point ca = object_centroid(env, p->object_a);
            const Point cb = object_centroid(env, *p->object_b);
            const Shape& sa = env.obstacles[env.objects.at(p->object_a)].shape;
            const Shape& sb = env.obstacles[env.objects.at(*p->object_b)].shape;
            for (std::size_t i = 1; i < w.size() && !out.between_crossing; ++i) {
                out.between_crossing = crosses_between(w[i - 1], w[i], ca, cb, sa, sb);
            }
        }
    }
    return out;
}

double oracle_score(const Path& path, const Environment& env, const Constraint& constraint,
                    const OracleConfig& cfg) {
    const PathMetrics m =
        compute_metrics(path, env, constraint, cfg.resample_points, cfg.flip_threshold);
    return score_metrics(m, constraint, cfg, m.chord);
}

std::pair<std::size_t, std::vector<double>> oracle_select(const std::vector<Path>& candidates,
                                                          const Environment& env,
                                                          const Constraint& constraint,
                                                          const OracleConfig& cfg) {
    if (candidates.empty()) {
        throw InvariantViolation("oracle_select: no candidates");
    }
    std::vector<PathMetrics> metrics;
    metrics.reserve(candidates.size());
    for (const Path& p : candidates) {
        metrics.push_back(
            compute_metrics(p, env, constraint, cfg.resample_points, cfg.flip_threshold));
    }
    double shortest_ref = metrics[0].length;
    for (const PathMetrics& m : metrics) {
        shortest_ref = std::min(shortest_ref, m.length);
    }
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (const PathMetrics& m : metrics) {
        scores.push_back(score_metrics(m, constraint, cfg, shortest_ref));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) {
            best = i;
        }
    }
    return {best, std::move(scores)};
}

}  // namespace divplan
