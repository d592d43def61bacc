#include "divplan/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "divplan/errors.hpp"

namespace divplan {

namespace {

using json = nlohmann::json;

constexpr double kEdgeEps = 1e-12;

double point_segment_distance(Point p, Point a, Point b) {
    const Point ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 <= 0.0) {
        return distance(p, a);
    }
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + t * ab);
}

bool rect_contains(const Rect& r, Point p) {
    return p.x >= r.min.x && p.x <= r.max.x && p.y >= r.min.y && p.y <= r.max.y;
}

bool polygon_contains(const Polygon& poly, Point p) {
    const auto& v = poly.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point a = v[i];
        const Point b = v[(i + 1) % v.size()];
        if (cross(b - a, p - a) < -kEdgeEps) {
            return false;
        }
    }
    return true;
}

Point parse_point(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ParseError(std::string(what) + ": expected [x,y]");
    }
    Point p{j[0].get<double>(), j[1].get<double>()};
    if (!is_finite(p)) {
        throw InvariantViolation(std::string(what) + ": coordinates must be finite");
    }
    return p;
}

}  // namespace

bool shape_contains(const Shape& s, Point p) {
    return std::visit(
        [&](const auto& g) -> bool {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Rect>) {
                return rect_contains(g, p);
            } else if constexpr (std::is_same_v<T, Circle>) {
                return distance(p, g.center) <= g.radius;
            } else {
                return polygon_contains(g, p);
            }
        },
        s);
}

double shape_distance(const Shape& s, Point p) {
    return std::visit(
        [&](const auto& g) -> double {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Rect>) {
                const double dx = std::max({g.min.x - p.x, 0.0, p.x - g.max.x});
                const double dy = std::max({g.min.y - p.y, 0.0, p.y - g.max.y});
                return std::hypot(dx, dy);
            } else if constexpr (std::is_same_v<T, Circle>) {
                return std::max(0.0, distance(p, g.center) - g.radius);
            } else {
                if (polygon_contains(g, p)) {
                    return 0.0;
                }
                double best = std::numeric_limits<double>::infinity();
                const auto& v = g.vertices;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    best = std::min(best, point_segment_distance(p, v[i], v[(i + 1) % v.size()]));
                }
                return best;
            }
        },
        s);
}

Point shape_centroid(const Shape& s) {
    return std::visit(
        [&](const auto& g) -> Point {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Rect>) {
                return {0.5 * (g.min.x + g.max.x), 0.5 * (g.min.y + g.max.y)};
            } else if constexpr (std::is_same_v<T, Circle>) {
                return g.center;
            } else {
                // Standard area-weighted polygon centroid.
                const auto& v = g.vertices;
                double area2 = 0.0;
                double cx = 0.0;
                double cy = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    const Point a = v[i];
                    const Point b = v[(i + 1) % v.size()];
                    const double w = cross(a, b);
                    area2 += w;
                    cx += (a.x + b.x) * w;
                    cy += (a.y + b.y) * w;
                }
                return {cx / (3.0 * area2), cy / (3.0 * area2)};
            }
        },
        s);
}

Rect shape_bbox(const Shape& s) {
    return std::visit(
        [&](const auto& g) -> Rect {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Rect>) {
                return g;
            } else if constexpr (std::is_same_v<T, Circle>) {
                return {{g.center.x - g.radius, g.center.y - g.radius},
                        {g.center.x + g.radius, g.center.y + g.radius}};
            } else {
                Rect box{{g.vertices[0]}, {g.vertices[0]}};
                for (const Point& p : g.vertices) {
                    box.min.x = std::min(box.min.x, p.x);
                    box.min.y = std::min(box.min.y, p.y);
                    box.max.x = std::max(box.max.x, p.x);
                    box.max.y = std::max(box.max.y, p.y);
                }
                return box;
            }
        },
        s);
}

void validate_shape(const Shape& s) {
    std::visit(
        [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Rect>) {
                if (!is_finite(g.min) || !is_finite(g.max)) {
                    throw InvariantViolation("rect: corners must be finite");
                }
                if (!(g.min.x < g.max.x) || !(g.min.y < g.max.y)) {
                    throw InvariantViolation("rect: min must be < max per axis");
                }
            } else if constexpr (std::is_same_v<T, Circle>) {
                if (!is_finite(g.center) || !std::isfinite(g.radius)) {
                    throw InvariantViolation("circle: geometry must be finite");
                }
                if (!(g.radius > 0.0)) {
                    throw InvariantViolation("circle: radius must be > 0");
                }
            } else {
                const auto& v = g.vertices;
                if (v.size() < 3) {
                    throw InvariantViolation("polygon: needs at least 3 vertices");
                }
                double area2 = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (!is_finite(v[i])) {
                        throw InvariantViolation("polygon: vertices must be finite");
                    }
                    const Point a = v[i];
                    const Point b = v[(i + 1) % v.size()];
                    const Point c = v[(i + 2) % v.size()];
                    if (cross(b - a, c - b) < -kEdgeEps) {
                        throw InvariantViolation("polygon: must be convex and counter-clockwise");
                    }
                    area2 += cross(a, b);
                }
                if (!(area2 > kEdgeEps)) {
                    throw InvariantViolation("polygon: must have positive area (counter-clockwise)");
                }
            }
        },
        s);
}

void validate_environment(const Environment& env) {
    validate_shape(Shape{env.bounds});
    std::map<std::string, std::size_t> labels;
    for (std::size_t i = 0; i < env.obstacles.size(); ++i) {
        const Obstacle& ob = env.obstacles[i];
        validate_shape(ob.shape);
        if (ob.label.empty()) {
            continue;
        }
        for (char c : ob.label) {
            if (std::isupper(static_cast<unsigned char>(c))) {
                throw InvariantViolation("object name must be lowercase: " + ob.label);
            }
        }
        if (!labels.emplace(ob.label, i).second) {
            throw InvariantViolation("duplicate object name: " + ob.label);
        }
        const Rect box = shape_bbox(ob.shape);
        if (box.min.x < env.bounds.min.x || box.min.y < env.bounds.min.y ||
            box.max.x > env.bounds.max.x || box.max.y > env.bounds.max.y) {
            throw InvariantViolation("named object outside bounds: " + ob.label);
        }
    }
    if (labels != env.objects) {
        throw InvariantViolation("objects map inconsistent with obstacle labels");
    }
}

Environment load_scene_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("scene: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("bounds") || !doc.contains("obstacles")) {
        throw ParseError("scene: expected object with 'bounds' and 'obstacles'");
    }

    Environment env;
    const json& b = doc["bounds"];
    if (!b.is_array() || b.size() != 4) {
        throw ParseError("scene: bounds must be [xmin,ymin,xmax,ymax]");
    }
    for (const auto& x : b) {
        if (!x.is_number()) {
            throw ParseError("scene: bounds must be numeric");
        }
    }
    env.bounds = {{b[0].get<double>(), b[1].get<double>()},
                  {b[2].get<double>(), b[3].get<double>()}};

    if (!doc["obstacles"].is_array()) {
        throw ParseError("scene: obstacles must be an array");
    }
    for (const json& jo : doc["obstacles"]) {
        if (!jo.is_object() || !jo.contains("shape") || !jo["shape"].is_string()) {
            throw ParseError("scene: obstacle needs a 'shape' string");
        }
        Obstacle ob;
        const std::string kind = jo["shape"].get<std::string>();
        if (kind == "rect") {
            if (!jo.contains("rect") || !jo["rect"].is_array() || jo["rect"].size() != 4) {
                throw ParseError("scene: rect obstacle needs 'rect': [xmin,ymin,xmax,ymax]");
            }
            const json& r = jo["rect"];
            for (const auto& x : r) {
                if (!x.is_number()) {
                    throw ParseError("scene: rect coordinates must be numeric");
                }
            }
            ob.shape = Rect{{r[0].get<double>(), r[1].get<double>()},
                            {r[2].get<double>(), r[3].get<double>()}};
        } else if (kind == "circle") {
            if (!jo.contains("center") || !jo.contains("radius") || !jo["radius"].is_number()) {
                throw ParseError("scene: circle obstacle needs 'center' and numeric 'radius'");
            }
            ob.shape = Circle{parse_point(jo["center"], "circle center"), jo["radius"].get<double>()};
        } else if (kind == "polygon") {
            if (!jo.contains("vertices") || !jo["vertices"].is_array()) {
                throw ParseError("scene: polygon obstacle needs 'vertices'");
            }
            Polygon poly;
            for (const json& jv : jo["vertices"]) {
                poly.vertices.push_back(parse_point(jv, "polygon vertex"));
            }
            ob.shape = std::move(poly);
        } else {
            throw ParseError("scene: unknown shape kind '" + kind + "'");
        }
        if (jo.contains("label")) {
            if (!jo["label"].is_string()) {
                throw ParseError("scene: label must be a string");
            }
            ob.label = jo["label"].get<std::string>();
        }
        env.obstacles.push_back(std::move(ob));
    }

    for (std::size_t i = 0; i < env.obstacles.size(); ++i) {
        if (!env.obstacles[i].label.empty()) {
            env.objects[env.obstacles[i].label] = i;
        }
    }
    validate_environment(env);
    return env;
}

Environment load_scene(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) {
        throw ParseError("cannot open scene file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scene_json(buf.str());
}

std::string scene_to_json(const Environment& env) {
    json doc;
    doc["bounds"] = {env.bounds.min.x, env.bounds.min.y, env.bounds.max.x, env.bounds.max.y};
    doc["obstacles"] = json::array();
    for (const Obstacle& ob : env.obstacles) {
        json jo;
        std::visit(
            [&](const auto& g) {
                using T = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<T, Rect>) {
                    jo["shape"] = "rect";
                    jo["rect"] = {g.min.x, g.min.y, g.max.x, g.max.y};
                } else if constexpr (std::is_same_v<T, Circle>) {
                    jo["shape"] = "circle";
                    jo["center"] = {g.center.x, g.center.y};
                    jo["radius"] = g.radius;
                } else {
                    jo["shape"] = "polygon";
                    json verts = json::array();
                    for (const Point& p : g.vertices) {
                        verts.push_back({p.x, p.y});
                    }
                    jo["vertices"] = std::move(verts);
                }
            },
            ob.shape);
        if (!ob.label.empty()) {
            jo["label"] = ob.label;
        }
        doc["obstacles"].push_back(std::move(jo));
    }
    return doc.dump();
}

bool collides(const Environment& env, Point p) {
    if (p.x < env.bounds.min.x || p.x > env.bounds.max.x ||
        p.y < env.bounds.min.y || p.y > env.bounds.max.y) {
        return true;
    }
    for (const Obstacle& ob : env.obstacles) {
        if (shape_contains(ob.shape, p)) {
            return true;
        }
    }
    return false;
}

bool segment_free(const Environment& env, Point a, Point b, double step) {
    if (!(step > 0.0)) {
        throw InvariantViolation("segment_free: step must be > 0");
    }
    // Canonical endpoint order makes the sample set identical for (a,b) and
    // (b,a), so the result is exactly symmetric.
    Point lo = a;
    Point hi = b;
    if (hi.x < lo.x || (hi.x == lo.x && hi.y < lo.y)) {
        std::swap(lo, hi);
    }
    const double len = distance(lo, hi);
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n);
        if (collides(env, lo + t * (hi - lo))) {
            return false;
        }
    }
    return true;
}

double distance_to_object(const Environment& env, Point p, const std::string& name) {
    const auto it = env.objects.find(name);
    if (it == env.objects.end()) {
        throw UnknownObject("no object named '" + name + "'");
    }
    return shape_distance(env.obstacles[it->second].shape, p);
}

Point object_centroid(const Environment& env, const std::string& name) {
    const auto it = env.objects.find(name);
    if (it == env.objects.end()) {
        throw UnknownObject("no object named '" + name + "'");
    }
    return shape_centroid(env.obstacles[it->second].shape);
}

}  // namespace divplan
