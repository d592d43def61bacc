#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace divplan {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline double distance(Point a, Point b) { return norm(b - a); }
inline bool is_finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

struct Rect {
    Point min;
    Point max;  // min < max per axis
};

struct Circle {
    Point center;
    double radius = 0.0;  // > 0
};

// Convex, counter-clockwise, >= 3 vertices.
struct Polygon {
    std::vector<Point> vertices;
};

using Shape = std::variant<Rect, Circle, Polygon>;

struct Obstacle {
    Shape shape;
    std::string label;  // empty = unnamed
};

// Scene representation. Immutable after load; all queries below are pure and
// safe to run concurrently from any number of workers.
struct Environment {
    Rect bounds;
    std::vector<Obstacle> obstacles;
    std::map<std::string, std::size_t> objects;  // label -> index into obstacles
};

// Closed-set containment: points on the boundary count as inside.
bool shape_contains(const Shape& s, Point p);

// Euclidean distance to the closest point of the shape; 0 if inside or on it.
double shape_distance(const Shape& s, Point p);

// Area centroid: circle center, rectangle center, polygon area centroid.
Point shape_centroid(const Shape& s);

Rect shape_bbox(const Shape& s);

// Throw InvariantViolation on degenerate geometry.
void validate_shape(const Shape& s);
void validate_environment(const Environment& env);

// Scene JSON:
//   {"bounds": [xmin,ymin,xmax,ymax],
//    "obstacles": [{"shape": "rect", "rect": [xmin,ymin,xmax,ymax], "label": "table"},
//                  {"shape": "circle", "center": [x,y], "radius": r},
//                  {"shape": "polygon", "vertices": [[x,y], ...]}]}
// All coordinates in meters. Throws ParseError / InvariantViolation.
Environment load_scene(const std::string& path);
Environment load_scene_json(const std::string& text);
std::string scene_to_json(const Environment& env);

// True iff p is inside or on the boundary of any obstacle, or outside bounds.
bool collides(const Environment& env, Point p);

// True iff every sample at spacing <= step along a-b (endpoints included) is
// collision-free. step > 0. Exactly symmetric in a and b.
bool segment_free(const Environment& env, Point a, Point b, double step);

// Distance from p to the named object's shape (0 if inside). UnknownObject if
// the name is not in env.objects.
double distance_to_object(const Environment& env, Point p, const std::string& name);

Point object_centroid(const Environment& env, const std::string& name);

}  // namespace divplan
