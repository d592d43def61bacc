#include "divplan/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <zlib.h>

#include "divplan/diversity.hpp"
#include "divplan/errors.hpp"

namespace divplan {

namespace {

// Glyphs are 8 rows of 8 cells, '#' marks an inked pixel. Drawn at x-height
// with simple ascenders and descenders so labels stay legible at scale 2.
struct Glyph {
    char ch;
    const char* rows[8];
};

constexpr Glyph kFont[] = {
    {'a', {"        ",
           "        ",
           " ####   ",
           "     #  ",
           " #####  ",
           "#    #  ",
           "#   ##  ",
           " ### #  "}},
    {'b', {"#       ",
           "#       ",
           "# ###   ",
           "##   #  ",
           "#    #  ",
           "#    #  ",
           "##   #  ",
           "# ###   "}},
    {'c', {"        ",
           "        ",
           " ####   ",
           "#    #  ",
           "#       ",
           "#       ",
           "#    #  ",
           " ####   "}},
    {'d', {"     #  ",
           "     #  ",
           " ### #  ",
           "#   ##  ",
           "#    #  ",
           "#    #  ",
           "#   ##  ",
           " ### #  "}},
    {'e', {"        ",
           "        ",
           " ####   ",
           "#    #  ",
           "######  ",
           "#       ",
           "#    #  ",
           " ####   "}},
    {'f', {"  ###   ",
           " #      ",
           " #      ",
           "####    ",
           " #      ",
           " #      ",
           " #      ",
           " #      "}},
    {'g', {"        ",
           "        ",
           " ### #  ",
           "#   ##  ",
           "#    #  ",
           " #####  ",
           "     #  ",
           " ####   "}},
    {'h', {"#       ",
           "#       ",
           "# ###   ",
           "##   #  ",
           "#    #  ",
           "#    #  ",
           "#    #  ",
           "#    #  "}},
    {'i', {"  #     ",
           "        ",
           " ##     ",
           "  #     ",
           "  #     ",
           "  #     ",
           "  #     ",
           " ###    "}},
    {'j', {"   #    ",
           "        ",
           "  ##    ",
           "   #    ",
           "   #    ",
           "   #    ",
           "#  #    ",
           " ##     "}},
    {'k', {"#       ",
           "#       ",
           "#   #   ",
           "#  #    ",
           "###     ",
           "#  #    ",
           "#   #   ",
           "#    #  "}},
    {'l', {" ##     ",
           "  #     ",
           "  #     ",
           "  #     ",
           "  #     ",
           "  #     ",
           "  #     ",
           " ###    "}},
    {'m', {"        ",
           "        ",
           "## ##   ",
           "#  # #  ",
           "#  # #  ",
           "#  # #  ",
           "#  # #  ",
           "#  # #  "}},
    {'n', {"        ",
           "        ",
           "# ###   ",
           "##   #  ",
           "#    #  ",
           "#    #  ",
           "#    #  ",
           "#    #  "}},
    {'o', {"        ",
           "        ",
           " ####   ",
           "#    #  ",
           "#    #  ",
           "#    #  ",
           "#    #  ",
           " ####   "}},
    {'p', {"        ",
           "        ",
           "# ###   ",
           "##   #  ",
           "#    #  ",
           "##   #  ",
           "# ###   ",
           "#       "}},
    {'q', {"        ",
           "        ",
           " ### #  ",
           "#   ##  ",
           "#    #  ",
           "#   ##  ",
           " ### #  ",
           "     #  "}},
    {'r', {"        ",
           "        ",
           "# ###   ",
           "##   #  ",
           "#       ",
           "#       ",
           "#       ",
           "#       "}},
    {'s', {"        ",
           "        ",
           " ####   ",
           "#       ",
           " ####   ",
           "     #  ",
           "#    #  ",
           " ####   "}},
    {'t', {" #      ",
           " #      ",
           "####    ",
           " #      ",
           " #      ",
           " #      ",
           " #  #   ",
           "  ##    "}},
    {'u', {"        ",
           "        ",
           "#    #  ",
           "#    #  ",
           "#    #  ",
           "#    #  ",
           "#   ##  ",
           " ### #  "}},
    {'v', {"        ",
           "        ",
           "#    #  ",
           "#    #  ",
           "#    #  ",
           " #  #   ",
           " #  #   ",
           "  ##    "}},
    {'w', {"        ",
           "        ",
           "#  # #  ",
           "#  # #  ",
           "#  # #  ",
           "#  # #  ",
           "#  # #  ",
           " ## #   "}},
    {'x', {"        ",
           "        ",
           "#    #  ",
           " #  #   ",
           "  ##    ",
           "  ##    ",
           " #  #   ",
           "#    #  "}},
    {'y', {"        ",
           "        ",
           "#    #  ",
           "#    #  ",
           "#   ##  ",
           " ### #  ",
           "     #  ",
           " ####   "}},
    {'z', {"        ",
           "        ",
           "######  ",
           "    #   ",
           "   #    ",
           "  #     ",
           " #      ",
           "######  "}},
    {'0', {" ####   ",
           "#    #  ",
           "#   ##  ",
           "#  # #  ",
           "# #  #  ",
           "##   #  ",
           "#    #  ",
           " ####   "}},
    {'1', {"  #     ",
           " ##     ",
           "  #     ",
           "  #     ",
           "  #     ",
           "  #     ",
           "  #     ",
           " ###    "}},
    {'2', {" ####   ",
           "#    #  ",
           "     #  ",
           "    #   ",
           "   #    ",
           "  #     ",
           " #      ",
           "######  "}},
    {'3', {" ####   ",
           "#    #  ",
           "     #  ",
           "  ###   ",
           "     #  ",
           "     #  ",
           "#    #  ",
           " ####   "}},
    {'4', {"   ##   ",
           "  # #   ",
           " #  #   ",
           "#   #   ",
           "######  ",
           "    #   ",
           "    #   ",
           "    #   "}},
    {'5', {"######  ",
           "#       ",
           "#       ",
           "#####   ",
           "     #  ",
           "     #  ",
           "#    #  ",
           " ####   "}},
    {'6', {" ####   ",
           "#       ",
           "#       ",
           "#####   ",
           "#    #  ",
           "#    #  ",
           "#    #  ",
           " ####   "}},
    {'7', {"######  ",
           "     #  ",
           "    #   ",
           "   #    ",
           "  #     ",
           "  #     ",
           "  #     ",
           "  #     "}},
    {'8', {" ####   ",
           "#    #  ",
           "#    #  ",
           " ####   ",
           "#    #  ",
           "#    #  ",
           "#    #  ",
           " ####   "}},
    {'9', {" ####   ",
           "#    #  ",
           "#    #  ",
           " #####  ",
           "     #  ",
           "     #  ",
           "     #  ",
           " ####   "}},
    {'-', {"        ",
           "        ",
           "        ",
           "        ",
           " ####   ",
           "        ",
           "        ",
           "        "}},
    {'_', {"        ",
           "        ",
           "        ",
           "        ",
           "        ",
           "        ",
           "        ",
           "######  "}},
};

const Glyph* find_glyph(char c) {
    for (const Glyph& g : kFont) {
        if (g.ch == c) return &g;
    }
    return nullptr;
}

constexpr int kGlyphCell = 8;

void fill_disk(Image& img, double cx, double cy, double radius, Color color) {
    int x0 = static_cast<int>(std::floor(cx - radius)) - 1;
    int x1 = static_cast<int>(std::ceil(cx + radius)) + 1;
    int y0 = static_cast<int>(std::floor(cy - radius)) - 1;
    int y1 = static_cast<int>(std::ceil(cy + radius)) + 1;
    double r2 = radius * radius;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double dx = x + 0.5 - cx;
            double dy = y + 0.5 - cy;
            if (dx * dx + dy * dy <= r2) img.set(x, y, color);
        }
    }
}

// Thick segment as a dense sweep of small disks; used only for the short
// heading tick so the cost does not matter.
void stroke_segment(Image& img, double x0, double y0, double x1, double y1,
                    double half_width, Color color) {
    double dx = x1 - x0;
    double dy = y1 - y0;
    double len = std::hypot(dx, dy);
    int steps = std::max(1, static_cast<int>(std::ceil(len / 0.25)));
    for (int i = 0; i <= steps; ++i) {
        double t = static_cast<double>(i) / steps;
        fill_disk(img, x0 + t * dx, y0 + t * dy, half_width, color);
    }
}

std::vector<std::pair<double, double>> project_path(const Path& path, const Transform& tf) {
    std::vector<std::pair<double, double>> px;
    px.reserve(path.waypoints.size());
    for (const Point& p : path.waypoints) px.emplace_back(tf.px(p), tf.py(p));
    return px;
}

double polyline_pixel_length(const std::vector<std::pair<double, double>>& pts) {
    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        total += std::hypot(pts[i].first - pts[i - 1].first,
                            pts[i].second - pts[i - 1].second);
    }
    return total;
}

// Point at pixel arc length s along the projected polyline, clamped to the
// final vertex so cumulative rounding cannot walk past the end.
std::pair<double, double> point_at(const std::vector<std::pair<double, double>>& pts,
                                   double s) {
    double walked = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        double seg = std::hypot(pts[i].first - pts[i - 1].first,
                                pts[i].second - pts[i - 1].second);
        if (walked + seg >= s && seg > 0.0) {
            double t = (s - walked) / seg;
            return {pts[i - 1].first + t * (pts[i].first - pts[i - 1].first),
                    pts[i - 1].second + t * (pts[i].second - pts[i - 1].second)};
        }
        walked += seg;
    }
    return pts.back();
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
    append_be32(out, static_cast<std::uint32_t>(data.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + data.size())));
    append_be32(out, crc);
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void draw_trail(Image& img, const Environment& env, const Path& path,
                Color color, const RenderConfig& cfg) {
    if (path.waypoints.size() < 2) {
        throw InvariantViolation("trail path needs at least two waypoints");
    }
    Transform tf = Transform::fit(env.bounds, img.width, img.height);
    auto pts = project_path(path, tf);
    double length = polyline_pixel_length(pts);
    int count = static_cast<int>(std::floor(length / cfg.dot_spacing)) + 1;
    for (int i = 0; i < count; ++i) {
        auto [cx, cy] = point_at(pts, i * static_cast<double>(cfg.dot_spacing));
        fill_disk(img, cx, cy, cfg.dot_radius, color);
    }
}

Image Image::filled(int w, int h, Color c) {
    Image img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = c.r;
        img.pixels[i + 1] = c.g;
        img.pixels[i + 2] = c.b;
    }
    return img;
}

Color Image::get(int x, int y) const {
    std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void Image::set(int x, int y, Color c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
}

std::vector<NamedColor> default_palette() {
    return {
        {"red", {230, 30, 30}},    {"green", {30, 170, 30}},
        {"blue", {40, 60, 230}},   {"orange", {245, 140, 20}},
        {"purple", {140, 40, 190}}, {"cyan", {20, 190, 200}},
        {"magenta", {230, 40, 200}},
    };
}

void validate_render_config(const RenderConfig& cfg) {
    if (cfg.image_size <= 0) throw InvariantViolation("image_size must be positive");
    if (cfg.dot_radius <= 0) throw InvariantViolation("dot_radius must be positive");
    if (cfg.dot_spacing <= 2 * cfg.dot_radius) {
        throw InvariantViolation("dot_spacing must exceed the dot diameter");
    }
    if (cfg.gallery_frames < 2) throw InvariantViolation("gallery_frames must be at least 2");
    if (cfg.palette.empty()) throw InvariantViolation("palette must not be empty");
}

Transform Transform::fit(const Rect& bounds, int width, int height) {
    Transform tf;
    tf.world_xmin = bounds.min.x;
    tf.world_ymax = bounds.max.y;
    tf.scale_x = width / (bounds.max.x - bounds.min.x);
    tf.scale_y = height / (bounds.max.y - bounds.min.y);
    return tf;
}

Image render_base(const Environment& env, const RenderConfig& cfg) {
    validate_render_config(cfg);
    validate_environment(env);
    Image img = Image::filled(cfg.image_size, cfg.image_size, cfg.background);
    Transform tf = Transform::fit(env.bounds, img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            Point w = tf.world(x + 0.5, y + 0.5);
            for (const Obstacle& obs : env.obstacles) {
                if (shape_contains(obs.shape, w)) {
                    img.set(x, y, obs.label.empty() ? cfg.obstacle_color
                                                    : cfg.object_color);
                    break;
                }
            }
        }
    }
    constexpr int kLabelScale = 2;
    for (const Obstacle& obs : env.obstacles) {
        if (obs.label.empty()) continue;
        Point c = shape_centroid(obs.shape);
        int text_w = static_cast<int>(obs.label.size()) * kGlyphCell * kLabelScale;
        int x = static_cast<int>(std::lround(tf.px(c))) - text_w / 2;
        int y = static_cast<int>(std::lround(tf.py(c))) - kGlyphCell * kLabelScale / 2;
        draw_text(img, x, y, obs.label, cfg.label_color, kLabelScale);
    }
    return img;
}

Image render_trails(const Environment& env, const std::vector<Path>& paths,
                    const RenderConfig& cfg) {
    if (paths.empty()) throw InvariantViolation("render_trails needs at least one path");
    if (paths.size() > cfg.palette.size()) {
        throw PaletteExhausted("cannot draw " + std::to_string(paths.size()) +
                               " paths with " + std::to_string(cfg.palette.size()) +
                               " palette colors");
    }
    Image img = render_base(env, cfg);
    for (std::size_t i = 0; i < paths.size(); ++i) {
        draw_trail(img, env, paths[i], cfg.palette[i].rgb, cfg);
    }
    return img;
}

Image render_single(const Environment& env, const Path& path, Color color,
                    const RenderConfig& cfg) {
    Image img = render_base(env, cfg);
    draw_trail(img, env, path, color, cfg);
    return img;
}

Image render_gallery(const Environment& env, const std::vector<Path>& paths,
                     const RenderConfig& cfg) {
    if (paths.empty()) throw InvariantViolation("render_gallery needs at least one path");
    validate_render_config(cfg);
    int cell = cfg.image_size / cfg.gallery_frames;
    if (cell <= 0) throw InvariantViolation("gallery cell size underflows");
    Image base = render_base(env, cfg);
    Image grid = Image::filled(cell * cfg.gallery_frames,
                               cell * static_cast<int>(paths.size()),
                               cfg.background);
    Transform tf = Transform::fit(env.bounds, base.width, base.height);
    double marker_radius = base.width / 56.0;
    double tick_len = 1.8 * marker_radius;
    for (std::size_t row = 0; row < paths.size(); ++row) {
        Path stops = resample(paths[row], cfg.gallery_frames);
        auto pts = project_path(stops, tf);
        for (int col = 0; col < cfg.gallery_frames; ++col) {
            Image frame = base;
            auto [cx, cy] = pts[col];
            // Heading points along the coarse motion direction; the last
            // frame keeps the direction of arrival.
            std::size_t a = (col + 1 < cfg.gallery_frames) ? col : col - 1;
            std::size_t b = a + 1;
            double dx = pts[b].first - pts[a].first;
            double dy = pts[b].second - pts[a].second;
            double norm = std::hypot(dx, dy);
            fill_disk(frame, cx, cy, marker_radius, cfg.robot_color);
            if (norm > 1e-12) {
                stroke_segment(frame, cx, cy, cx + dx / norm * tick_len,
                               cy + dy / norm * tick_len, marker_radius / 3.0,
                               cfg.robot_color);
            }
            Image small = resize_area_average(frame, cell, cell);
            for (int y = 0; y < cell; ++y) {
                for (int x = 0; x < cell; ++x) {
                    grid.set(col * cell + x, static_cast<int>(row) * cell + y,
                             small.get(x, y));
                }
            }
        }
        draw_text(grid, 2, static_cast<int>(row) * cell + 2,
                  std::to_string(row + 1), cfg.label_color, 2);
    }
    return grid;
}

Image resize_area_average(const Image& img, int new_w, int new_h) {
    if (new_w <= 0 || new_h <= 0) throw InvariantViolation("resize target must be positive");
    if (img.width == new_w && img.height == new_h) return img;
    Image out;
    out.width = new_w;
    out.height = new_h;
    out.pixels.resize(static_cast<std::size_t>(new_w) * new_h * 3);
    double sx = static_cast<double>(img.width) / new_w;
    double sy = static_cast<double>(img.height) / new_h;
    for (int oy = 0; oy < new_h; ++oy) {
        double y0 = oy * sy;
        double y1 = (oy + 1) * sy;
        int iy0 = static_cast<int>(std::floor(y0));
        int iy1 = std::min(img.height - 1, static_cast<int>(std::ceil(y1)) - 1);
        for (int ox = 0; ox < new_w; ++ox) {
            double x0 = ox * sx;
            double x1 = (ox + 1) * sx;
            int ix0 = static_cast<int>(std::floor(x0));
            int ix1 = std::min(img.width - 1, static_cast<int>(std::ceil(x1)) - 1);
            double acc[3] = {0.0, 0.0, 0.0};
            double area = 0.0;
            for (int iy = iy0; iy <= iy1; ++iy) {
                double hy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
                if (hy <= 0.0) continue;
                for (int ix = ix0; ix <= ix1; ++ix) {
                    double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
                    if (wx <= 0.0) continue;
                    Color c = img.get(ix, iy);
                    double w = wx * hy;
                    acc[0] += w * c.r;
                    acc[1] += w * c.g;
                    acc[2] += w * c.b;
                    area += w;
                }
            }
            std::size_t i = (static_cast<std::size_t>(oy) * new_w + ox) * 3;
            for (int ch = 0; ch < 3; ++ch) {
                double v = acc[ch] / area;
                out.pixels[i + ch] = static_cast<std::uint8_t>(
                    std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

int draw_text(Image& img, int x, int y, const std::string& text, Color color, int scale) {
    if (scale <= 0) throw InvariantViolation("text scale must be positive");
    int pen = x;
    for (char c : text) {
        const Glyph* g = find_glyph(c);
        if (g != nullptr) {
            for (int row = 0; row < kGlyphCell; ++row) {
                for (int col = 0; col < kGlyphCell; ++col) {
                    if (g->rows[row][col] != '#') continue;
                    for (int dy = 0; dy < scale; ++dy) {
                        for (int dx = 0; dx < scale; ++dx) {
                            img.set(pen + col * scale + dx, y + row * scale + dy, color);
                        }
                    }
                }
            }
        }
        pen += kGlyphCell * scale;
    }
    return pen - x;
}

std::vector<std::uint8_t> ppm_bytes(const Image& img) {
    std::string header = "P6\n" + std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

std::vector<std::uint8_t> png_bytes(const Image& img) {
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(img.height) * (1 + 3 * img.width));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter type none
        const std::uint8_t* row = img.pixels.data() + static_cast<std::size_t>(y) * img.width * 3;
        raw.insert(raw.end(), row, row + static_cast<std::size_t>(img.width) * 3);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> deflated(bound);
    if (compress2(deflated.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                  Z_BEST_SPEED) != Z_OK) {
        throw std::runtime_error("png deflate failed");
    }
    deflated.resize(bound);

    std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    std::vector<std::uint8_t> ihdr;
    append_be32(ihdr, static_cast<std::uint32_t>(img.width));
    append_be32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", deflated);
    append_chunk(out, "IEND", {});
    return out;
}

void write_ppm(const Image& img, const std::string& path) {
    write_bytes(path, ppm_bytes(img));
}

void write_png(const Image& img, const std::string& path) {
    write_bytes(path, png_bytes(img));
}

std::uint64_t image_hash(const Image& img) {
    std::uint64_t h = 14695981039346656037ULL;
    for (std::uint8_t byte : ppm_bytes(img)) {
        h ^= byte;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string image_hash_hex(const Image& img) {
    std::uint64_t h = image_hash(img);
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return s;
}

}  // namespace divplan
