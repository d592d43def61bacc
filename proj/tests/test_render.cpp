#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <zlib.h>

#include "divplan/errors.hpp"
#include "divplan/render.hpp"
#include "divplan/rng.hpp"
#include "divplan/world.hpp"

using namespace divplan;

namespace {

Environment make_env(Rect bounds, std::vector<Obstacle> obstacles = {}) {
    Environment env{bounds, std::move(obstacles), {}};
    for (std::size_t i = 0; i < env.obstacles.size(); ++i) {
        if (!env.obstacles[i].label.empty()) env.objects[env.obstacles[i].label] = i;
    }
    return env;
}

Environment ten_meter_env(std::vector<Obstacle> obstacles = {}) {
    return make_env({{0.0, 0.0}, {10.0, 10.0}}, std::move(obstacles));
}

int count_color_runs_in_row(const Image& img, int y, Color c) {
    int runs = 0;
    bool in_run = false;
    for (int x = 0; x < img.width; ++x) {
        bool hit = img.get(x, y) == c;
        if (hit && !in_run) ++runs;
        in_run = hit;
    }
    return runs;
}

double point_segment_dist(double px, double py, double ax, double ay, double bx,
                          double by) {
    double vx = bx - ax, vy = by - ay;
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t at) {
    return (std::uint32_t(bytes[at]) << 24) | (std::uint32_t(bytes[at + 1]) << 16) |
           (std::uint32_t(bytes[at + 2]) << 8) | std::uint32_t(bytes[at + 3]);
}

}  // namespace

TEST_CASE("config validation catches overlapping dots and degenerate sizes") {
    RenderConfig cfg;
    CHECK_NOTHROW(validate_render_config(cfg));
    cfg.dot_spacing = 6;  // equals dot diameter, dots would touch
    CHECK_THROWS_AS(validate_render_config(cfg), InvariantViolation);
    cfg = RenderConfig{};
    cfg.gallery_frames = 1;
    CHECK_THROWS_AS(validate_render_config(cfg), InvariantViolation);
    cfg = RenderConfig{};
    cfg.image_size = 0;
    CHECK_THROWS_AS(validate_render_config(cfg), InvariantViolation);
}

TEST_CASE("world to pixel mapping is exactly invertible and fills the image") {
    Rect bounds{{-3.0, 2.0}, {9.0, 8.0}};
    Transform tf = Transform::fit(bounds, 560, 560);
    CHECK(tf.px({-3.0, 2.0}) == doctest::Approx(0.0));
    CHECK(tf.px({9.0, 2.0}) == doctest::Approx(560.0));
    CHECK(tf.py({0.0, 8.0}) == doctest::Approx(0.0));
    CHECK(tf.py({0.0, 2.0}) == doctest::Approx(560.0));
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        Point p{bounds.min.x + 12.0 * rng.uniform(), bounds.min.y + 6.0 * rng.uniform()};
        Point back = tf.world(tf.px(p), tf.py(p));
        CHECK(std::abs(back.x - p.x) < 1e-9);
        CHECK(std::abs(back.y - p.y) < 1e-9);
        double rx = 560.0 * rng.uniform();
        double ry = 560.0 * rng.uniform();
        Point w = tf.world(rx, ry);
        CHECK(std::abs(tf.px(w) - rx) < 0.5);
        CHECK(std::abs(tf.py(w) - ry) < 0.5);
    }
}

TEST_CASE("empty scene renders to a uniform background") {
    RenderConfig cfg;
    Image img = render_base(ten_meter_env(), cfg);
    CHECK(img.width == 560);
    CHECK(img.height == 560);
    CHECK(img.pixels.size() == 560u * 560u * 3u);
    bool uniform = true;
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        if (img.get(static_cast<int>((i / 3) % 560),
                    static_cast<int>((i / 3) / 560)) != cfg.background) {
            uniform = false;
            break;
        }
    }
    CHECK(uniform);
}

TEST_CASE("centered rectangle fills its projection within one pixel") {
    RenderConfig cfg;
    Environment env = ten_meter_env({{Rect{{4.0, 4.0}, {6.0, 6.0}}, ""}});
    Image img = render_base(env, cfg);
    // 10 m bounds over 560 px puts the rectangle at columns [224, 336).
    int first = -1, last = -1, count = 0;
    for (int x = 0; x < img.width; ++x) {
        if (img.get(x, 280) == cfg.obstacle_color) {
            if (first < 0) first = x;
            last = x;
            ++count;
        }
    }
    CHECK(std::abs(first - 224) <= 1);
    CHECK(std::abs(last - 335) <= 1);
    CHECK(count == last - first + 1);  // solid fill, no holes
    CHECK(img.get(222, 280) == cfg.background);
    CHECK(img.get(338, 280) == cfg.background);
    CHECK(img.get(280, 222) == cfg.background);
    CHECK(img.get(280, 338) == cfg.background);
}

TEST_CASE("named obstacles use the object fill and carry a label") {
    RenderConfig cfg;
    Environment env = ten_meter_env({{Circle{{5.0, 5.0}, 1.5}, "goal"}});
    Image img = render_base(env, cfg);
    // Below the text rows but still inside the circle.
    CHECK(img.get(280, 312) == cfg.object_color);
    int label_pixels = 0;
    for (int y = 260; y < 300; ++y) {
        for (int x = 230; x < 330; ++x) {
            if (img.get(x, y) == cfg.label_color) ++label_pixels;
        }
    }
    CHECK(label_pixels > 20);
}

TEST_CASE("dot count follows floor(pixel_length / spacing) + 1") {
    RenderConfig cfg;
    Environment env = ten_meter_env();
    // 2.25 m spans exactly 126 px at 56 px/m: floor(126/12)+1 = 11 dots.
    Path p{{{2.0, 5.0}, {4.25, 5.0}}};
    Image img = render_trails(env, {p}, cfg);
    CHECK(count_color_runs_in_row(img, 280, cfg.palette[0].rgb) == 11);
    // 1.5 m is exactly 84 px, a whole multiple of the spacing, so the final
    // dot lands on the endpoint: floor(84/12)+1 = 8.
    Path q{{{2.0, 5.0}, {3.5, 5.0}}};
    Image img2 = render_trails(env, {q}, cfg);
    CHECK(count_color_runs_in_row(img2, 280, cfg.palette[0].rgb) == 8);
    CHECK(img2.get(196, 280) == cfg.palette[0].rgb);  // goal pixel inked
}

TEST_CASE("trail pixels stay near the projected polyline and start dot covers the start") {
    RenderConfig cfg;
    Environment env = ten_meter_env();
    Path p{{{1.0, 1.0}, {6.0, 4.0}, {8.5, 9.0}}};
    Image img = render_trails(env, {p}, cfg);
    Transform tf = Transform::fit(env.bounds, img.width, img.height);
    Color trail = cfg.palette[0].rgb;
    int trail_pixels = 0;
    double worst = 0.0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (img.get(x, y) != trail) continue;
            ++trail_pixels;
            double d = 1e18;
            for (std::size_t i = 1; i < p.waypoints.size(); ++i) {
                d = std::min(d, point_segment_dist(
                                    x + 0.5, y + 0.5, tf.px(p.waypoints[i - 1]),
                                    tf.py(p.waypoints[i - 1]), tf.px(p.waypoints[i]),
                                    tf.py(p.waypoints[i])));
            }
            worst = std::max(worst, d);
        }
    }
    CHECK(trail_pixels > 50);
    // Dot centers sit on the polyline, so no inked pixel strays beyond the
    // dot radius plus one pixel of sampling slack.
    CHECK(worst <= cfg.dot_radius + 1.0);
    int sx = static_cast<int>(tf.px(p.waypoints.front()));
    int sy = static_cast<int>(tf.py(p.waypoints.front()));
    CHECK(img.get(sx, sy) == trail);
}

TEST_CASE("palette assigns colors in order and exhausts cleanly") {
    RenderConfig cfg;
    Environment env = ten_meter_env();
    Path a{{{1.0, 2.0}, {9.0, 2.0}}};
    Path b{{{1.0, 8.0}, {9.0, 8.0}}};
    Image img = render_trails(env, {a, b}, cfg);
    Transform tf = Transform::fit(env.bounds, img.width, img.height);
    // The first dot of every trail sits exactly on the start waypoint.
    CHECK(img.get(static_cast<int>(tf.px(a.waypoints[0])),
                  static_cast<int>(tf.py(a.waypoints[0]))) == cfg.palette[0].rgb);
    CHECK(img.get(static_cast<int>(tf.px(b.waypoints[0])),
                  static_cast<int>(tf.py(b.waypoints[0]))) == cfg.palette[1].rgb);

    std::vector<Path> too_many(cfg.palette.size() + 1, a);
    CHECK_THROWS_AS(render_trails(env, too_many, cfg), PaletteExhausted);
    CHECK_THROWS_AS(render_trails(env, {}, cfg), InvariantViolation);
    CHECK_THROWS_AS(render_single(env, Path{{{1.0, 1.0}}}, cfg.palette[0].rgb, cfg),
                    InvariantViolation);
}

TEST_CASE("render_single matches a one-path trail render byte for byte") {
    RenderConfig cfg;
    Environment env = ten_meter_env({{Circle{{7.0, 7.0}, 1.0}, ""}});
    Path p{{{1.0, 1.0}, {4.0, 6.0}, {9.0, 3.0}}};
    Image single = render_single(env, p, cfg.palette[0].rgb, cfg);
    Image trails = render_trails(env, {p}, cfg);
    CHECK(single.pixels == trails.pixels);
}

TEST_CASE("renders are deterministic across repeated calls") {
    RenderConfig cfg;
    Environment env = ten_meter_env({{Rect{{2.0, 2.0}, {3.0, 8.0}}, ""},
                                     {Circle{{7.0, 3.0}, 1.2}, "bin"}});
    Path a{{{1.0, 1.0}, {5.0, 5.0}, {9.0, 9.0}}};
    Path b{{{1.0, 9.0}, {9.0, 1.0}}};
    CHECK(render_trails(env, {a, b}, cfg).pixels == render_trails(env, {a, b}, cfg).pixels);
    CHECK(render_gallery(env, {a, b}, cfg).pixels == render_gallery(env, {a, b}, cfg).pixels);
}

TEST_CASE("gallery lays out one row per path with markers tracking arc fractions") {
    RenderConfig cfg;
    Environment env = ten_meter_env();
    Path straight{{{1.0, 5.0}, {9.0, 5.0}}};
    Path detour{{{1.0, 5.0}, {5.0, 8.0}, {9.0, 5.0}}};
    Image img = render_gallery(env, {straight, detour}, cfg);
    int cell = cfg.image_size / cfg.gallery_frames;
    CHECK(img.width == cell * cfg.gallery_frames);
    CHECK(img.height == cell * 2);

    // Both rows share start and goal, so the first and last columns place the
    // marker at the same cell-local position: start (1,5) lands at cell pixel
    // (11.2, 56), goal (9,5) at (100.8, 56).
    for (int row = 0; row < 2; ++row) {
        CHECK(img.get(11, row * cell + 56) == cfg.robot_color);
        CHECK(img.get((cfg.gallery_frames - 1) * cell + 100, row * cell + 56) ==
              cfg.robot_color);
    }
    // Middle frame of the straight path sits at the scene center.
    CHECK(img.get(2 * cell + 56, 56) == cfg.robot_color);
    // The detour row's middle frame rides the bump instead.
    CHECK(img.get(2 * cell + 56, cell + 56) != cfg.robot_color);

    // Row numbers are stamped in the first cell of each row.
    for (int row = 0; row < 2; ++row) {
        int label_pixels = 0;
        for (int y = row * cell; y < row * cell + 20; ++y) {
            for (int x = 0; x < 20; ++x) {
                if (img.get(x, y) == cfg.label_color) ++label_pixels;
            }
        }
        CHECK(label_pixels > 3);
    }
    CHECK_THROWS_AS(render_gallery(env, {}, cfg), InvariantViolation);
}

TEST_CASE("area averaging preserves uniform images and averages checkers") {
    Image uniform = Image::filled(7, 5, {10, 200, 30});
    Image down = resize_area_average(uniform, 3, 2);
    for (int y = 0; y < down.height; ++y) {
        for (int x = 0; x < down.width; ++x) {
            CHECK(down.get(x, y) == Color{10, 200, 30});
        }
    }
    Image checker = Image::filled(2, 2, {0, 0, 0});
    checker.set(0, 0, {255, 255, 255});
    checker.set(1, 1, {255, 255, 255});
    Image one = resize_area_average(checker, 1, 1);
    CHECK(one.get(0, 0) == Color{128, 128, 128});

    Image same = resize_area_average(uniform, 7, 5);
    CHECK(same.pixels == uniform.pixels);
    CHECK_THROWS_AS(resize_area_average(uniform, 0, 3), InvariantViolation);
}

TEST_CASE("ppm serialization carries an exact header and payload") {
    Image img = Image::filled(4, 3, {1, 2, 3});
    auto bytes = ppm_bytes(img);
    const std::string header = "P6\n4 3\n255\n";
    REQUIRE(bytes.size() == header.size() + 4u * 3u * 3u);
    CHECK(std::memcmp(bytes.data(), header.data(), header.size()) == 0);
    CHECK(bytes[header.size()] == 1);
    CHECK(bytes[header.size() + 1] == 2);
    CHECK(bytes[header.size() + 2] == 3);
}

TEST_CASE("png serialization round trips through zlib") {
    RenderConfig cfg;
    cfg.image_size = 80;
    Environment env = ten_meter_env({{Circle{{5.0, 5.0}, 2.0}, ""}});
    Image img = render_base(env, cfg);
    auto bytes = png_bytes(img);

    const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    REQUIRE(bytes.size() > 8);
    CHECK(std::memcmp(bytes.data(), sig, 8) == 0);
    CHECK(read_be32(bytes, 8) == 13u);  // IHDR length
    CHECK(std::memcmp(bytes.data() + 12, "IHDR", 4) == 0);
    CHECK(read_be32(bytes, 16) == 80u);
    CHECK(read_be32(bytes, 20) == 80u);
    CHECK(bytes[24] == 8);  // bit depth
    CHECK(bytes[25] == 2);  // truecolor

    // Walk chunks to the IDAT payload and inflate it back to scanlines.
    std::size_t at = 8;
    std::vector<std::uint8_t> idat;
    bool saw_iend = false;
    while (at + 8 <= bytes.size()) {
        std::uint32_t len = read_be32(bytes, at);
        std::string type(bytes.begin() + at + 4, bytes.begin() + at + 8);
        if (type == "IDAT") {
            idat.insert(idat.end(), bytes.begin() + at + 8, bytes.begin() + at + 8 + len);
        }
        if (type == "IEND") saw_iend = true;
        at += 12 + len;
    }
    CHECK(saw_iend);
    REQUIRE(!idat.empty());
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(img.height) * (1 + 3 * img.width));
    uLongf raw_len = static_cast<uLongf>(raw.size());
    REQUIRE(uncompress(raw.data(), &raw_len, idat.data(),
                       static_cast<uLong>(idat.size())) == Z_OK);
    REQUIRE(raw_len == raw.size());
    for (int y = 0; y < img.height; ++y) {
        std::size_t row = static_cast<std::size_t>(y) * (1 + 3 * img.width);
        CHECK(raw[row] == 0);  // filter byte
        CHECK(std::memcmp(raw.data() + row + 1,
                          img.pixels.data() + static_cast<std::size_t>(y) * img.width * 3,
                          static_cast<std::size_t>(img.width) * 3) == 0);
    }
}

TEST_CASE("image hashes are stable and content sensitive") {
    Image a = Image::filled(16, 16, {5, 6, 7});
    Image b = a;
    CHECK(image_hash(a) == image_hash(b));
    CHECK(image_hash_hex(a).size() == 16);
    b.set(3, 9, {5, 6, 8});
    CHECK(image_hash(a) != image_hash(b));
}

TEST_CASE("file writers emit the serialized bytes") {
    Image img = Image::filled(6, 4, {9, 8, 7});
    write_ppm(img, "render_test_tmp.ppm");
    write_png(img, "render_test_tmp.png");
    std::ifstream ppm("render_test_tmp.ppm", std::ios::binary);
    std::vector<std::uint8_t> back((std::istreambuf_iterator<char>(ppm)),
                                   std::istreambuf_iterator<char>());
    CHECK(back == ppm_bytes(img));
    std::ifstream png("render_test_tmp.png", std::ios::binary);
    std::vector<std::uint8_t> back_png((std::istreambuf_iterator<char>(png)),
                                       std::istreambuf_iterator<char>());
    CHECK(back_png == png_bytes(img));
    std::remove("render_test_tmp.ppm");
    std::remove("render_test_tmp.png");
}
