#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "divplan/planner.hpp"
#include "divplan/world.hpp"

namespace divplan {

struct Color {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Color&) const = default;
};

struct NamedColor {
    std::string name;
    Color rgb;
};

struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major RGB, exactly width*height*3

    static Image filled(int w, int h, Color c);
    Color get(int x, int y) const;
    void set(int x, int y, Color c);  // silently clips out-of-range
    bool operator==(const Image&) const = default;
};

// Trail colors, in presentation order. The names are the words judges use to
// pick a winner, so they stay fixed alongside these RGB values:
//   red (230,30,30), green (30,170,30), blue (40,60,230), orange (245,140,20),
//   purple (140,40,190), cyan (20,190,200), magenta (230,40,200)
std::vector<NamedColor> default_palette();

struct RenderConfig {
    int image_size = 560;  // square scene images
    std::vector<NamedColor> palette = default_palette();
    int dot_spacing = 12;  // pixels between trail dot centers
    int dot_radius = 3;
    Color background{245, 244, 240};
    Color obstacle_color{92, 95, 106};
    Color object_color{206, 172, 122};  // named obstacles
    Color label_color{20, 20, 24};
    Color robot_color{40, 42, 48};  // gallery marker
    int gallery_frames = 5;
};

// Throws InvariantViolation when dot_spacing <= 2*dot_radius or sizes are
// non-positive.
void validate_render_config(const RenderConfig& cfg);

// Affine world-to-pixel mapping: bounds fill the image, world +y points up
// so pixel rows count down from the top edge. Exactly invertible.
struct Transform {
    double scale_x = 1.0, scale_y = 1.0;
    double world_xmin = 0.0, world_ymax = 0.0;

    static Transform fit(const Rect& bounds, int width, int height);
    double px(Point p) const { return (p.x - world_xmin) * scale_x; }
    double py(Point p) const { return (world_ymax - p.y) * scale_y; }
    Point world(double x, double y) const {
        return {world_xmin + x / scale_x, world_ymax - y / scale_y};
    }
};

// Top-down rasterization: background, obstacles filled (named ones in
// object_color with a centered bitmap-font label), deterministic bytes.
Image render_base(const Environment& env, const RenderConfig& cfg);

// Base image plus each path as a dotted trail in palette order; dot centers
// sit on the projected polyline at dot_spacing intervals of pixel arc length
// (floor(length/spacing)+1 dots). Throws PaletteExhausted when paths outnumber
// palette entries.
Image render_trails(const Environment& env, const std::vector<Path>& paths,
                    const RenderConfig& cfg);

// One trail in an explicit color; byte-identical to render_trails for a
// single path of that color.
Image render_single(const Environment& env, const Path& path, Color color,
                    const RenderConfig& cfg);

// Stamps one dotted trail onto an existing render of the same scene, for
// overlays such as re-drawing a winner with a wider dot radius.
void draw_trail(Image& img, const Environment& env, const Path& path, Color color,
                const RenderConfig& cfg);

// |paths| rows by gallery_frames columns; frame j of row i is the full scene
// with a disk-and-heading-tick marker at arc fraction j/(frames-1) along path
// i, downscaled to image_size/gallery_frames per cell. Row numbers (1-based)
// are drawn in the first cell of each row.
Image render_gallery(const Environment& env, const std::vector<Path>& paths,
                     const RenderConfig& cfg);

// Box-filter resize with exact fractional coverage.
Image resize_area_average(const Image& img, int new_w, int new_h);

// 8x8 bitmap font (a-z, 0-9, '-', '_'), scaled by an integer factor; unknown
// characters advance without marking. Returns the advance width in pixels.
int draw_text(Image& img, int x, int y, const std::string& text, Color color, int scale);

std::vector<std::uint8_t> ppm_bytes(const Image& img);   // binary P6
std::vector<std::uint8_t> png_bytes(const Image& img);   // 8-bit RGB, zlib
void write_ppm(const Image& img, const std::string& path);
void write_png(const Image& img, const std::string& path);

// FNV-1a 64 over the pixmap serialization; hex form for golden files.
std::uint64_t image_hash(const Image& img);
std::string image_hash_hex(const Image& img);

}  // namespace divplan
