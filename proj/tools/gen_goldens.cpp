// Regenerates the pinned renderer hashes and the pinned judge prompt. Reads
// the bundled scenes and candidate bundles, renders every mode with the
// default config, and stores the pixmap hashes plus one canonical
// single-image prompt so the tests can detect any drift in either. Usage:
// gen_goldens [corpus_dir]
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "divplan/errors.hpp"
#include "divplan/render.hpp"
#include "divplan/vlm.hpp"
#include "divplan/world.hpp"
#include "json.hpp"

namespace {

using divplan::Environment;
using divplan::Image;
using divplan::Path;
using divplan::Point;
using divplan::RenderConfig;

using ordered_json = nlohmann::ordered_json;

std::vector<Path> load_bundle(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in.is_open()) {
        throw divplan::InvariantViolation("cannot open " + file.string());
    }
    nlohmann::json doc;
    in >> doc;
    std::vector<Path> paths;
    for (const auto& arr : doc.at("paths")) {
        Path p;
        for (const auto& pt : arr) {
            p.waypoints.push_back(Point{pt.at(0).get<double>(), pt.at(1).get<double>()});
        }
        paths.push_back(std::move(p));
    }
    return paths;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) {
        throw divplan::InvariantViolation("cannot write " + path.string());
    }
    out << text;
    if (!out.good()) {
        throw divplan::InvariantViolation("short write to " + path.string());
    }
}

}  // namespace

int main(int argc, char** argv) {
    const std::filesystem::path dir = argc > 1 ? argv[1] : "corpus";
    std::filesystem::create_directories(dir / "golden");
    std::filesystem::create_directories(dir / "fixtures");

    const RenderConfig cfg;
    ordered_json hashes;
    for (const std::string scene : {"room_a", "room_e", "tabletop_a"}) {
        const Environment env = divplan::load_scene((dir / (scene + ".json")).string());
        const std::vector<Path> paths = load_bundle(dir / "paths" / (scene + ".json"));
        ordered_json entry;
        entry["base"] = divplan::image_hash_hex(divplan::render_base(env, cfg));
        entry["trails"] = divplan::image_hash_hex(divplan::render_trails(env, paths, cfg));
        entry["single"] = divplan::image_hash_hex(
            divplan::render_single(env, paths.front(), cfg.palette.front().rgb, cfg));
        entry["gallery"] =
            divplan::image_hash_hex(divplan::render_gallery(env, paths, cfg));
        hashes[scene] = std::move(entry);
        std::printf("%-12s %s\n", scene.c_str(), entry.is_null() ? "" : "hashed");
    }
    write_file(dir / "golden" / "hashes.json", hashes.dump(2) + "\n");
    std::printf("wrote %s\n", (dir / "golden" / "hashes.json").string().c_str());

    std::vector<std::string> names;
    for (int i = 0; i < 5; ++i) {
        names.push_back(cfg.palette[static_cast<std::size_t>(i)].name);
    }
    const std::string prompt = divplan::build_prompt(
        "go to the oven staying far from the window", divplan::QueryMethod::single_image,
        names);
    write_file(dir / "fixtures" / "prompt_single_image.txt", prompt);
    std::printf("wrote %s\n",
                (dir / "fixtures" / "prompt_single_image.txt").string().c_str());
    return 0;
}
