#include "divplan/mockjudge.hpp"

#include <chrono>
#include <cstdio>
#include <mutex>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "divplan/constraints.hpp"
#include "divplan/errors.hpp"
#include "divplan/rng.hpp"
#include "divplan/vlm.hpp"
#include "divplan/world.hpp"

namespace divplan {

namespace {

using nlohmann::json;

std::uint32_t be32_at(const std::vector<std::uint8_t>& bytes, std::size_t at) {
    return (std::uint32_t(bytes[at]) << 24) | (std::uint32_t(bytes[at + 1]) << 16) |
           (std::uint32_t(bytes[at + 2]) << 8) | std::uint32_t(bytes[at + 3]);
}

// Width and height straight from the IHDR chunk; enough to price the image
// without a full decode.
std::pair<int, int> png_dims(const std::vector<std::uint8_t>& png) {
    if (png.size() < 24) throw ParseError("image too short for a PNG header");
    return {static_cast<int>(be32_at(png, 16)), static_cast<int>(be32_at(png, 20))};
}

std::string fmt_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

long text_tokens(const std::string& text) {
    return (static_cast<long>(text.size()) + 3) / 4;
}

}  // namespace

struct MockJudge::Impl {
    MockJudgeConfig cfg;
    httplib::Server server;
    std::thread thread;
    std::mutex mu;
    Rng rng;
    std::uint64_t flip = 0;
    int port = -1;

    explicit Impl(MockJudgeConfig c) : cfg(c), rng(c.seed) {}

    std::string respond(const std::string& prompt, const json& body) {
        bool chaos_hit = false;
        bool hallucinate = false;
        {
            std::lock_guard<std::mutex> lock(mu);
            chaos_hit = rng.uniform() < cfg.chaos;
            if (chaos_hit) hallucinate = (flip++ % 2) == 0;
        }
        if (chaos_hit) {
            bool gallery_like = prompt.find("row number") != std::string::npos;
            if (!hallucinate) {
                return "I am unable to compare the trajectories in this image.";
            }
            if (gallery_like) {
                return "The robot performs best in row 99. Highest: row 99.";
            }
            return "After close inspection the yellow trajectory matches best. "
                   "Highest: yellow.";
        }
        if (!body.contains("divplan_geometry")) {
            return "A top-down view of a simulated environment with rectangular and "
                   "circular obstacles, labeled objects, and open floor space between "
                   "them.";
        }
        json geo = json::parse(body["divplan_geometry"].get<std::string>());
        Environment env = load_scene_json(geo.at("scene").dump());
        Constraint constraint = constraint_from_json(geo.at("constraint").dump());
        std::vector<Path> paths;
        for (const json& arr : geo.at("paths")) {
            Path p;
            for (const json& pt : arr) {
                p.waypoints.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
            }
            paths.push_back(std::move(p));
        }
        std::vector<std::string> names = geo.at("names").get<std::vector<std::string>>();
        if (names.size() != paths.size() || paths.empty()) {
            throw InvariantViolation("geometry hint names and paths disagree");
        }
        if (paths.size() == 1) {
            double score = oracle_score(paths[0], env, constraint);
            return names[0] + ": " + fmt_score(score) + ". Highest: " + names[0] + ".";
        }
        auto [chosen, scores] = oracle_select(paths, env, constraint);
        std::string text = "Scores - ";
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i > 0) text += ", ";
            text += names[i] + ": " + fmt_score(scores[i]);
        }
        text += ". Highest: " + names[chosen] + ".";
        return text;
    }

    void handle(const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(std::string("bad request body: ") + e.what(), "text/plain");
            return;
        }
        try {
            std::string prompt;
            long prompt_tokens = 0;
            for (const json& part : body.at("messages").at(0).at("content")) {
                std::string type = part.value("type", "");
                if (type == "text") {
                    prompt += part.value("text", "");
                } else if (type == "image_url") {
                    std::string url = part.at("image_url").at("url");
                    const std::string marker = "base64,";
                    std::size_t at = url.find(marker);
                    if (at == std::string::npos) {
                        throw ParseError("image url is not a base64 data uri");
                    }
                    auto png = base64_decode(url.substr(at + marker.size()));
                    auto [w, h] = png_dims(png);
                    prompt_tokens += ((w + 27) / 28) * ((h + 27) / 28);
                }
            }
            prompt_tokens += text_tokens(prompt);
            std::string text = respond(prompt, body);
            json reply;
            reply["choices"] =
                json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}});
            reply["usage"] = {{"prompt_tokens", prompt_tokens},
                              {"completion_tokens", text_tokens(text)}};
            res.set_content(reply.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(std::string("mock judge error: ") + e.what(), "text/plain");
        }
    }
};

MockJudge::MockJudge(MockJudgeConfig cfg) : impl_(std::make_unique<Impl>(cfg)) {}

MockJudge::~MockJudge() { stop(); }

void MockJudge::start() {
    if (impl_->thread.joinable()) throw InvariantViolation("mock judge already started");
    impl_->server.Post("/v1/chat/completions",
                       [this](const httplib::Request& req, httplib::Response& res) {
                           impl_->handle(req, res);
                       });
    // address reuse only: the library default adds SO_REUSEPORT, which would
    // let a second server silently share a busy port instead of failing
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR,
                     reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    if (impl_->cfg.port == 0) {
        impl_->port = impl_->server.bind_to_any_port(impl_->cfg.host);
        if (impl_->port <= 0) throw TransportError("mock judge could not bind any port");
    } else {
        if (!impl_->server.bind_to_port(impl_->cfg.host, impl_->cfg.port)) {
            throw TransportError("mock judge could not bind port " +
                                 std::to_string(impl_->cfg.port));
        }
        impl_->port = impl_->cfg.port;
    }
    impl_->thread = std::thread([this]() { impl_->server.listen_after_bind(); });
    for (int i = 0; i < 2000 && !impl_->server.is_running(); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    if (!impl_->server.is_running()) {
        throw TransportError("mock judge failed to start listening");
    }
}

void MockJudge::stop() {
    if (!impl_->thread.joinable()) return;
    impl_->server.stop();
    impl_->thread.join();
}

bool MockJudge::running() const { return impl_->server.is_running(); }

int MockJudge::port() const { return impl_->port; }

std::string MockJudge::url() const {
    return "http://" + impl_->cfg.host + ":" + std::to_string(impl_->port);
}

}  // namespace divplan
