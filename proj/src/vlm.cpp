#include "divplan/vlm.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "divplan/errors.hpp"

namespace divplan {

namespace {

using nlohmann::json;

constexpr const char* kChatPath = "/v1/chat/completions";

// Answer-shaped words a judge could emit that are not in the candidate set.
// A reply whose final pick lands here is a made-up answer, not a parse bug.
const char* const kColorLexicon[] = {
    "red",  "green",   "blue",  "orange", "purple", "cyan",   "magenta",
    "yellow", "pink",  "black", "white",  "brown",  "gray",   "grey",
    "teal", "violet",  "gold",  "silver",
};

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool boundary_at(const std::string& text, std::size_t begin, std::size_t end) {
    if (begin > 0 && word_char(text[begin - 1])) return false;
    if (end < text.size() && word_char(text[end])) return false;
    return true;
}

// Number directly after a name, with an optional ':' or '=' separator.
// Returns true and the value when one is present.
bool trailing_number(const std::string& text, std::size_t at, double* value) {
    std::size_t i = at;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    if (i < text.size() && (text[i] == ':' || text[i] == '=')) ++i;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    if (i >= text.size()) return false;
    char c = text[i];
    bool starts_number = std::isdigit(static_cast<unsigned char>(c)) != 0;
    if ((c == '-' || c == '+' || c == '.') && i + 1 < text.size() &&
        std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
        starts_number = true;
    }
    if (!starts_number) return false;
    const char* start = text.c_str() + i;
    char* end = nullptr;
    double v = std::strtod(start, &end);
    if (end == start) return false;
    *value = v;
    return true;
}

struct Mention {
    std::size_t pos;
    std::string name;  // candidate name or lexicon word, original spelling
    bool in_candidates;
};

// All whole-word occurrences of name; score pairs land in *score (last one
// wins), bare occurrences are appended to mentions.
void scan_name(const std::string& low_text, const std::string& name, bool in_candidates,
               std::vector<Mention>* mentions, double* score, bool* has_score) {
    std::string low_name = to_lower(name);
    std::size_t pos = 0;
    while ((pos = low_text.find(low_name, pos)) != std::string::npos) {
        std::size_t end = pos + low_name.size();
        if (!boundary_at(low_text, pos, end)) {
            pos += 1;
            continue;
        }
        double value = 0.0;
        if (trailing_number(low_text, end, &value)) {
            if (score != nullptr) {
                *score = value;
                *has_score = true;
            }
        } else {
            mentions->push_back({pos, name, in_candidates});
        }
        pos = end;
    }
}

// "row <digits>" tokens outside the candidate list, e.g. a judge answering
// "row 99" for a 5-row gallery.
void scan_stray_rows(const std::string& low_text,
                     const std::vector<std::string>& low_candidates,
                     std::vector<Mention>* mentions) {
    std::size_t pos = 0;
    while ((pos = low_text.find("row", pos)) != std::string::npos) {
        std::size_t end = pos + 3;
        if (pos > 0 && word_char(low_text[pos - 1])) {
            pos = end;
            continue;
        }
        std::size_t i = end;
        while (i < low_text.size() && low_text[i] == ' ') ++i;
        std::size_t digits = i;
        while (digits < low_text.size() &&
               std::isdigit(static_cast<unsigned char>(low_text[digits]))) {
            ++digits;
        }
        if (digits == i || !boundary_at(low_text, pos, digits)) {
            pos = end;
            continue;
        }
        std::string token = "row " + low_text.substr(i, digits - i);
        bool known = std::find(low_candidates.begin(), low_candidates.end(), token) !=
                     low_candidates.end();
        double value = 0.0;
        if (!known && !trailing_number(low_text, digits, &value)) {
            mentions->push_back({pos, token, false});
        }
        pos = digits;
    }
}

std::string fmt_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

void sleep_ms(int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); }

const char* env_or(const char* var, const char* fallback) {
    const char* v = std::getenv(var);
    return (v != nullptr && *v != '\0') ? v : fallback;
}

}  // namespace

QueryMethod parse_method(const std::string& name) {
    if (name == "single") return QueryMethod::single_image;
    if (name == "multi") return QueryMethod::multi_image;
    if (name == "context") return QueryMethod::visual_context;
    if (name == "gallery") return QueryMethod::gallery;
    throw ParseError("unknown query method: " + name +
                     " (expected single|multi|context|gallery)");
}

std::string method_name(QueryMethod method) {
    switch (method) {
        case QueryMethod::single_image: return "single";
        case QueryMethod::multi_image: return "multi";
        case QueryMethod::visual_context: return "context";
        case QueryMethod::gallery: return "gallery";
    }
    return "single";
}

JudgeEndpoint JudgeEndpoint::from_env() {
    JudgeEndpoint ep;
    ep.base_url = env_or("DIVPLAN_JUDGE_URL", "");
    ep.model = env_or("DIVPLAN_JUDGE_MODEL", "judge-local");
    ep.api_key = env_or("DIVPLAN_JUDGE_KEY", "");
    return ep;
}

void validate_request(const JudgeRequest& req) {
    if (req.prompt.empty()) throw InvariantViolation("judge request needs a prompt");
    if (req.method == QueryMethod::multi_image) {
        if (req.images.empty()) {
            throw InvariantViolation("multi_image request needs at least one image");
        }
    } else if (req.images.size() != 1) {
        throw InvariantViolation(method_name(req.method) +
                                 " request carries exactly one image, got " +
                                 std::to_string(req.images.size()));
    }
}

std::string build_prompt(const std::string& instruction, QueryMethod method,
                         const std::vector<std::string>& palette_names) {
    if (instruction.empty()) throw InvariantViolation("instruction must be non-empty");
    switch (method) {
        case QueryMethod::single_image:
            return "This picture shows a robot in a simulated environment. Each "
                   "trajectory of dots is a sequence of waypoints that guide the robot "
                   "to move along. Please rate each of the trajectories out of 100 for "
                   "how well they match the user instruction, by analyzing if they "
                   "satisfy the constraints on object proximity and path style. User "
                   "instruction: " +
                   instruction + ". Give the color with the highest score at the end.";
        case QueryMethod::multi_image:
            return "This picture shows a robot in a simulated environment. The "
                   "trajectory of dots is a sequence of waypoints that guide the robot "
                   "to move along. Please rate this trajectory out of 100 for how well "
                   "it matches the user instruction, by analyzing if it satisfies the "
                   "constraints on object proximity and path style. User instruction: " +
                   instruction + ". Give the score at the end.";
        case QueryMethod::gallery: {
            std::string k = std::to_string(palette_names.size());
            return "This image is a grid of snapshots of a robot in a simulated "
                   "environment. Each of the " +
                   k + " rows, numbered 1 to " + k +
                   ", shows the robot moving along one candidate trajectory from left "
                   "to right. Please rate each row out of 100 for how well its "
                   "trajectory matches the user instruction, by analyzing if it "
                   "satisfies the constraints on object proximity and path style. User "
                   "instruction: " +
                   instruction + ". Give the row number with the highest score at the end.";
        }
        case QueryMethod::visual_context:
            return "Please describe the objects, their attributes, and spatial "
                   "relationships in this image.";
    }
    throw InvariantViolation("unhandled query method");
}

ParsedScores parse_response(const std::string& text,
                            const std::vector<std::string>& candidate_names) {
    if (candidate_names.empty()) {
        throw InvariantViolation("parse_response needs candidate names");
    }
    std::string low = to_lower(text);
    std::vector<std::string> low_candidates;
    low_candidates.reserve(candidate_names.size());
    for (const std::string& n : candidate_names) low_candidates.push_back(to_lower(n));

    std::vector<Mention> mentions;
    std::vector<double> scores(candidate_names.size(), 0.0);
    std::vector<bool> has_score(candidate_names.size(), false);
    for (std::size_t i = 0; i < candidate_names.size(); ++i) {
        double s = 0.0;
        bool found = false;
        scan_name(low, candidate_names[i], true, &mentions, &s, &found);
        if (found) {
            scores[i] = s;
            has_score[i] = true;
        }
    }
    for (const char* word : kColorLexicon) {
        if (std::find(low_candidates.begin(), low_candidates.end(), word) !=
            low_candidates.end()) {
            continue;
        }
        scan_name(low, word, false, &mentions, nullptr, nullptr);
    }
    scan_stray_rows(low, low_candidates, &mentions);

    ParsedScores out;
    for (std::size_t i = 0; i < candidate_names.size(); ++i) {
        if (has_score[i]) {
            out.scores[candidate_names[i]] = std::clamp(scores[i], 0.0, 100.0);
        }
    }

    const Mention* last = nullptr;
    for (const Mention& m : mentions) {
        if (last == nullptr || m.pos >= last->pos) last = &m;
    }
    if (last != nullptr) {
        if (!last->in_candidates) {
            throw HallucinatedAnswer("judge picked \"" + last->name +
                                     "\" which names no candidate");
        }
        // Map the lower-cased mention back to the candidate spelling.
        for (std::size_t i = 0; i < candidate_names.size(); ++i) {
            if (to_lower(last->name) == low_candidates[i]) {
                out.chosen = candidate_names[i];
                return out;
            }
        }
    }
    if (!out.scores.empty()) {
        std::size_t best = candidate_names.size();
        double best_score = -1.0;
        for (std::size_t i = 0; i < candidate_names.size(); ++i) {
            if (has_score[i] && scores[i] > best_score) {
                best_score = scores[i];
                best = i;
            }
        }
        out.chosen = candidate_names[best];
        return out;
    }
    throw UnparseableResponse("no scores or candidate choice in judge reply: " +
                              text.substr(0, 200));
}

long estimate_tokens(const Image& image, const std::string& text,
                     const TokenizerConfig& cfg) {
    if (cfg.patch_size <= 0 || cfg.bytes_per_token <= 0) {
        throw InvariantViolation("tokenizer config values must be positive");
    }
    long tokens = 0;
    if (image.width > 0 && image.height > 0) {
        long pw = (image.width + cfg.patch_size - 1) / cfg.patch_size;
        long ph = (image.height + cfg.patch_size - 1) / cfg.patch_size;
        tokens += pw * ph;
    }
    tokens += (static_cast<long>(text.size()) + cfg.bytes_per_token - 1) /
              cfg.bytes_per_token;
    return tokens;
}

Image resize_to_budget(const Image& image, const std::string& text, long max_tokens,
                       const TokenizerConfig& cfg) {
    if (estimate_tokens(image, text, cfg) <= max_tokens) return image;
    long text_tokens = estimate_tokens(Image{}, text, cfg);
    long image_budget = max_tokens - text_tokens;
    if (image_budget < 1) {
        throw BudgetTooSmall("budget of " + std::to_string(max_tokens) +
                             " tokens cannot cover " + std::to_string(text_tokens) +
                             " text tokens plus any image");
    }
    auto dims_at = [&](int w) {
        int h = static_cast<int>(std::max<long>(
            1, std::lround(static_cast<double>(w) * image.height / image.width)));
        return std::pair<int, int>(w, h);
    };
    auto tokens_at = [&](int w) {
        auto [tw, th] = dims_at(w);
        long pw = (tw + cfg.patch_size - 1) / cfg.patch_size;
        long ph = (th + cfg.patch_size - 1) / cfg.patch_size;
        return pw * ph;
    };
    if (tokens_at(1) > image_budget) {
        throw BudgetTooSmall("even a 1 px wide image exceeds the budget of " +
                             std::to_string(max_tokens) + " tokens");
    }
    int lo = 1, hi = image.width;  // tokens_at(lo) fits, tokens_at(hi) does not
    while (lo + 1 < hi) {
        int mid = lo + (hi - lo) / 2;
        if (tokens_at(mid) <= image_budget) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    auto [w, h] = dims_at(lo);
    return resize_area_average(image, w, h);
}

std::string geometry_hint_json(const Environment& env, const Constraint& constraint,
                               const std::vector<Path>& paths,
                               const std::vector<std::string>& names) {
    if (paths.size() != names.size()) {
        throw InvariantViolation("geometry hint needs one name per path");
    }
    json j;
    j["scene"] = json::parse(scene_to_json(env));
    j["constraint"] = json::parse(constraint_to_json(constraint));
    json arr = json::array();
    for (const Path& p : paths) {
        json pts = json::array();
        for (const Point& pt : p.waypoints) pts.push_back({pt.x, pt.y});
        arr.push_back(pts);
    }
    j["paths"] = arr;
    j["names"] = names;
    return j.dump();
}

ScoreReport query(const JudgeEndpoint& endpoint, const JudgeRequest& request) {
    validate_request(request);
    if (endpoint.base_url.empty()) {
        throw TransportError("judge endpoint URL is empty (set DIVPLAN_JUDGE_URL)");
    }
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", request.prompt}});
    for (const Image& img : request.images) {
        content.push_back(
            {{"type", "image_url"},
             {"image_url",
              {{"url", "data:image/png;base64," + base64_encode(png_bytes(img))}}}});
    }
    json body;
    body["model"] = endpoint.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", content}}});
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
    if (!request.geometry_hint.empty()) body["divplan_geometry"] = request.geometry_hint;
    std::string payload = body.dump();

    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(endpoint.timeout_seconds, 0);
    client.set_read_timeout(endpoint.timeout_seconds, 0);
    httplib::Headers headers;
    if (!endpoint.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    }

    httplib::Result res;
    constexpr int kAttempts = 3;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        if (attempt > 0) sleep_ms(100 << (attempt - 1));
        res = client.Post(kChatPath, headers, payload, "application/json");
        if (res && res->status < 500) break;  // only transport and 5xx retry
    }
    if (!res) {
        throw TransportError("judge unreachable after " + std::to_string(kAttempts) +
                             " attempts: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw JudgeRefused("judge returned status " + std::to_string(res->status) +
                           ": " + res->body.substr(0, 200));
    }

    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::exception& e) {
        throw UnparseableResponse(std::string("judge reply is not JSON: ") + e.what());
    }
    ScoreReport report;
    try {
        report.raw_response = reply.at("choices").at(0).at("message").at("content");
        if (reply.contains("usage")) {
            report.tokens_used.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
            report.tokens_used.completion_tokens =
                reply["usage"].value("completion_tokens", 0L);
        }
    } catch (const json::exception& e) {
        throw UnparseableResponse(std::string("judge reply missing fields: ") + e.what());
    }
    if (!request.candidate_names.empty()) {
        ParsedScores parsed = parse_response(report.raw_response, request.candidate_names);
        report.per_candidate_scores = parsed.scores;
        report.chosen_name = parsed.chosen;
        for (std::size_t i = 0; i < request.candidate_names.size(); ++i) {
            if (request.candidate_names[i] == parsed.chosen) report.chosen = i;
        }
    }
    return report;
}

namespace {

std::vector<std::string> trail_names(const RenderConfig& rcfg, std::size_t k) {
    if (k > rcfg.palette.size()) {
        throw PaletteExhausted("cannot name " + std::to_string(k) + " candidates with " +
                               std::to_string(rcfg.palette.size()) + " palette colors");
    }
    std::vector<std::string> names;
    names.reserve(k);
    for (std::size_t i = 0; i < k; ++i) names.push_back(rcfg.palette[i].name);
    return names;
}

Image budgeted(Image img, const std::string& prompt, std::optional<long> budget,
               const TokenizerConfig& tcfg) {
    if (!budget) return img;
    return resize_to_budget(img, prompt, *budget, tcfg);
}

void add_usage(TokenUsage* total, const TokenUsage& part) {
    total->prompt_tokens += part.prompt_tokens;
    total->completion_tokens += part.completion_tokens;
}

}  // namespace

SelectionResult select_path(const Environment& env, const std::vector<Path>& candidates,
                            const Constraint& constraint, QueryMethod method,
                            const JudgeEndpoint& endpoint, const RenderConfig& rcfg,
                            std::optional<long> token_budget,
                            const TokenizerConfig& tcfg) {
    if (candidates.empty()) throw InvariantViolation("select_path needs candidates");
    const std::string& instruction = constraint.instruction;
    SelectionResult out;

    if (method == QueryMethod::single_image || method == QueryMethod::visual_context) {
        std::vector<std::string> names = trail_names(rcfg, candidates.size());
        Image img = render_trails(env, candidates, rcfg);
        std::string hint = geometry_hint_json(env, constraint, candidates, names);
        std::string rate_prompt = build_prompt(instruction, QueryMethod::single_image, names);
        if (method == QueryMethod::visual_context) {
            std::string describe =
                build_prompt(instruction, QueryMethod::visual_context, names);
            JudgeRequest stage1{QueryMethod::visual_context,
                                {budgeted(img, describe, token_budget, tcfg)},
                                describe,
                                {},
                                {},
                                {}};
            ScoreReport first = query(endpoint, stage1);
            add_usage(&out.total_tokens, first.tokens_used);
            rate_prompt += "\n\nVisual context from a prior look at this image:\n" +
                           first.raw_response;
            out.reports.push_back(std::move(first));
        }
        JudgeRequest req{method,
                         {budgeted(img, rate_prompt, token_budget, tcfg)},
                         rate_prompt,
                         {},
                         names,
                         hint};
        ScoreReport rep = query(endpoint, req);
        add_usage(&out.total_tokens, rep.tokens_used);
        out.chosen = rep.chosen;
        out.reports.push_back(std::move(rep));
        return out;
    }

    if (method == QueryMethod::gallery) {
        std::vector<std::string> names;
        names.reserve(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            names.push_back("row " + std::to_string(i + 1));
        }
        Image img = render_gallery(env, candidates, rcfg);
        std::string prompt = build_prompt(instruction, QueryMethod::gallery, names);
        JudgeRequest req{QueryMethod::gallery,
                         {budgeted(img, prompt, token_budget, tcfg)},
                         prompt,
                         {},
                         names,
                         geometry_hint_json(env, constraint, candidates, names)};
        ScoreReport rep = query(endpoint, req);
        add_usage(&out.total_tokens, rep.tokens_used);
        out.chosen = rep.chosen;
        out.reports.push_back(std::move(rep));
        return out;
    }

    // multi_image: one trail per image, one query per trail, argmax of scores.
    std::vector<std::string> one_name = {rcfg.palette[0].name};
    std::string prompt = build_prompt(instruction, QueryMethod::multi_image, one_name);
    std::vector<JudgeRequest> requests;
    requests.reserve(candidates.size());
    for (const Path& path : candidates) {
        Image img = render_single(env, path, rcfg.palette[0].rgb, rcfg);
        requests.push_back({QueryMethod::multi_image,
                            {budgeted(std::move(img), prompt, token_budget, tcfg)},
                            prompt,
                            {},
                            one_name,
                            geometry_hint_json(env, constraint, {path}, one_name)});
    }
    std::vector<std::optional<ScoreReport>> reports(candidates.size());
    std::vector<std::string> failures(candidates.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) return;
            try {
                reports[i] = query(endpoint, requests[i]);
            } catch (const Error& e) {
                failures[i] = e.kind() + ": " + e.what();
            } catch (const std::exception& e) {
                failures[i] = std::string("error: ") + e.what();
            }
        }
    };
    std::size_t n_workers = std::min<std::size_t>(
        candidates.size(), static_cast<std::size_t>(std::max(1, endpoint.max_in_flight)));
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    std::size_t best = candidates.size();
    double best_score = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!reports[i]) {
            out.warnings.push_back("candidate " + std::to_string(i) + ": " + failures[i]);
            continue;
        }
        add_usage(&out.total_tokens, reports[i]->tokens_used);
        auto it = reports[i]->per_candidate_scores.find(one_name[0]);
        double score = it != reports[i]->per_candidate_scores.end() ? it->second : 0.0;
        if (score > best_score) {
            best_score = score;
            best = i;
        }
        out.reports.push_back(std::move(*reports[i]));
    }
    if (best == candidates.size()) {
        throw AllQueriesFailed("all " + std::to_string(candidates.size()) +
                               " per-image judge queries failed");
    }
    out.chosen = best;
    return out;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
        i += 3;
    }
    std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        std::uint32_t v = bytes[i] << 16;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (rest == 2) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        int v = value_of(c);
        if (v < 0) throw ParseError("invalid base64 character");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

}  // namespace divplan
