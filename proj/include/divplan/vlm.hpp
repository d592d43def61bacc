#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "divplan/constraints.hpp"
#include "divplan/render.hpp"
#include "divplan/world.hpp"

namespace divplan {

// How candidate paths are presented to the judge:
//   single_image    all trails in one image, answer names a color
//   multi_image     one image per trail, one query each, argmax of scores
//   visual_context  a describe pass first, its text prepended to the rating pass
//   gallery         per-path rows of motion snapshots, answer names a row
enum class QueryMethod { single_image, multi_image, visual_context, gallery };

QueryMethod parse_method(const std::string& name);  // single|multi|context|gallery
std::string method_name(QueryMethod method);

struct TokenizerConfig {
    int patch_size = 28;      // image tokens: ceil(w/patch) * ceil(h/patch)
    int bytes_per_token = 4;  // text tokens: ceil(bytes / this)
};

struct JudgeEndpoint {
    std::string base_url;  // e.g. http://127.0.0.1:8791
    std::string model = "judge-local";
    std::string api_key;   // sent as a bearer token when non-empty
    int timeout_seconds = 60;
    int max_in_flight = 4;  // cap on concurrent multi_image queries

    // Reads DIVPLAN_JUDGE_URL, DIVPLAN_JUDGE_MODEL, DIVPLAN_JUDGE_KEY.
    static JudgeEndpoint from_env();
};

struct JudgeRequest {
    QueryMethod method = QueryMethod::single_image;
    std::vector<Image> images;
    std::string prompt;
    std::optional<int> max_tokens;
    // Names the judge may answer with, in candidate order (palette colors or
    // "row N"). Empty for non-scoring calls such as the describe stage.
    std::vector<std::string> candidate_names;
    // Serialized scene and candidate geometry; local mock judges score from
    // it, remote endpoints ignore the extra field.
    std::string geometry_hint;
};

// single_image/visual_context/gallery carry exactly one image, multi_image
// at least one. Throws InvariantViolation.
void validate_request(const JudgeRequest& req);

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ScoreReport {
    std::map<std::string, double> per_candidate_scores;  // name -> [0,100]
    std::size_t chosen = 0;  // index into candidate_names
    std::string chosen_name;
    std::string raw_response;
    TokenUsage tokens_used;
};

// The rating prompt for a method. single_image uses the fixed template ending
// in "Give the color with the highest score at the end."; multi_image asks
// for one score; gallery enumerates |palette_names| rows and asks for a row
// number; visual_context returns the stage-one describe request (stage two
// reuses the single_image text plus the returned description). Instruction
// must be non-empty.
std::string build_prompt(const std::string& instruction, QueryMethod method,
                         const std::vector<std::string>& palette_names);

struct ParsedScores {
    std::map<std::string, double> scores;  // clamped to [0,100]
    std::string chosen;
};

// Pulls "name: number" and "name number" pairs (case-insensitive, whole word)
// for each candidate name, then takes the last bare name mention as the
// explicit choice; without one the choice is the score argmax, ties to the
// earliest name in candidate order. A final mention of a known color or row
// outside the candidate list throws HallucinatedAnswer; no scores and no
// choice throws UnparseableResponse.
ParsedScores parse_response(const std::string& text,
                            const std::vector<std::string>& candidate_names);

// One HTTP round trip to a chat-completion endpoint: images ride along
// base64-encoded, transient failures retry 3 times with exponential backoff.
// Parses scores when the request names candidates. Throws TransportError,
// JudgeRefused, UnparseableResponse, HallucinatedAnswer.
ScoreReport query(const JudgeEndpoint& endpoint, const JudgeRequest& request);

struct SelectionResult {
    std::size_t chosen = 0;  // candidate index
    std::vector<ScoreReport> reports;  // per query, in issue order
    std::vector<std::string> warnings;  // multi_image partial failures
    TokenUsage total_tokens;
};

// Full method pipeline: render, prompt, query, parse. multi_image fans out
// one query per candidate (bounded by endpoint.max_in_flight), keeps going
// past individual failures, and throws AllQueriesFailed only when none
// succeed. token_budget, when set, downscales every outgoing image until the
// estimate fits.
SelectionResult select_path(const Environment& env, const std::vector<Path>& candidates,
                            const Constraint& constraint, QueryMethod method,
                            const JudgeEndpoint& endpoint, const RenderConfig& rcfg,
                            std::optional<long> token_budget = {},
                            const TokenizerConfig& tcfg = {});

// ceil(w/patch)*ceil(h/patch) image tokens (0 for an empty image) plus
// ceil(bytes/4) text tokens.
long estimate_tokens(const Image& image, const std::string& text,
                     const TokenizerConfig& cfg = {});

// Largest aspect-preserving area-average downscale whose estimate fits the
// budget; unchanged when it already fits. Throws BudgetTooSmall when no size
// does.
Image resize_to_budget(const Image& image, const std::string& text, long max_tokens,
                       const TokenizerConfig& cfg = {});

// Sidecar payload consumed by the local mock judge: scene, constraint, and
// the candidate polylines named in answer order.
std::string geometry_hint_json(const Environment& env, const Constraint& constraint,
                               const std::vector<Path>& paths,
                               const std::vector<std::string>& names);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace divplan
