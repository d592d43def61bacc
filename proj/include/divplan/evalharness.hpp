#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "divplan/constraints.hpp"
#include "divplan/diversity.hpp"
#include "divplan/planner.hpp"
#include "divplan/render.hpp"
#include "divplan/vlm.hpp"

namespace divplan {

struct DatasetRecord {
    std::string id;
    std::string scene_path;  // resolved against the dataset directory at load
    Point start;
    Point goal;
    Constraint constraint;
    std::size_t ground_truth_index = 0;  // representative index, < k
    std::uint64_t planner_seed = 0;
    std::string category;   // proximity | path_style
    std::string task_kind;  // navigation | manipulation
};

// Which judge scores the representatives: the in-process metric oracle, or a
// remote chat-completion endpoint queried with one of the four methods.
struct JudgeSpec {
    enum class Kind { oracle, remote };
    Kind kind = Kind::oracle;
    QueryMethod method = QueryMethod::single_image;
    JudgeEndpoint endpoint;

    static JudgeSpec oracle() { return {}; }
    static JudgeSpec remote(QueryMethod m, JudgeEndpoint ep) {
        JudgeSpec js;
        js.kind = Kind::remote;
        js.method = m;
        js.endpoint = std::move(ep);
        return js;
    }
};

// Stream id mixed into the planner seed to derive the clustering seed, so one
// record seed drives the whole pipeline reproducibly.
inline constexpr std::uint64_t kClusterSeedStream = 0x10bef5;

struct EvalConfig {
    PlannerConfig planner;
    ClusterConfig cluster;
    RenderConfig render;
    TokenizerConfig tokenizer;
    std::optional<long> token_budget;
    int jobs = 0;  // 0 = logical core count
};

struct RecordResult {
    std::string id;
    std::string category;
    std::string task_kind;
    std::size_t chosen = 0;
    bool correct = false;
    bool attempted = false;  // false iff error_kind non-empty
    std::string error_kind;
    std::string error_message;
    TokenUsage tokens;
    long requests = 0;  // judge queries issued (0 for the oracle)
};

struct CategoryTally {
    std::size_t attempted = 0;
    std::size_t correct = 0;
};

struct EvalResult {
    std::vector<RecordResult> records;  // sorted by id
    std::size_t total = 0;
    std::size_t attempted = 0;
    std::size_t correct = 0;
    std::optional<double> accuracy;  // empty when attempted == 0
    std::map<std::string, CategoryTally> by_category;
    std::map<std::string, CategoryTally> by_task_kind;
    long total_requests = 0;
    long total_prompt_tokens = 0;
    long total_completion_tokens = 0;
    double mean_tokens_per_request = 0.0;  // prompt + completion
    std::map<std::string, std::size_t> error_counts;  // error kind -> count
};

// Reads dir/dataset.jsonl (one record per line, order preserved), resolves
// and checks every referenced scene, and validates fields: category matches
// the constraint flavor, task_kind is known, ground_truth_index < k. Throws
// ParseError, MissingScene, InvariantViolation.
std::vector<DatasetRecord> load_dataset(const std::string& dir, std::size_t k = 5);

// Full pipeline for one record: plan candidates with the record's seed,
// cluster to k representatives, score them with the judge, compare to ground
// truth. Pipeline failures land in the error fields, never escape.
RecordResult run_problem(const DatasetRecord& record, const JudgeSpec& judge,
                         const EvalConfig& cfg);

// Evaluates records in parallel (cfg.jobs workers), then aggregates after a
// deterministic sort by id, so results do not depend on scheduling.
EvalResult run_eval(const std::vector<DatasetRecord>& records, const JudgeSpec& judge,
                    const EvalConfig& cfg);

// Pure aggregation; exposed so accuracy bookkeeping is testable on its own.
EvalResult aggregate_results(std::vector<RecordResult> results);

struct SweepRow {
    long budget = 0;
    std::size_t attempted = 0;
    std::optional<double> accuracy;
    double mean_tokens_per_request = 0.0;
    std::size_t errors = 0;
};

// One run_eval per budget (ascending), each capping judge images via
// resize_to_budget. Budget-related failures show up in the row's error count.
std::vector<SweepRow> token_sweep(const std::vector<DatasetRecord>& records,
                                  const JudgeSpec& judge,
                                  const std::vector<long>& budgets,
                                  const EvalConfig& cfg);

// Deterministic serializations (stable key order, fixed float formatting).
std::string eval_report_json(const EvalResult& result);
std::string eval_report_csv(const EvalResult& result);
std::string token_sweep_csv(const std::vector<SweepRow>& rows);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace divplan
