#include "divplan/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "divplan/errors.hpp"
#include "divplan/rng.hpp"
#include "divplan/world.hpp"

namespace divplan {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Point point_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ParseError("point must be [x, y]");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

std::string flavor_of(const Constraint& c) {
    return std::holds_alternative<ProximitySpec>(c.spec) ? "proximity" : "path_style";
}

// Fixed-precision floats keep report bytes identical across runs.
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::vector<DatasetRecord> load_dataset(const std::string& dir, std::size_t k) {
    namespace fs = std::filesystem;
    fs::path root(dir);
    fs::path manifest = root / "dataset.jsonl";
    std::ifstream in(manifest);
    if (!in) throw MissingScene("dataset manifest not found: " + manifest.string());

    std::vector<DatasetRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
        DatasetRecord rec;
        try {
            rec.id = j.at("id").get<std::string>();
            rec.scene_path = (root / j.at("scene").get<std::string>()).string();
            rec.start = point_from(j.at("start"));
            rec.goal = point_from(j.at("goal"));
            rec.constraint = constraint_from_json(j.at("constraint").dump());
            rec.ground_truth_index = j.at("ground_truth_index").get<std::size_t>();
            rec.planner_seed = j.at("planner_seed").get<std::uint64_t>();
            rec.category = j.at("category").get<std::string>();
            rec.task_kind = j.at("task_kind").get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError("dataset line " + std::to_string(line_no) + " (" + rec.id +
                             "): " + e.what());
        }
        if (rec.id.empty()) {
            throw InvariantViolation("dataset line " + std::to_string(line_no) +
                                     ": empty id");
        }
        if (rec.category != flavor_of(rec.constraint)) {
            throw InvariantViolation(rec.id + ": category " + rec.category +
                                     " does not match the constraint flavor " +
                                     flavor_of(rec.constraint));
        }
        if (rec.task_kind != "navigation" && rec.task_kind != "manipulation") {
            throw InvariantViolation(rec.id + ": unknown task_kind " + rec.task_kind);
        }
        if (rec.ground_truth_index >= k) {
            throw InvariantViolation(rec.id + ": ground_truth_index " +
                                     std::to_string(rec.ground_truth_index) +
                                     " out of range for k=" + std::to_string(k));
        }
        if (!fs::exists(rec.scene_path)) {
            throw MissingScene(rec.id + ": scene file missing: " + rec.scene_path);
        }
        Environment env = load_scene(rec.scene_path);
        validate_constraint(rec.constraint, env);
        records.push_back(std::move(rec));
    }
    return records;
}

RecordResult run_problem(const DatasetRecord& record, const JudgeSpec& judge,
                         const EvalConfig& cfg) {
    RecordResult result;
    result.id = record.id;
    result.category = record.category;
    result.task_kind = record.task_kind;
    try {
        Environment env = load_scene(record.scene_path);
        PlanningProblem problem{env, record.start, record.goal};
        validate_problem(problem);
        std::vector<Path> candidates =
            generate_candidates(problem, cfg.planner, record.planner_seed);

        ClusterConfig ccfg = cfg.cluster;
        ccfg.seed = derive_seed(record.planner_seed, kClusterSeedStream);
        Clustering clustering = cluster(candidates, ccfg);
        std::vector<Path> representatives;
        representatives.reserve(clustering.representatives.size());
        for (std::size_t idx : clustering.representatives) {
            representatives.push_back(candidates[idx]);
        }

        if (judge.kind == JudgeSpec::Kind::oracle) {
            auto [chosen, scores] = oracle_select(representatives, env, record.constraint);
            result.chosen = chosen;
        } else {
            SelectionResult sel =
                select_path(env, representatives, record.constraint, judge.method,
                            judge.endpoint, cfg.render, cfg.token_budget, cfg.tokenizer);
            result.chosen = sel.chosen;
            result.tokens = sel.total_tokens;
            result.requests = static_cast<long>(sel.reports.size());
        }
        result.attempted = true;
        result.correct = (result.chosen == record.ground_truth_index);
    } catch (const Error& e) {
        result.error_kind = e.kind();
        result.error_message = e.what();
    } catch (const std::exception& e) {
        result.error_kind = "InternalError";
        result.error_message = e.what();
    }
    return result;
}

EvalResult aggregate_results(std::vector<RecordResult> results) {
    std::sort(results.begin(), results.end(),
              [](const RecordResult& a, const RecordResult& b) { return a.id < b.id; });
    EvalResult out;
    out.total = results.size();
    for (const RecordResult& r : results) {
        if (r.attempted) {
            ++out.attempted;
            if (r.correct) ++out.correct;
            CategoryTally& cat = out.by_category[r.category];
            ++cat.attempted;
            if (r.correct) ++cat.correct;
            CategoryTally& task = out.by_task_kind[r.task_kind];
            ++task.attempted;
            if (r.correct) ++task.correct;
            out.total_requests += r.requests;
            out.total_prompt_tokens += r.tokens.prompt_tokens;
            out.total_completion_tokens += r.tokens.completion_tokens;
        } else {
            ++out.error_counts[r.error_kind];
        }
    }
    if (out.attempted > 0) {
        out.accuracy = static_cast<double>(out.correct) / static_cast<double>(out.attempted);
    }
    if (out.total_requests > 0) {
        out.mean_tokens_per_request =
            static_cast<double>(out.total_prompt_tokens + out.total_completion_tokens) /
            static_cast<double>(out.total_requests);
    }
    out.records = std::move(results);
    return out;
}

EvalResult run_eval(const std::vector<DatasetRecord>& records, const JudgeSpec& judge,
                    const EvalConfig& cfg) {
    if (records.empty()) throw InvariantViolation("run_eval needs at least one record");
    std::vector<RecordResult> results(records.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= records.size()) return;
            results[i] = run_problem(records[i], judge, cfg);
        }
    };
    std::size_t jobs = cfg.jobs > 0 ? static_cast<std::size_t>(cfg.jobs)
                                    : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, records.size());
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return aggregate_results(std::move(results));
}

std::vector<SweepRow> token_sweep(const std::vector<DatasetRecord>& records,
                                  const JudgeSpec& judge,
                                  const std::vector<long>& budgets,
                                  const EvalConfig& cfg) {
    if (!std::is_sorted(budgets.begin(), budgets.end())) {
        throw InvariantViolation("token sweep budgets must be ascending");
    }
    std::vector<SweepRow> rows;
    rows.reserve(budgets.size());
    for (long budget : budgets) {
        EvalConfig step = cfg;
        step.token_budget = budget;
        EvalResult res = run_eval(records, judge, step);
        SweepRow row;
        row.budget = budget;
        row.attempted = res.attempted;
        row.accuracy = res.accuracy;
        row.mean_tokens_per_request = res.mean_tokens_per_request;
        row.errors = res.total - res.attempted;
        rows.push_back(row);
    }
    return rows;
}

std::string eval_report_json(const EvalResult& result) {
    ordered_json j;
    j["total"] = result.total;
    j["attempted"] = result.attempted;
    j["correct"] = result.correct;
    if (result.accuracy) {
        j["accuracy"] = json::parse(fmt(*result.accuracy));
    } else {
        j["accuracy"] = nullptr;
    }
    ordered_json cats;
    for (const auto& [name, tally] : result.by_category) {
        ordered_json t;
        t["attempted"] = tally.attempted;
        t["correct"] = tally.correct;
        if (tally.attempted > 0) {
            t["accuracy"] = json::parse(
                fmt(static_cast<double>(tally.correct) / tally.attempted));
        } else {
            t["accuracy"] = nullptr;
        }
        cats[name] = t;
    }
    j["by_category"] = cats;
    ordered_json tasks;
    for (const auto& [name, tally] : result.by_task_kind) {
        ordered_json t;
        t["attempted"] = tally.attempted;
        t["correct"] = tally.correct;
        if (tally.attempted > 0) {
            t["accuracy"] = json::parse(
                fmt(static_cast<double>(tally.correct) / tally.attempted));
        } else {
            t["accuracy"] = nullptr;
        }
        tasks[name] = t;
    }
    j["by_task_kind"] = tasks;
    j["total_requests"] = result.total_requests;
    j["total_prompt_tokens"] = result.total_prompt_tokens;
    j["total_completion_tokens"] = result.total_completion_tokens;
    j["mean_tokens_per_request"] = json::parse(fmt(result.mean_tokens_per_request));
    ordered_json errs;
    for (const auto& [kind, count] : result.error_counts) errs[kind] = count;
    j["error_counts"] = errs;
    ordered_json recs = ordered_json::array();
    for (const RecordResult& r : result.records) {
        ordered_json rec;
        rec["id"] = r.id;
        rec["category"] = r.category;
        rec["task_kind"] = r.task_kind;
        rec["attempted"] = r.attempted;
        rec["chosen"] = r.chosen;
        rec["correct"] = r.correct;
        rec["error_kind"] = r.error_kind;
        rec["prompt_tokens"] = r.tokens.prompt_tokens;
        rec["completion_tokens"] = r.tokens.completion_tokens;
        rec["requests"] = r.requests;
        recs.push_back(rec);
    }
    j["records"] = recs;
    return j.dump(2) + "\n";
}

std::string eval_report_csv(const EvalResult& result) {
    std::ostringstream out;
    out << "id,category,task_kind,attempted,chosen,correct,error_kind,"
           "prompt_tokens,completion_tokens,requests\n";
    for (const RecordResult& r : result.records) {
        out << r.id << ',' << r.category << ',' << r.task_kind << ','
            << (r.attempted ? 1 : 0) << ',' << r.chosen << ',' << (r.correct ? 1 : 0)
            << ',' << r.error_kind << ',' << r.tokens.prompt_tokens << ','
            << r.tokens.completion_tokens << ',' << r.requests << '\n';
    }
    return out.str();
}

std::string token_sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "budget,attempted,accuracy,mean_tokens_per_request,errors\n";
    for (const SweepRow& row : rows) {
        out << row.budget << ',' << row.attempted << ',';
        if (row.accuracy) {
            out << fmt(*row.accuracy);
        }
        out << ',' << fmt(row.mean_tokens_per_request) << ',' << row.errors << '\n';
    }
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace divplan
