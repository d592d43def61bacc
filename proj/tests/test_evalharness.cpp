#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "divplan/errors.hpp"
#include "divplan/evalharness.hpp"
#include "divplan/mockjudge.hpp"
#include "divplan/world.hpp"

using namespace divplan;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

RecordResult synth(const std::string& id, const std::string& category,
                   const std::string& task_kind, bool attempted, bool correct,
                   const std::string& error_kind = "") {
    RecordResult r;
    r.id = id;
    r.category = category;
    r.task_kind = task_kind;
    r.attempted = attempted;
    r.correct = correct;
    r.error_kind = error_kind;
    return r;
}

Environment marker_env() {
    Environment env;
    env.bounds = {{0.0, 0.0}, {10.0, 10.0}};
    env.obstacles.push_back({Circle{{2.5, 5.0}, 0.8}, "left"});
    env.obstacles.push_back({Circle{{7.5, 5.0}, 0.8}, "right"});
    env.objects["left"] = 0;
    env.objects["right"] = 1;
    return env;
}

Constraint proximity_constraint(ProximityMode mode, const std::string& obj,
                                const std::string& instruction) {
    Constraint c;
    c.instruction = instruction;
    c.spec = ProximitySpec{mode, obj, {}};
    return c;
}

Constraint style_constraint(StyleKind kind, const std::string& instruction) {
    Constraint c;
    c.instruction = instruction;
    c.spec = StyleSpec{kind};
    return c;
}

// Small planner settings keep the end-to-end tests quick.
EvalConfig test_config() {
    EvalConfig cfg;
    cfg.planner.num_candidates = 4;
    cfg.planner.prm_samples = 120;
    cfg.planner.prm_radius = 2.5;
    cfg.jobs = 4;
    return cfg;
}

struct CorpusDir {
    fs::path root;

    explicit CorpusDir(const std::string& name) : root(name) {
        fs::remove_all(root);
        fs::create_directories(root / "scenes");
        std::ofstream scene(root / "scenes" / "markers.json");
        scene << scene_to_json(marker_env());
    }
    ~CorpusDir() { fs::remove_all(root); }

    void write_manifest(const std::vector<json>& records) const {
        std::ofstream out(root / "dataset.jsonl");
        for (const json& r : records) out << r.dump() << "\n";
    }
};

json record_json(const std::string& id, const Constraint& con, std::uint64_t seed,
                 std::size_t gt, const std::string& category,
                 const std::string& task_kind = "navigation") {
    json r;
    r["id"] = id;
    r["scene"] = "scenes/markers.json";
    r["start"] = {1.0, 5.0};
    r["goal"] = {9.0, 5.0};
    r["constraint"] = json::parse(constraint_to_json(con));
    r["ground_truth_index"] = gt;
    r["planner_seed"] = seed;
    r["category"] = category;
    r["task_kind"] = task_kind;
    return r;
}

// Ground truth by construction: run the deterministic pipeline once with the
// oracle and adopt its pick, the same bootstrap the bundled corpus uses.
std::vector<json> bootstrap_records(const CorpusDir& dir, const EvalConfig& cfg) {
    std::vector<json> raw = {
        record_json("rec_far", proximity_constraint(ProximityMode::far, "left",
                                                    "stay far from the left marker"),
                    101, 0, "proximity"),
        record_json("rec_near", proximity_constraint(ProximityMode::near, "right",
                                                     "hug the right marker"),
                    202, 0, "proximity", "manipulation"),
        record_json("rec_curved",
                    style_constraint(StyleKind::curved, "take a sweeping curved path"),
                    303, 0, "path_style"),
    };
    dir.write_manifest(raw);
    std::vector<DatasetRecord> loaded = load_dataset(dir.root.string());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        RecordResult probe = run_problem(loaded[i], JudgeSpec::oracle(), cfg);
        REQUIRE(probe.attempted);
        raw[i]["ground_truth_index"] = probe.chosen;
    }
    dir.write_manifest(raw);
    return raw;
}

}  // namespace

TEST_CASE("aggregation computes accuracy, splits, and the partition property") {
    std::vector<RecordResult> results = {
        synth("a", "proximity", "navigation", true, true),
        synth("b", "proximity", "navigation", true, true),
        synth("c", "path_style", "navigation", true, false),
        synth("d", "path_style", "manipulation", true, true),
    };
    EvalResult agg = aggregate_results(results);
    CHECK(agg.total == 4);
    CHECK(agg.attempted == 4);
    CHECK(agg.correct == 3);
    REQUIRE(agg.accuracy.has_value());
    CHECK(*agg.accuracy == doctest::Approx(0.75));

    // accuracy(all) sits between the category extremes and attempted counts
    // partition the total.
    double lo = 1e9, hi = -1e9;
    std::size_t attempted_sum = 0;
    for (const auto& [name, tally] : agg.by_category) {
        double acc = static_cast<double>(tally.correct) / tally.attempted;
        lo = std::min(lo, acc);
        hi = std::max(hi, acc);
        attempted_sum += tally.attempted;
    }
    CHECK(attempted_sum == agg.attempted);
    CHECK(*agg.accuracy >= lo);
    CHECK(*agg.accuracy <= hi);
    CHECK(agg.by_category["proximity"].correct == 2);
    CHECK(agg.by_task_kind["manipulation"].attempted == 1);

    // Records come back sorted by id regardless of input order.
    std::swap(results[0], results[3]);
    EvalResult shuffled = aggregate_results(results);
    CHECK(eval_report_json(shuffled) == eval_report_json(agg));
}

TEST_CASE("errored records are excluded from accuracy but tallied by kind") {
    std::vector<RecordResult> results = {
        synth("a", "proximity", "navigation", true, true),
        synth("b", "proximity", "navigation", false, false, "TransportError"),
        synth("c", "path_style", "navigation", false, false, "TransportError"),
        synth("d", "path_style", "navigation", false, false, "HallucinatedAnswer"),
    };
    EvalResult agg = aggregate_results(results);
    CHECK(agg.attempted == 1);
    CHECK(agg.correct == 1);
    REQUIRE(agg.accuracy.has_value());
    CHECK(*agg.accuracy == doctest::Approx(1.0));
    CHECK(agg.error_counts["TransportError"] == 2);
    CHECK(agg.error_counts["HallucinatedAnswer"] == 1);

    EvalResult none = aggregate_results(
        {synth("a", "proximity", "navigation", false, false, "ParseError")});
    CHECK(none.attempted == 0);
    CHECK_FALSE(none.accuracy.has_value());
    CHECK(eval_report_json(none).find("\"accuracy\": null") != std::string::npos);
}

TEST_CASE("dataset loading validates records and surfaces typed failures") {
    CorpusDir dir("eval_test_corpus_load");
    Constraint far = proximity_constraint(ProximityMode::far, "left", "keep away");

    SUBCASE("round trip of a valid manifest") {
        dir.write_manifest({record_json("r1", far, 7, 2, "proximity"),
                            record_json("r2", far, 8, 0, "proximity", "manipulation")});
        auto records = load_dataset(dir.root.string());
        REQUIRE(records.size() == 2);
        CHECK(records[0].id == "r1");
        CHECK(records[0].ground_truth_index == 2);
        CHECK(records[0].planner_seed == 7);
        CHECK(records[1].task_kind == "manipulation");
        CHECK(records[0].start.x == doctest::Approx(1.0));
        CHECK(std::holds_alternative<ProximitySpec>(records[0].constraint.spec));
    }
    SUBCASE("ground truth index beyond k is rejected") {
        dir.write_manifest({record_json("r1", far, 7, 5, "proximity")});
        CHECK_THROWS_AS(load_dataset(dir.root.string(), 5), InvariantViolation);
        CHECK_NOTHROW(load_dataset(dir.root.string(), 6));
    }
    SUBCASE("category must match the constraint flavor") {
        dir.write_manifest({record_json("r1", far, 7, 0, "path_style")});
        CHECK_THROWS_AS(load_dataset(dir.root.string()), InvariantViolation);
    }
    SUBCASE("unknown task kinds are rejected") {
        dir.write_manifest({record_json("r1", far, 7, 0, "proximity", "flight")});
        CHECK_THROWS_AS(load_dataset(dir.root.string()), InvariantViolation);
    }
    SUBCASE("missing scene file") {
        json r = record_json("r1", far, 7, 0, "proximity");
        r["scene"] = "scenes/absent.json";
        dir.write_manifest({r});
        CHECK_THROWS_AS(load_dataset(dir.root.string()), MissingScene);
    }
    SUBCASE("garbage line") {
        std::ofstream out(dir.root / "dataset.jsonl");
        out << "{not json\n";
        out.close();
        CHECK_THROWS_AS(load_dataset(dir.root.string()), ParseError);
    }
    SUBCASE("constraint referencing an unknown object") {
        Constraint ghost = proximity_constraint(ProximityMode::far, "ghost", "avoid it");
        dir.write_manifest({record_json("r1", ghost, 7, 0, "proximity")});
        CHECK_THROWS_AS(load_dataset(dir.root.string()), UnknownObject);
    }
    SUBCASE("empty manifest loads as an empty dataset") {
        dir.write_manifest({});
        CHECK(load_dataset(dir.root.string()).empty());
    }
    SUBCASE("missing manifest") {
        fs::remove(dir.root / "dataset.jsonl");
        CHECK_THROWS_AS(load_dataset(dir.root.string()), MissingScene);
    }
}

TEST_CASE("oracle evaluation is deterministic and parallelism invariant") {
    CorpusDir dir("eval_test_corpus_oracle");
    EvalConfig cfg = test_config();
    bootstrap_records(dir, cfg);
    auto records = load_dataset(dir.root.string());
    REQUIRE(records.size() == 3);

    EvalResult first = run_eval(records, JudgeSpec::oracle(), cfg);
    CHECK(first.total == 3);
    CHECK(first.attempted == 3);
    REQUIRE(first.accuracy.has_value());
    CHECK(*first.accuracy == doctest::Approx(1.0));
    CHECK(first.total_requests == 0);

    EvalResult second = run_eval(records, JudgeSpec::oracle(), cfg);
    CHECK(eval_report_json(first) == eval_report_json(second));
    CHECK(eval_report_csv(first) == eval_report_csv(second));

    EvalConfig serial = cfg;
    serial.jobs = 1;
    EvalResult third = run_eval(records, JudgeSpec::oracle(), serial);
    CHECK(eval_report_json(first) == eval_report_json(third));
}

TEST_CASE("mock judge evaluation matches ground truth and bills tokens") {
    CorpusDir dir("eval_test_corpus_mock");
    EvalConfig cfg = test_config();
    bootstrap_records(dir, cfg);
    auto records = load_dataset(dir.root.string());

    MockJudge judge;
    judge.start();
    JudgeEndpoint ep;
    ep.base_url = judge.url();
    JudgeSpec spec = JudgeSpec::remote(QueryMethod::single_image, ep);

    EvalResult res = run_eval(records, spec, cfg);
    CHECK(res.attempted == 3);
    REQUIRE(res.accuracy.has_value());
    CHECK(*res.accuracy == doctest::Approx(1.0));
    CHECK(res.total_requests == 3);
    CHECK(res.total_prompt_tokens > 0);
    CHECK(res.mean_tokens_per_request > 0.0);
    for (const RecordResult& r : res.records) {
        CHECK(r.tokens.prompt_tokens > 0);
        CHECK(r.requests == 1);
    }
    judge.stop();
}

TEST_CASE("unreachable judges become per-record errors, not batch failures") {
    CorpusDir dir("eval_test_corpus_dead");
    EvalConfig cfg = test_config();
    bootstrap_records(dir, cfg);
    auto records = load_dataset(dir.root.string());

    JudgeEndpoint dead;
    dead.base_url = "http://127.0.0.1:9";
    dead.timeout_seconds = 1;
    EvalResult res = run_eval(records, JudgeSpec::remote(QueryMethod::single_image, dead),
                              cfg);
    CHECK(res.total == 3);
    CHECK(res.attempted == 0);
    CHECK_FALSE(res.accuracy.has_value());
    CHECK(res.error_counts["TransportError"] == 3);
}

TEST_CASE("token sweeps produce monotone mean token curves") {
    CorpusDir dir("eval_test_corpus_sweep");
    EvalConfig cfg = test_config();
    bootstrap_records(dir, cfg);
    auto records = load_dataset(dir.root.string());

    MockJudge judge;
    judge.start();
    JudgeEndpoint ep;
    ep.base_url = judge.url();
    JudgeSpec spec = JudgeSpec::remote(QueryMethod::single_image, ep);

    std::vector<long> budgets = {300, 500, 900};
    std::vector<SweepRow> rows = token_sweep(records, spec, budgets, cfg);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].budget == budgets[i]);
        CHECK(rows[i].attempted == 3);
        REQUIRE(rows[i].accuracy.has_value());
        CHECK(*rows[i].accuracy == doctest::Approx(1.0));
        CHECK(rows[i].errors == 0);
        if (i > 0) {
            CHECK(rows[i].mean_tokens_per_request >=
                  rows[i - 1].mean_tokens_per_request);
        }
    }
    std::string csv = token_sweep_csv(rows);
    CHECK(csv.find("budget,attempted,accuracy,mean_tokens_per_request,errors") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

    CHECK_THROWS_AS(token_sweep(records, spec, {500, 300}, cfg), InvariantViolation);
    judge.stop();
}
