#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "divplan/constraints.hpp"
#include "divplan/diversity.hpp"
#include "divplan/errors.hpp"
#include "divplan/evalharness.hpp"
#include "divplan/mockjudge.hpp"
#include "divplan/planner.hpp"
#include "divplan/render.hpp"
#include "divplan/rng.hpp"
#include "divplan/vlm.hpp"
#include "divplan/world.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace divplan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitJudge = 3;

const std::set<std::string> kJudgeErrorKinds = {
    "TransportError",     "JudgeRefused",     "UnparseableResponse",
    "HallucinatedAnswer", "AllQueriesFailed", "BudgetTooSmall",
};

Point parse_point(const std::string& text, const std::string& flag) {
    std::size_t comma = text.find(',');
    if (comma == std::string::npos) {
        throw CLI::ValidationError(flag, "expected x,y but got '" + text + "'");
    }
    try {
        std::size_t used = 0;
        double x = std::stod(text.substr(0, comma), &used);
        if (used != comma) throw std::invalid_argument(text);
        std::string rest = text.substr(comma + 1);
        double y = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument(text);
        return {x, y};
    } catch (const std::exception&) {
        throw CLI::ValidationError(flag, "expected x,y but got '" + text + "'");
    }
}

// Flag-parse-time syntax check so a bad coordinate is a usage error, not a
// data error surfaced later.
CLI::Validator point_validator() {
    return CLI::Validator(
        [](std::string& input) -> std::string {
            try {
                parse_point(input, "point");
                return {};
            } catch (const CLI::ValidationError&) {
                return "expected x,y but got '" + input + "'";
            }
        },
        "X,Y");
}

// Inline JSON is passed through; anything else is read as a file path.
std::string load_json_argument(const std::string& arg) {
    if (!arg.empty() && (arg.front() == '{' || arg.front() == '[')) return arg;
    std::ifstream in(arg, std::ios::binary);
    if (!in) throw MissingScene("cannot open " + arg);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json paths_to_json(const std::vector<Path>& paths) {
    json arr = json::array();
    for (const Path& p : paths) {
        json pts = json::array();
        for (const Point& w : p.waypoints) pts.push_back({w.x, w.y});
        arr.push_back(std::move(pts));
    }
    return arr;
}

std::vector<Path> paths_from_json(const json& arr) {
    if (!arr.is_array()) throw ParseError("paths: expected an array of paths");
    std::vector<Path> out;
    for (const json& pts : arr) {
        Path p;
        for (const json& w : pts) {
            if (!w.is_array() || w.size() != 2) {
                throw ParseError("paths: waypoint must be [x, y]");
            }
            p.waypoints.push_back({w[0].get<double>(), w[1].get<double>()});
        }
        out.push_back(std::move(p));
    }
    return out;
}

struct CandidateFile {
    std::string scene;
    Point start;
    Point goal;
    std::uint64_t seed = 0;
    std::vector<Path> paths;
};

void write_candidates(const std::string& path, const CandidateFile& cf) {
    nlohmann::ordered_json doc;
    doc["scene"] = cf.scene;
    doc["start"] = {cf.start.x, cf.start.y};
    doc["goal"] = {cf.goal.x, cf.goal.y};
    doc["seed"] = cf.seed;
    doc["paths"] = paths_to_json(cf.paths);
    write_text_file(path, doc.dump(2) + "\n");
}

CandidateFile read_candidates(const std::string& path) {
    json doc;
    try {
        doc = json::parse(load_json_argument(path));
    } catch (const json::exception& e) {
        throw ParseError(std::string("candidate file: ") + e.what());
    }
    try {
        CandidateFile cf;
        cf.scene = doc.at("scene").get<std::string>();
        cf.start = {doc.at("start").at(0).get<double>(), doc.at("start").at(1).get<double>()};
        cf.goal = {doc.at("goal").at(0).get<double>(), doc.at("goal").at(1).get<double>()};
        cf.seed = doc.value("seed", std::uint64_t{0});
        cf.paths = paths_from_json(doc.at("paths"));
        return cf;
    } catch (const json::exception& e) {
        throw ParseError(std::string("candidate file: ") + e.what());
    }
}

// Shared planning knobs; select/render reuse the plan flags where they apply.
struct PlanFlags {
    std::string scene;
    std::string start = "0,0";
    std::string goal = "0,0";
    int n = 5;
    std::uint64_t seed = 0;
};

void add_plan_flags(CLI::App* cmd, PlanFlags& f, bool with_endpoints) {
    cmd->add_option("--scene", f.scene, "scene JSON file")->required();
    if (with_endpoints) {
        cmd->add_option("--start", f.start, "start point as x,y")
            ->required()
            ->check(point_validator());
        cmd->add_option("--goal", f.goal, "goal point as x,y")
            ->required()
            ->check(point_validator());
    }
    cmd->add_option("--n", f.n, "planner runs per family (2n candidates attempted)")
        ->capture_default_str();
    cmd->add_option("--seed", f.seed, "base seed for planning")->capture_default_str();
}

std::vector<Path> plan_candidates(const PlanFlags& f, const Environment& env) {
    PlanningProblem problem{env, parse_point(f.start, "--start"),
                            parse_point(f.goal, "--goal")};
    validate_problem(problem);
    PlannerConfig cfg;
    cfg.num_candidates = f.n;
    return generate_candidates(problem, cfg, f.seed);
}

std::vector<Path> pick_representatives(const std::vector<Path>& candidates, int k,
                                       std::uint64_t seed) {
    ClusterConfig cfg;
    cfg.num_clusters = k;
    cfg.seed = derive_seed(seed, kClusterSeedStream);
    Clustering clustering = cluster(candidates, cfg);
    std::vector<Path> reps;
    reps.reserve(clustering.representatives.size());
    for (std::size_t idx : clustering.representatives) reps.push_back(candidates[idx]);
    return reps;
}

int cmd_plan(const PlanFlags& f, const std::string& out) {
    Environment env = load_scene(f.scene);
    std::vector<Path> paths = plan_candidates(f, env);
    write_candidates(out, {f.scene, parse_point(f.start, "--start"),
                           parse_point(f.goal, "--goal"), f.seed, paths});
    std::cout << paths.size() << " candidates -> " << out << "\n";
    return kExitOk;
}

struct JudgeFlags {
    std::string judge = "oracle";
    std::string method = "single";
    std::string url;
    std::string model;
};

void add_judge_flags(CLI::App* cmd, JudgeFlags& f) {
    cmd->add_option("--judge", f.judge, "judge backend")
        ->check(CLI::IsMember({"oracle", "remote"}))
        ->capture_default_str();
    cmd->add_option("--method", f.method, "query method for remote judges")
        ->check(CLI::IsMember({"single", "multi", "context", "gallery"}))
        ->capture_default_str();
    cmd->add_option("--url", f.url, "remote judge base URL (overrides the environment)");
    cmd->add_option("--model", f.model, "remote judge model name");
}

JudgeEndpoint make_endpoint(const JudgeFlags& f) {
    JudgeEndpoint ep = JudgeEndpoint::from_env();
    if (!f.url.empty()) ep.base_url = f.url;
    if (!f.model.empty()) ep.model = f.model;
    return ep;
}

int cmd_select(const PlanFlags& pf, const JudgeFlags& jf, const std::string& candidates_file,
               const std::string& constraint_arg, int k, const std::string& id,
               const std::string& out_dir) {
    Environment env;
    std::vector<Path> candidates;
    std::uint64_t seed = pf.seed;
    if (!candidates_file.empty()) {
        CandidateFile cf = read_candidates(candidates_file);
        env = load_scene(cf.scene);
        candidates = cf.paths;
        seed = cf.seed;
    } else {
        env = load_scene(pf.scene);
        candidates = plan_candidates(pf, env);
    }
    Constraint constraint = constraint_from_json(load_json_argument(constraint_arg));
    validate_constraint(constraint, env);
    std::vector<Path> reps = pick_representatives(candidates, k, seed);

    std::size_t chosen = 0;
    std::vector<std::string> names;
    std::vector<double> scores;
    RenderConfig rcfg;
    if (reps.size() > rcfg.palette.size()) {
        throw PaletteExhausted("more representatives than palette colors");
    }
    for (std::size_t i = 0; i < reps.size(); ++i) names.push_back(rcfg.palette[i].name);
    if (jf.judge == "oracle") {
        auto [best, oracle_scores] = oracle_select(reps, env, constraint);
        chosen = best;
        scores = oracle_scores;
    } else {
        SelectionResult sel = select_path(env, reps, constraint, parse_method(jf.method),
                                          make_endpoint(jf), rcfg);
        chosen = sel.chosen;
        scores.assign(reps.size(), 0.0);
        if (parse_method(jf.method) == QueryMethod::multi_image) {
            for (std::size_t i = 0; i < sel.reports.size() && i < reps.size(); ++i) {
                auto it = sel.reports[i].per_candidate_scores.find(names[i]);
                if (it != sel.reports[i].per_candidate_scores.end()) scores[i] = it->second;
            }
        } else if (!sel.reports.empty()) {
            const auto& per = sel.reports.back().per_candidate_scores;
            for (std::size_t i = 0; i < reps.size(); ++i) {
                auto it = per.find(parse_method(jf.method) == QueryMethod::gallery
                                       ? "row " + std::to_string(i + 1)
                                       : names[i]);
                if (it != per.end()) scores[i] = it->second;
            }
        }
        for (const std::string& w : sel.warnings) std::cerr << "warning: " << w << "\n";
    }

    Image img = render_trails(env, reps, rcfg);
    RenderConfig highlight = rcfg;
    highlight.dot_radius = rcfg.dot_radius + 2;
    draw_trail(img, env, reps[chosen], rcfg.palette[chosen].rgb, highlight);
    fs::create_directories(out_dir);
    std::string image_path = (fs::path(out_dir) / ("problem_" + id + "_selected.png")).string();
    write_png(img, image_path);

    std::cout << "scores:";
    for (std::size_t i = 0; i < reps.size(); ++i) {
        std::printf(" %s=%.3f", names[i].c_str(), i < scores.size() ? scores[i] : 0.0);
    }
    std::cout << "\nchosen: " << chosen << " (" << names[chosen] << ")\n"
              << "image: " << image_path << "\n";
    return kExitOk;
}

int cmd_render(const std::string& candidates_file, const std::string& method,
               const std::string& id, const std::string& out_dir) {
    CandidateFile cf = read_candidates(candidates_file);
    Environment env = load_scene(cf.scene);
    RenderConfig rcfg;
    fs::create_directories(out_dir);
    auto out_path = [&](const std::string& stem) {
        return (fs::path(out_dir) / ("problem_" + id + "_" + stem + ".png")).string();
    };
    std::vector<std::string> written;
    if (method == "multi") {
        if (cf.paths.size() > rcfg.palette.size()) {
            throw PaletteExhausted("more paths than palette colors");
        }
        for (std::size_t i = 0; i < cf.paths.size(); ++i) {
            std::string path = out_path("multi_" + std::to_string(i));
            write_png(render_single(env, cf.paths[i], rcfg.palette[i].rgb, rcfg), path);
            written.push_back(path);
        }
    } else if (method == "gallery") {
        std::string path = out_path("gallery");
        write_png(render_gallery(env, cf.paths, rcfg), path);
        written.push_back(path);
    } else {
        // single and context both look at one image with every trail overlaid
        std::string path = out_path(method);
        write_png(render_trails(env, cf.paths, rcfg), path);
        written.push_back(path);
    }
    for (const std::string& p : written) std::cout << p << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& dataset_dir, const JudgeFlags& jf, int k, int n,
             const std::vector<long>& budgets, int jobs, const std::string& out_dir) {
    std::vector<DatasetRecord> records = load_dataset(dataset_dir, static_cast<std::size_t>(k));
    if (records.empty()) throw InvariantViolation("dataset is empty: " + dataset_dir);
    EvalConfig cfg;
    cfg.planner.num_candidates = n;
    cfg.cluster.num_clusters = k;
    cfg.jobs = jobs;
    JudgeSpec spec = jf.judge == "oracle"
                         ? JudgeSpec::oracle()
                         : JudgeSpec::remote(parse_method(jf.method), make_endpoint(jf));
    fs::create_directories(out_dir);

    if (!budgets.empty()) {
        std::vector<SweepRow> rows = token_sweep(records, spec, budgets, cfg);
        std::string csv_path = (fs::path(out_dir) / "token_sweep.csv").string();
        write_text_file(csv_path, token_sweep_csv(rows));
        std::printf("%10s %10s %10s %18s %8s\n", "budget", "attempted", "accuracy",
                    "tokens-per-request", "errors");
        for (const SweepRow& r : rows) {
            char acc[16];
            if (r.accuracy) {
                std::snprintf(acc, sizeof acc, "%.2f", *r.accuracy);
            } else {
                std::snprintf(acc, sizeof acc, "-");
            }
            std::printf("%10ld %10zu %10s %18.1f %8zu\n", r.budget, r.attempted, acc,
                        r.mean_tokens_per_request, r.errors);
        }
        std::cout << "sweep -> " << csv_path << "\n";
        return kExitOk;
    }

    EvalResult result = run_eval(records, spec, cfg);
    std::string json_path = (fs::path(out_dir) / "eval_report.json").string();
    std::string csv_path = (fs::path(out_dir) / "eval_report.csv").string();
    write_text_file(json_path, eval_report_json(result));
    write_text_file(csv_path, eval_report_csv(result));

    std::printf("records   %zu\n", result.total);
    std::printf("attempted %zu\n", result.attempted);
    if (result.accuracy) {
        std::printf("accuracy %.2f\n", *result.accuracy);
    } else {
        std::printf("accuracy -\n");
    }
    if (result.total_requests > 0) {
        std::printf("tokens-per-request %.1f\n", result.mean_tokens_per_request);
    }
    for (const auto& [name, tally] : result.by_category) {
        std::printf("category %-12s %zu/%zu accuracy %.2f\n", name.c_str(), tally.correct,
                    tally.attempted,
                    tally.attempted ? static_cast<double>(tally.correct) / tally.attempted : 0.0);
    }
    for (const auto& [name, tally] : result.by_task_kind) {
        std::printf("task     %-12s %zu/%zu accuracy %.2f\n", name.c_str(), tally.correct,
                    tally.attempted,
                    tally.attempted ? static_cast<double>(tally.correct) / tally.attempted : 0.0);
    }
    for (const auto& [kind, count] : result.error_counts) {
        std::printf("error    %-20s %zu\n", kind.c_str(), count);
    }
    std::cout << "report -> " << json_path << "\n";
    return kExitOk;
}

std::atomic<bool> g_shutdown{false};

void handle_signal(int) { g_shutdown.store(true); }

int cmd_mock_judge(const std::string& host, int port, double chaos, std::uint64_t seed) {
    MockJudgeConfig cfg;
    cfg.host = host;
    cfg.port = port;
    cfg.chaos = chaos;
    cfg.seed = seed;
    MockJudge judge(cfg);
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    judge.start();
    std::cout << "mock judge listening on " << judge.url() << std::endl;

    while (!g_shutdown.load() && judge.running()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    judge.stop();
    std::cout << "mock judge stopped\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diverse path planning with vision-judge path selection"};
    app.require_subcommand(1);
    int rc = kExitOk;

    PlanFlags plan_flags;
    std::string plan_out = "candidates.json";
    CLI::App* plan = app.add_subcommand("plan", "generate candidate paths for a scene");
    add_plan_flags(plan, plan_flags, true);
    plan->add_option("--out", plan_out, "output candidate file")->capture_default_str();
    plan->callback([&] { rc = cmd_plan(plan_flags, plan_out); });

    PlanFlags select_plan_flags;
    JudgeFlags select_judge_flags;
    std::string select_candidates, select_constraint, select_id = "scene";
    std::string select_out = ".";
    int select_k = 5;
    CLI::App* select = app.add_subcommand("select", "judge representatives and pick a path");
    add_plan_flags(select, select_plan_flags, true);
    select->get_option("--scene")->required(false);
    select->get_option("--start")->required(false);
    select->get_option("--goal")->required(false);
    select->add_option("--candidates", select_candidates,
                       "candidate file from plan (replaces --scene/--start/--goal)");
    select->add_option("--constraint", select_constraint,
                       "constraint JSON (inline or a file path)")
        ->required();
    select->add_option("--k", select_k, "number of representatives")->capture_default_str();
    select->add_option("--id", select_id, "problem id used in output names")
        ->capture_default_str();
    select->add_option("--out", select_out, "output directory")->capture_default_str();
    add_judge_flags(select, select_judge_flags);
    select->callback([&] {
        if (select_candidates.empty() && select_plan_flags.scene.empty()) {
            throw CLI::RequiredError("--scene or --candidates");
        }
        rc = cmd_select(select_plan_flags, select_judge_flags, select_candidates,
                        select_constraint, select_k, select_id, select_out);
    });

    std::string render_candidates, render_method = "single", render_id = "scene";
    std::string render_out = ".";
    CLI::App* render = app.add_subcommand("render", "draw candidate paths to image files");
    render->add_option("--candidates", render_candidates, "candidate file from plan")
        ->required();
    render->add_option("--method", render_method, "layout to draw")
        ->check(CLI::IsMember({"single", "multi", "context", "gallery"}))
        ->capture_default_str();
    render->add_option("--id", render_id, "problem id used in output names")
        ->capture_default_str();
    render->add_option("--out", render_out, "output directory")->capture_default_str();
    render->callback(
        [&] { rc = cmd_render(render_candidates, render_method, render_id, render_out); });

    std::string eval_dataset, eval_out = ".";
    JudgeFlags eval_judge_flags;
    std::vector<long> eval_budgets;
    int eval_k = 5, eval_n = 50, eval_jobs = 0;
    CLI::App* eval = app.add_subcommand("eval", "run a dataset through the full pipeline");
    eval->add_option("--dataset", eval_dataset, "dataset directory with dataset.jsonl")
        ->required();
    eval->add_option("--k", eval_k, "representatives per record")->capture_default_str();
    eval->add_option("--n", eval_n, "planner runs per family; must match dataset generation")
        ->capture_default_str();
    eval->add_option("--budgets", eval_budgets,
                     "ascending token budgets; runs a sweep instead of one eval")
        ->delimiter(',');
    eval->add_option("--jobs", eval_jobs, "worker threads (0 = logical cores)")
        ->capture_default_str();
    eval->add_option("--out", eval_out, "output directory for reports")->capture_default_str();
    add_judge_flags(eval, eval_judge_flags);
    eval->callback([&] {
        rc = cmd_eval(eval_dataset, eval_judge_flags, eval_k, eval_n, eval_budgets,
                      eval_jobs, eval_out);
    });

    std::string mock_host = "127.0.0.1";
    int mock_port = 0;
    double mock_chaos = 0.0;
    std::uint64_t mock_seed = 0;
    CLI::App* mock = app.add_subcommand("mock-judge", "serve the judge wire protocol locally");
    mock->add_option("--host", mock_host, "bind address")->capture_default_str();
    mock->add_option("--port", mock_port, "port (0 = ephemeral)")->capture_default_str();
    mock->add_option("--chaos", mock_chaos, "probability of a hallucinated or malformed reply")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    mock->add_option("--seed", mock_seed, "chaos RNG seed")->capture_default_str();
    mock->callback([&] {
        try {
            rc = cmd_mock_judge(mock_host, mock_port, mock_chaos, mock_seed);
        } catch (const Error& e) {
            std::cerr << e.kind() << ": " << e.what() << "\n";
            rc = kExitData;  // bind and serve problems are data errors here
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const Error& e) {
        std::cerr << e.kind() << ": " << e.what() << "\n";
        return kJudgeErrorKinds.count(e.kind()) ? kExitJudge : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return rc;
}
