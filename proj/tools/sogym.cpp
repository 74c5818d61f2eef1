// Command-line front end: sample, optimize, rollout, evaluate, render, serve,
// selftest. Exit 0 on success, 1 on user error, 2 on internal failure; errors
// go to stderr as one JSON object.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "criteria.hpp"
#include "sogym/design.hpp"
#include "sogym/eval.hpp"
#include "sogym/io.hpp"
#include "sogym/service.hpp"

// After the sogym headers: httplib pulls in <resolv.h>, whose _res macro
// breaks Eigen.
#include "httplib.h"

namespace fs = std::filesystem;
using namespace sogym;

namespace {

// Bad flags, unreadable or malformed inputs.
struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int fail(const char* kind, const std::string& message, int code) {
    std::cerr << json{{"error", {{"type", kind}, {"message", message}}}}.dump() << "\n";
    return code;
}

int default_workers() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

fs::path default_data_dir() {
    const char* env = std::getenv("SOGYM_DATA_DIR");
    return env && *env ? fs::path(env) : fs::path("sogym-data");
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UserError("cannot write " + path.string());
    out << text;
}

// Prints to stdout when no path is given.
void emit(const std::string& path, const json& j) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << "\n";
    } else {
        write_json_file(path, j);
    }
}

struct EnvOptions {
    std::string mode = "vector";
    std::string reward = "sparse_terminal";
    int t_max = kDefaultMaxComponents;
    int elements_per_unit = 50;
    bool ungated = false;

    void add(CLI::App* app) {
        app->add_option("--mode", mode, "observation mode: vector | image | topopt_game");
        app->add_option("--reward", reward, "reward mode: sparse_terminal | soft_volume | strain_uniform");
        app->add_option("--t-max", t_max, "components per episode")->check(CLI::PositiveNumber);
        app->add_option("--elements-per-unit", elements_per_unit, "mesh elements per unit length")
            ->check(CLI::PositiveNumber);
        app->add_flag("--ungated", ungated, "score disconnected designs instead of returning 0");
    }

    EnvConfig config() const {
        EnvConfig cfg;
        const auto m = observation_mode_from_string(mode);
        if (!m) throw UserError("unknown observation mode '" + mode + "'");
        const auto r = reward_mode_from_string(reward);
        if (!r) throw UserError("unknown reward mode '" + reward + "'");
        cfg.observation = *m;
        cfg.reward.mode = *r;
        cfg.reward.require_connectivity = !ungated;
        cfg.max_components = t_max;
        cfg.elements_per_unit = elements_per_unit;
        return cfg;
    }
};

void add_optimizer_options(CLI::App* app, OptimizerConfig& c, int& components) {
    app->add_option("--components", components, "components in the optimised layout")->check(CLI::PositiveNumber);
    app->add_option("--max-outer", c.max_outer, "outer iteration cap")->check(CLI::NonNegativeNumber);
    app->add_option("--maxinnerit", c.maxinnerit, "GCMMA inner iterations per outer step");
    app->add_option("--epsimin", c.epsimin, "subproblem tolerance");
    app->add_option("--raa0", c.raa0, "GCMMA initial curvature");
    app->add_option("--albefa", c.albefa, "move bound factor towards the asymptotes");
    app->add_option("--asyinit", c.asyinit, "initial asymptote distance");
    app->add_option("--asyincr", c.asyincr, "asymptote expansion factor");
    app->add_option("--asydecr", c.asydecr, "asymptote contraction factor");
    app->add_option("--c", c.c, "constraint violation weight");
    app->add_option("--d", c.d, "quadratic violation weight");
    app->add_option("--a0", c.a0, "a0 of the MMA subproblem");
    app->add_option("--a", c.a, "a_i of the MMA subproblem");
    app->add_option("--move", c.move, "move limit as a fraction of the variable range");
    app->add_option("--switch-tol", c.switch_tol, "objective oscillation that triggers GCMMA");
    app->add_option("--stall-change", c.stall_change, "design change counted as a stall");
    app->add_option("--stall-iterations", c.stall_iterations, "consecutive stalls that stop the run");
    app->add_option("--objective-scale", c.objective_scale, "first-order objective change over a full range");
    app->add_option("--feasibility-tol", c.feasibility_tol, "volume band for the final design");
}

std::vector<ProblemEntry> load_problems(const std::string& path, std::uint64_t seed, int n) {
    if (path.empty()) return problem_entries(seed, n);
    if (!fs::exists(path)) throw UserError("no such file: " + path);
    return read_problems(path);
}

// Action lists from records (objects with "actions") or bare arrays, one per line.
std::vector<std::vector<NormalizedAction>> load_action_lists(const std::string& path) {
    if (!fs::exists(path)) throw UserError("no such file: " + path);
    std::vector<std::vector<NormalizedAction>> out;
    for (const json& j : read_json_lines(path)) {
        const json& list = j.is_object() ? j.at("actions") : j;
        if (!list.is_array()) throw UserError(path + ": each line needs an action array");
        std::vector<NormalizedAction> actions;
        for (const json& a : list) actions.push_back(action_from_json(a));
        out.push_back(std::move(actions));
    }
    return out;
}

int run_selftest() {
    using namespace acceptance;
    const std::vector<Verdict> verdicts{heaviside_exactness(),     tdf_invariants(2000), fea_oracle(100),
                                        gradient_check(2),         breakeven_reproduction(), learning_rate_fit(),
                                        environment_determinism(3), beta_round_trip(1000), connectivity_oracle(1000)};
    int failed = 0;
    for (const Verdict& v : verdicts) {
        std::printf("%s  %-24s %s\n", v.passed ? "PASS" : "FAIL", v.name.c_str(), v.detail.c_str());
        failed += v.passed ? 0 : 1;
    }
    std::fflush(stdout);
    if (failed > 0) return fail("selftest", std::to_string(failed) + " check(s) failed", 2);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sogym: structural design environment, optimizer baseline and evaluation"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every subcommand");

    // sample
    std::uint64_t sample_seed = kEvalSetSeed;
    int sample_n = 10;
    std::string sample_out = "problems";
    auto* sample_cmd = app.add_subcommand("sample", "write sampled problems, one JSON file each");
    sample_cmd->add_option("--seed", sample_seed, "base seed of the problem set");
    sample_cmd->add_option("--n", sample_n, "number of problems")->check(CLI::NonNegativeNumber);
    sample_cmd->add_option("--out", sample_out, "output directory");

    // optimize
    std::string opt_problem, opt_out, opt_baseline;
    OptimizerConfig opt_cfg;
    int opt_components = kDefaultComponents;
    int opt_workers = default_workers();
    auto* opt_cmd = app.add_subcommand("optimize", "run the MMA/GCMMA baseline on problems");
    opt_cmd->add_option("--problem", opt_problem, "problem file (.json object or array, or .jsonl)")->required();
    opt_cmd->add_option("--out", opt_out, "optimizer run JSON (array for several problems); - for stdout");
    opt_cmd->add_option("--baseline-out", opt_baseline, "also write baseline episode records (.jsonl)");
    opt_cmd->add_option("--workers", opt_workers, "worker threads")->check(CLI::PositiveNumber);
    add_optimizer_options(opt_cmd, opt_cfg, opt_components);

    // rollout
    std::string ro_problems, ro_policy = "random", ro_replay, ro_out = "records.jsonl", ro_csv;
    std::uint64_t ro_problem_seed = kEvalSetSeed, ro_seed = 1;
    int ro_n = 100;
    int ro_workers = default_workers();
    EnvOptions ro_env;
    auto* ro_cmd = app.add_subcommand("rollout", "play a policy on problems and write episode records");
    ro_cmd->add_option("--problems", ro_problems, "problem file; sampled from --problem-seed and --n when empty");
    ro_cmd->add_option("--problem-seed", ro_problem_seed, "base seed of the sampled problem set");
    ro_cmd->add_option("--n", ro_n, "number of sampled problems")->check(CLI::NonNegativeNumber);
    ro_cmd->add_option("--policy", ro_policy, "random | replay")->check(CLI::IsMember({"random", "replay"}));
    ro_cmd->add_option("--replay", ro_replay, "action lists for --policy replay: records or arrays, one per line");
    ro_cmd->add_option("--seed", ro_seed, "policy seed");
    ro_cmd->add_option("--workers", ro_workers, "worker threads")->check(CLI::PositiveNumber);
    ro_cmd->add_option("--out", ro_out, "episode records (.jsonl)");
    ro_cmd->add_option("--csv", ro_csv, "also write the records as CSV");
    ro_env.add(ro_cmd);

    // evaluate
    std::string ev_records, ev_baseline, ev_out, ev_csv, ev_curves;
    std::vector<double> ev_breakeven;
    int ev_workers = default_workers();
    auto* ev_cmd = app.add_subcommand("evaluate", "compare episode records with baseline records");
    ev_cmd->add_option("--records", ev_records, "episode records (.jsonl)");
    ev_cmd->add_option("--baseline", ev_baseline, "baseline records (.jsonl)");
    ev_cmd->add_option("--out", ev_out, "metrics JSON; - for stdout");
    ev_cmd->add_option("--csv", ev_csv, "also write --records as CSV");
    ev_cmd->add_option("--breakeven", ev_breakeven,
                       "training minutes, baseline minutes, baseline batch size")
        ->expected(3);
    ev_cmd->add_option("--curves", ev_curves, "learning curves JSON: [{label, points: [[episodes, reward]]}]");
    ev_cmd->add_option("--workers", ev_workers, "accepted for symmetry; aggregation is single-threaded")
        ->check(CLI::PositiveNumber);

    // render
    std::string rd_problem, rd_actions, rd_run, rd_out = "render";
    int rd_index = 0;
    auto* rd_cmd = app.add_subcommand("render", "write design and strain PNGs of a placement sequence");
    rd_cmd->add_option("--problem", rd_problem, "problem file, used with --actions");
    rd_cmd->add_option("--actions", rd_actions, "action lists: records or arrays, one per line");
    rd_cmd->add_option("--index", rd_index, "which line of --actions to render")->check(CLI::NonNegativeNumber);
    rd_cmd->add_option("--run", rd_run, "optimizer run JSON; renders its final design");
    rd_cmd->add_option("--out", rd_out, "output directory");

    // serve
    std::string sv_host = "127.0.0.1", sv_data = default_data_dir().string(), sv_cors = "*";
    int sv_port = 8080;
    std::size_t sv_max = 256;
    double sv_ttl = 3600.0;
    EnvOptions sv_env;
    auto* sv_cmd = app.add_subcommand("serve", "start the HTTP session service");
    sv_cmd->add_option("--host", sv_host, "bind address");
    sv_cmd->add_option("--port", sv_port, "port; 0 picks a free one")->check(CLI::Range(0, 65535));
    sv_cmd->add_option("--data-dir", sv_data, "leaderboard and episode store (default from SOGYM_DATA_DIR)");
    sv_cmd->add_option("--max-sessions", sv_max, "live session capacity")->check(CLI::PositiveNumber);
    sv_cmd->add_option("--ttl", sv_ttl, "idle session lifetime in seconds")->check(CLI::PositiveNumber);
    sv_cmd->add_option("--cors-origin", sv_cors, "Access-Control-Allow-Origin value");
    sv_env.add(sv_cmd);

    auto* st_cmd = app.add_subcommand("selftest", "run the oracle checks and print pass/fail");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail("usage", e.what(), 1);
    }

    try {
        if (*sample_cmd) {
            const fs::path dir = sample_out;
            fs::create_directories(dir);
            json written = json::array();
            const auto entries = problem_entries(sample_seed, sample_n);
            for (std::size_t i = 0; i < entries.size(); ++i) {
                char name[64];
                std::snprintf(name, sizeof name, "problem_%03zu.json", i);
                write_json_file(dir / name, problem_to_json(entries[i].problem));
                written.push_back((dir / name).string());
            }
            std::cout << json{{"written", written}}.dump() << "\n";
        } else if (*opt_cmd) {
            const auto entries = load_problems(opt_problem, 0, 0);
            if (entries.empty()) throw UserError(opt_problem + " holds no problems");
            const auto runs = optimize_all(entries, opt_cfg, opt_components, opt_workers);
            json out = json::array();
            std::vector<EpisodeRecord> baseline;
            for (std::size_t i = 0; i < runs.size(); ++i) {
                out.push_back(optrun_to_json(runs[i]));
                baseline.push_back(baseline_record(runs[i], entries[i].id));
            }
            emit(opt_out, runs.size() == 1 ? out[0] : out);
            if (!opt_baseline.empty()) write_records(opt_baseline, baseline);
        } else if (*ro_cmd) {
            const EnvConfig cfg = ro_env.config();
            const auto entries = load_problems(ro_problems, ro_problem_seed, ro_n);
            Policy policy = random_policy();
            if (ro_policy == "replay") {
                if (ro_replay.empty()) throw UserError("--policy replay needs --replay");
                policy = replay_policy(load_action_lists(ro_replay));
            }
            const auto records = rollout(policy, entries, cfg, ro_seed, ro_workers);
            write_records(ro_out, records);
            if (!ro_csv.empty()) write_text(ro_csv, records_csv(records));
        } else if (*ev_cmd) {
            json out = json::object();
            if (!ev_records.empty() || !ev_baseline.empty()) {
                if (ev_records.empty() || ev_baseline.empty()) throw UserError("--records and --baseline go together");
                for (const auto& p : {ev_records, ev_baseline}) {
                    if (!fs::exists(p)) throw UserError("no such file: " + p);
                }
                const auto records = read_records(ev_records);
                out = metrics_to_json(metrics(records, read_records(ev_baseline)));
                if (!ev_csv.empty()) write_text(ev_csv, records_csv(records));
            }
            if (!ev_breakeven.empty()) {
                out["breakeven_problems"] = breakeven(ev_breakeven[0], ev_breakeven[1], ev_breakeven[2]);
            }
            if (!ev_curves.empty()) {
                if (!fs::exists(ev_curves)) throw UserError("no such file: " + ev_curves);
                std::vector<LearningCurve> curves;
                for (const json& c : read_json_file(ev_curves)) {
                    LearningCurve lc;
                    lc.label = c.at("label").get<std::string>();
                    for (const json& p : c.at("points")) lc.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
                    curves.push_back(std::move(lc));
                }
                const LearningRateFit fit = fit_learning_rates(curves);
                json slopes = json::object();
                for (std::size_t i = 0; i < curves.size(); ++i) slopes[curves[i].label] = fit.slopes[i];
                out["learning_rate"] = {{"slopes", slopes}, {"normaliser", fit.normaliser}, {"excluded", fit.excluded}};
            }
            if (out.empty()) throw UserError("nothing to evaluate: give --records/--baseline, --breakeven or --curves");
            emit(ev_out, out);
        } else if (*rd_cmd) {
            BoundaryProblem problem;
            std::vector<NormalizedAction> actions;
            if (!rd_run.empty()) {
                if (!fs::exists(rd_run)) throw UserError("no such file: " + rd_run);
                const json run = read_json_file(rd_run);
                problem = problem_from_json(run.at("problem"));
                const auto design = run.at("final_design").get<std::vector<double>>();
                for (const MmcComponent& c : unpack_design(design)) actions.push_back(normalize_component(c, problem.domain()));
            } else {
                if (rd_problem.empty() || rd_actions.empty()) throw UserError("give --run, or --problem with --actions");
                const auto entries = load_problems(rd_problem, 0, 0);
                if (entries.size() != 1) throw UserError(rd_problem + " must hold exactly one problem");
                problem = entries[0].problem;
                const auto lists = load_action_lists(rd_actions);
                if (static_cast<std::size_t>(rd_index) >= lists.size()) throw UserError("--index past the end of --actions");
                actions = lists[static_cast<std::size_t>(rd_index)];
            }
            if (actions.empty()) throw UserError("no actions to render");
            EnvConfig cfg;
            cfg.observation = ObservationMode::TopOptGame;
            cfg.max_components = static_cast<int>(actions.size());
            Environment env(cfg);
            env.reset(problem);
            for (const NormalizedAction& a : actions) env.step(a);
            const Observation o = env.observe();
            const fs::path dir = rd_out;
            write_text(dir / "design.png", encode_png(*o.design_image));
            write_text(dir / "strain.png", encode_png(*o.strain_image));
            std::cout << json{{"design", (dir / "design.png").string()},
                              {"strain", (dir / "strain.png").string()},
                              {"connected", env.state().connected},
                              {"score", env.state().score}}
                             .dump()
                      << "\n";
        } else if (*sv_cmd) {
            ServiceConfig cfg;
            cfg.data_dir = sv_data;
            cfg.max_sessions = sv_max;
            cfg.ttl = std::chrono::milliseconds(static_cast<long long>(sv_ttl * 1000.0));
            cfg.cors_origin = sv_cors;
            cfg.env = sv_env.config();
            SessionService service(cfg);
            const auto bad = service.audit();
            httplib::Server server;
            mount_routes(server, service);
            const int port = sv_port == 0 ? server.bind_to_any_port(sv_host) : (server.bind_to_port(sv_host, sv_port) ? sv_port : -1);
            if (port < 0) throw UserError("cannot bind " + sv_host + ":" + std::to_string(sv_port));
            std::cout << json{{"listening", "http://" + sv_host + ":" + std::to_string(port)},
                              {"data_dir", sv_data},
                              {"audit_failures", bad}}
                             .dump()
                      << std::endl;
            if (!server.listen_after_bind()) throw std::runtime_error("server stopped unexpectedly");
        } else if (*st_cmd) {
            return run_selftest();
        }
    } catch (const UserError& e) {
        return fail("user", e.what(), 1);
    } catch (const std::invalid_argument& e) {
        return fail("user", e.what(), 1);
    } catch (const json::exception& e) {
        return fail("user", e.what(), 1);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 2);
    }
    return 0;
}
