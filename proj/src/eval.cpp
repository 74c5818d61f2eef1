#include "sogym/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sogym/design.hpp"

namespace sogym {

std::string problem_id(const BoundaryProblem& p) {
    return std::to_string(p.seed);
}

std::vector<ProblemEntry> problem_entries(std::uint64_t seed, int n) {
    std::vector<ProblemEntry> out;
    for (const BoundaryProblem& p : eval_set(seed, n)) out.push_back({problem_id(p), p});
    return out;
}

Policy random_policy() {
    return [](std::size_t, int, const Observation&, Rng& rng) {
        NormalizedAction a;
        for (double& v : a) v = rng.uniform(-1.0, 1.0);
        return a;
    };
}

Policy replay_policy(std::vector<std::vector<NormalizedAction>> episodes) {
    return [episodes = std::move(episodes)](std::size_t episode, int step, const Observation&, Rng&) {
        NormalizedAction a{};
        if (episode < episodes.size() && static_cast<std::size_t>(step) < episodes[episode].size()) {
            a = episodes[episode][static_cast<std::size_t>(step)];
        }
        return a;
    };
}

namespace {

int resolve_workers(int workers, std::size_t jobs) {
    if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), std::max<std::size_t>(jobs, 1)));
}

// Runs job(i) for every i in [0, n) on a bounded pool; each index is
// claimed by exactly one worker.
template <class Job>
void parallel_for(std::size_t n, int workers, Job&& job) {
    const int w = resolve_workers(workers, n);
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int k = 0; k < w; ++k) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) job(i);
        });
    }
    for (std::thread& t : pool) t.join();
}

EpisodeRecord run_episode(const Policy& policy, const ProblemEntry& entry, const EnvConfig& cfg, std::size_t index,
                          std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    EpisodeRecord rec;
    rec.problem_id = entry.id;
    rec.problem = entry.problem;
    try {
        Environment env(cfg);
        Rng rng(mix_seed(seed, index));
        Observation obs = env.reset(entry.problem);
        bool done = false;
        while (!done) {
            const NormalizedAction a = policy(index, env.state().t, obs, rng);
            StepResult r = env.step(a);
            obs = std::move(r.observation);
            done = r.done;
        }
        const EpisodeState& s = env.state();
        rec.actions = s.actions;
        rec.volume = s.volume();
        rec.connected = s.connected;
        rec.reward = s.reward;
        if (s.connected && s.analysis) rec.compliance = s.analysis->compliance;
        if (s.analysis_failed) {
            rec.failed = true;
            rec.error = "analysis failure";
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace

std::vector<EpisodeRecord> rollout(const Policy& policy, std::span<const ProblemEntry> problems, const EnvConfig& cfg,
                                   std::uint64_t seed, int workers) {
    std::vector<EpisodeRecord> out(problems.size());
    parallel_for(problems.size(), workers,
                 [&](std::size_t i) { out[i] = run_episode(policy, problems[i], cfg, i, seed); });
    return out;
}

std::vector<NormalizedAction> design_actions(const OptRun& run) {
    const DomainSpec d = run.problem.domain();
    std::vector<NormalizedAction> out;
    for (const MmcComponent& c : unpack_design(run.final_design)) out.push_back(normalize_component(c, d));
    return out;
}

EpisodeRecord baseline_record(const OptRun& run, std::string id) {
    EpisodeRecord rec;
    rec.problem_id = std::move(id);
    rec.problem = run.problem;
    rec.actions = design_actions(run);
    rec.volume = run.final_volume;
    rec.connected = run.connected && !run.failed;
    if (rec.connected) rec.compliance = run.final_compliance;
    rec.reward = rec.connected ? reward_value(RewardConfig{}, run.final_compliance, run.final_volume,
                                              run.problem.volume_fraction, true)
                               : 0.0;
    rec.wall_seconds = run.wall_seconds;
    rec.failed = run.failed;
    rec.error = run.error;
    return rec;
}

std::vector<OptRun> optimize_all(std::span<const ProblemEntry> problems, const OptimizerConfig& cfg, int components,
                                 int workers) {
    std::vector<OptRun> out(problems.size());
    parallel_for(problems.size(), workers,
                 [&](std::size_t i) { out[i] = optimize(problems[i].problem, cfg, components); });
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

MetricsReport metrics(std::span<const EpisodeRecord> records, std::span<const EpisodeRecord> baseline) {
    std::map<std::string, const EpisodeRecord*> base;
    for (const EpisodeRecord& b : baseline) base.emplace(b.problem_id, &b);

    MetricsReport rep;
    rep.records = records.size();
    std::vector<double> deltas;
    std::vector<double> volume_deltas;
    for (const EpisodeRecord& r : records) {
        const auto it = base.find(r.problem_id);
        if (it == base.end()) continue;
        ++rep.matched;
        if (!r.connected) ++rep.disconnected;
        volume_deltas.push_back(100.0 * (r.volume - r.problem.volume_fraction) / r.problem.volume_fraction);
        const EpisodeRecord& b = *it->second;
        if (r.connected && r.compliance && b.connected && b.compliance) {
            deltas.push_back(100.0 * (*r.compliance - *b.compliance) / *b.compliance);
        }
    }
    if (rep.matched == 0) throw std::invalid_argument("metrics: no records match the baseline problem ids");
    rep.connected_pairs = deltas.size();
    if (!deltas.empty()) rep.median_compliance_delta = median(std::move(deltas));
    rep.disconnection_rate = 100.0 * static_cast<double>(rep.disconnected) / static_cast<double>(rep.matched);
    double sum = 0.0;
    for (double v : volume_deltas) sum += v;
    rep.mean_volume_delta = sum / static_cast<double>(volume_deltas.size());
    return rep;
}

double inverse_compliance(double reward) {
    return std::exp(-1.0 / reward);
}

double through_origin_slope(std::span<const std::pair<double, double>> points) {
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : points) {
        sxy += x * y;
        sxx += x * x;
    }
    if (sxx == 0.0) throw std::invalid_argument("through_origin_slope: need a point with x != 0");
    return sxy / sxx;
}

LearningRateFit fit_learning_rates(std::span<const LearningCurve> curves) {
    LearningRateFit fit;
    std::vector<std::vector<std::pair<double, double>>> converted(curves.size());
    for (std::size_t k = 0; k < curves.size(); ++k) {
        for (const auto& [x, r] : curves[k].points) {
            if (!(r > 0.0)) {
                ++fit.excluded;
                continue;
            }
            const double ic = inverse_compliance(r);
            converted[k].push_back({x, ic});
            fit.normaliser = std::max(fit.normaliser, ic);
        }
    }
    if (fit.normaliser <= 0.0) throw std::invalid_argument("fit_learning_rates: no positive rewards");
    for (auto& pts : converted) {
        for (auto& p : pts) p.second /= fit.normaliser;
        fit.slopes.push_back(pts.empty() ? std::nan("") : through_origin_slope(pts));
    }
    return fit;
}

std::int64_t breakeven(double training_minutes, double baseline_minutes, double baseline_batch_size) {
    if (!(training_minutes >= 0.0) || !(baseline_minutes > 0.0) || !(baseline_batch_size > 0.0)) {
        throw std::invalid_argument("breakeven: training must be >= 0, baseline time and batch size > 0");
    }
    const long double ratio = static_cast<long double>(training_minutes) * baseline_batch_size / baseline_minutes;
    // Inputs like 17.792 are not exact in binary; a ratio within rounding of
    // an integer is that integer.
    const long double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-12L * std::max(1.0L, nearest)) return static_cast<std::int64_t>(nearest);
    return static_cast<std::int64_t>(std::ceil(ratio));
}

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string records_csv(std::span<const EpisodeRecord> records) {
    std::ostringstream out;
    out << kRecordCsvHeader << '\n';
    for (const EpisodeRecord& r : records) {
        const double v_star = r.problem.volume_fraction;
        out << r.problem_id << ',' << r.problem.seed << ',' << (r.connected ? 1 : 0) << ',';
        if (r.compliance) out << shortest(*r.compliance);
        out << ',' << shortest(r.volume) << ',' << shortest(v_star) << ',' << shortest(100.0 * (r.volume - v_star) / v_star)
            << ',' << shortest(r.reward) << ',' << shortest(r.wall_seconds) << ',' << (r.failed ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace sogym
