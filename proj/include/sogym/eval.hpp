#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sogym/environment.hpp"
#include "sogym/optimizer.hpp"

namespace sogym {

struct ProblemEntry {
    std::string id;
    BoundaryProblem problem;
};

/// Stable identifier of a problem: its seed in decimal.
std::string problem_id(const BoundaryProblem& p);

/// Problems of eval_set(seed, n) with their ids.
std::vector<ProblemEntry> problem_entries(std::uint64_t seed, int n);

struct EpisodeRecord {
    std::string problem_id;
    BoundaryProblem problem;
    std::vector<NormalizedAction> actions;
    std::optional<double> compliance;  // only when connected and analysed
    double volume = 0.0;
    bool connected = false;
    double reward = 0.0;
    double wall_seconds = 0.0;
    bool failed = false;
    std::string error;
};

/// Action source for one episode. `episode` is the index into the problem
/// list; `rng` is seeded per episode so policies stay deterministic under
/// any worker count.
using Policy = std::function<NormalizedAction(std::size_t episode, int step, const Observation& obs, Rng& rng)>;

Policy random_policy();
/// Plays back fixed action lists, one per episode; zeros past the end.
Policy replay_policy(std::vector<std::vector<NormalizedAction>> episodes);

/// One record per problem, in input order. Failures inside an episode are
/// recorded on the record. workers <= 0 means one per hardware thread.
std::vector<EpisodeRecord> rollout(const Policy& policy, std::span<const ProblemEntry> problems, const EnvConfig& cfg,
                                   std::uint64_t seed, int workers = 0);

/// Optimised design as placement actions, one per component.
std::vector<NormalizedAction> design_actions(const OptRun& run);

/// Baseline record of an optimizer run.
EpisodeRecord baseline_record(const OptRun& run, std::string id);

/// Runs optimize() on every problem across workers, results in input order.
std::vector<OptRun> optimize_all(std::span<const ProblemEntry> problems, const OptimizerConfig& cfg, int components,
                                 int workers = 0);

struct MetricsReport {
    std::optional<double> median_compliance_delta;  // %, connected pairs only
    double disconnection_rate = 0.0;                // %
    double mean_volume_delta = 0.0;                 // %, against V*
    std::size_t records = 0;
    std::size_t matched = 0;
    std::size_t connected_pairs = 0;
    std::size_t disconnected = 0;
};

/// Compares records with baseline records sharing their problem id. Throws
/// std::invalid_argument when nothing matches.
MetricsReport metrics(std::span<const EpisodeRecord> records, std::span<const EpisodeRecord> baseline);

double median(std::vector<double> v);

/// Inverse compliance recovered from a reward r = 1/ln C.
double inverse_compliance(double reward);

/// Least-squares slope of a line forced through the origin.
double through_origin_slope(std::span<const std::pair<double, double>> points);

struct LearningCurve {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (episodes, reward)
};

struct LearningRateFit {
    std::vector<double> slopes;  // one per curve
    double normaliser = 0.0;     // max inverse compliance over all curves
    std::size_t excluded = 0;    // non-positive rewards dropped
};

/// Converts rewards to inverse compliance, normalises by the largest value
/// across all curves and fits each curve through the origin.
LearningRateFit fit_learning_rates(std::span<const LearningCurve> curves);

/// Number of problems after which training cost less than optimising each
/// problem conventionally. Throws std::invalid_argument on bad inputs.
std::int64_t breakeven(double training_minutes, double baseline_minutes, double baseline_batch_size);

/// Column order of records_csv.
inline constexpr const char* kRecordCsvHeader =
    "problem_id,seed,connected,compliance,volume,v_star,volume_delta_pct,reward,wall_seconds,failed";

std::string records_csv(std::span<const EpisodeRecord> records);

}  // namespace sogym
