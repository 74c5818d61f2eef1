#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "sogym/fea.hpp"
#include "sogym/geometry.hpp"
#include "sogym/problem.hpp"
#include "sogym/projection.hpp"
#include "sogym/raster.hpp"

namespace sogym {

enum class ObservationMode { Vector, Image, TopOptGame };
enum class RewardMode { SparseTerminal, SoftVolume, StrainUniform };

std::string_view to_string(ObservationMode m);
std::string_view to_string(RewardMode m);
std::optional<ObservationMode> observation_mode_from_string(std::string_view s);
std::optional<RewardMode> reward_mode_from_string(std::string_view s);

struct RewardConfig {
    RewardMode mode = RewardMode::SparseTerminal;
    bool require_connectivity = true;
    double reward_cap = 10.0;
};

inline constexpr int kDefaultMaxComponents = 8;

struct EnvConfig {
    ObservationMode observation = ObservationMode::Vector;
    RewardConfig reward;
    int max_components = kDefaultMaxComponents;
    int elements_per_unit = 50;
    ProjectionParams projection;
};

/// 1/ln(C) shaped by the active mode, clamped to [0, cap]. Compliance at or
/// below 1 + 1e-9 earns the cap. Disconnected designs earn 0 unless the
/// config waives connectivity.
double reward_value(const RewardConfig& cfg, double compliance, double volume, double v_star, bool connected,
                    std::span<const double> strain_energy = {});

struct Observation {
    BetaVector beta{};
    double steps_left = 1.0;
    std::vector<double> design_variables;  // 6 * t_max, zero for empty slots
    double volume = 0.0;
    std::optional<Raster> design_image;  // Image and TopOptGame
    std::optional<Raster> strain_image;  // TopOptGame
    std::optional<double> score;         // TopOptGame

    bool operator==(const Observation&) const = default;
};

struct EpisodeState {
    BoundaryProblem problem;
    std::vector<MmcComponent> placed;
    std::vector<NormalizedAction> actions;  // as applied, clamped to [-1, 1]
    int t = 0;
    int t_max = kDefaultMaxComponents;
    NodalField phi;  // union of the placed components
    DensityField density;
    bool connected = false;
    std::optional<SolveResult> analysis;  // latest FEA, when one was run
    bool analysis_failed = false;
    double score = 0.0;
    double reward = 0.0;  // reward of the latest step
    bool done = false;

    double volume() const { return volume_fraction(density); }
    std::optional<double> compliance() const {
        return analysis ? std::optional<double>(analysis->compliance) : std::nullopt;
    }
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool done = false;
};

/// Raised by step() once the episode is over.
class EpisodeDone : public std::logic_error {
public:
    EpisodeDone() : std::logic_error("episode is done; call reset") {}
};

/// Sequential component placement on one boundary problem at a time.
class Environment {
public:
    explicit Environment(EnvConfig cfg = {});
    ~Environment();
    Environment(Environment&&) noexcept;
    Environment& operator=(Environment&&) noexcept;

    Observation reset(std::uint64_t seed);
    /// Throws std::invalid_argument for problems outside the sampling ranges.
    Observation reset(const BoundaryProblem& p);

    /// Throws EpisodeDone after the last step, std::invalid_argument on
    /// non-finite actions and std::logic_error before the first reset.
    StepResult step(const NormalizedAction& action);

    Observation observe() const;
    const EpisodeState& state() const { return state_; }
    const EnvConfig& config() const { return cfg_; }

private:
    void refresh(bool terminal);

    EnvConfig cfg_;
    EpisodeState state_;
    bool started_ = false;
    std::unique_ptr<StructuralSolver> solver_;
};

}  // namespace sogym
