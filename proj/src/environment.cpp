#include "sogym/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sogym {

std::string_view to_string(ObservationMode m) {
    switch (m) {
        case ObservationMode::Vector: return "vector";
        case ObservationMode::Image: return "image";
        case ObservationMode::TopOptGame: return "topopt_game";
    }
    return "vector";
}

std::string_view to_string(RewardMode m) {
    switch (m) {
        case RewardMode::SparseTerminal: return "sparse_terminal";
        case RewardMode::SoftVolume: return "soft_volume";
        case RewardMode::StrainUniform: return "strain_uniform";
    }
    return "sparse_terminal";
}

std::optional<ObservationMode> observation_mode_from_string(std::string_view s) {
    for (ObservationMode m : {ObservationMode::Vector, ObservationMode::Image, ObservationMode::TopOptGame}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

std::optional<RewardMode> reward_mode_from_string(std::string_view s) {
    for (RewardMode m : {RewardMode::SparseTerminal, RewardMode::SoftVolume, RewardMode::StrainUniform}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

double reward_value(const RewardConfig& cfg, double compliance, double volume, double v_star, bool connected,
                    std::span<const double> strain_energy) {
    if (cfg.require_connectivity && !connected) return 0.0;
    if (std::isnan(compliance)) return 0.0;
    const double base = compliance <= 1.0 + 1e-9 ? cfg.reward_cap : 1.0 / std::log(compliance);
    double r = base;
    switch (cfg.mode) {
        case RewardMode::SparseTerminal:
            if (volume > v_star) r = 0.0;
            break;
        case RewardMode::SoftVolume: {
            const double f = 1.0 - std::abs(volume - v_star);
            r = base * f * f;
            break;
        }
        case RewardMode::StrainUniform: {
            double factor = 1.0;
            if (!strain_energy.empty()) {
                const double n = static_cast<double>(strain_energy.size());
                const double mean = std::accumulate(strain_energy.begin(), strain_energy.end(), 0.0) / n;
                double ss = 0.0;
                for (double w : strain_energy) ss += (w - mean) * (w - mean);
                const double sigma = std::sqrt(ss / n);
                if (sigma + mean > 0.0) factor = 1.0 - sigma / (sigma + mean);
            }
            r = base * factor;
            break;
        }
    }
    if (!std::isfinite(r)) return 0.0;
    return std::clamp(r, 0.0, cfg.reward_cap);
}

Environment::Environment(EnvConfig cfg) : cfg_(cfg) {
    if (cfg_.max_components < 1) throw std::invalid_argument("max_components must be at least 1");
    if (cfg_.elements_per_unit < 1) throw std::invalid_argument("elements_per_unit must be at least 1");
    if (!(cfg_.reward.reward_cap > 0.0)) throw std::invalid_argument("reward_cap must be positive");
}

Environment::~Environment() = default;
Environment::Environment(Environment&&) noexcept = default;
Environment& Environment::operator=(Environment&&) noexcept = default;

Observation Environment::reset(std::uint64_t seed) {
    return reset(sample(seed));
}

Observation Environment::reset(const BoundaryProblem& p) {
    validate(p);
    const DomainSpec d = p.domain(cfg_.elements_per_unit);
    const Mesh mesh = Mesh::from(d);
    // Built before the state changes so a bad load case leaves the
    // previous episode intact.
    auto solver = std::make_unique<StructuralSolver>(mesh, build_loadcase(p, mesh));

    state_ = EpisodeState{};
    state_.problem = p;
    state_.t_max = cfg_.max_components;
    state_.phi = NodalField(mesh.nx, mesh.ny, kEmptyLevelSet);
    solver_ = std::move(solver);
    started_ = true;
    refresh(false);
    return observe();
}

StepResult Environment::step(const NormalizedAction& action) {
    if (!started_) throw std::logic_error("step before reset");
    if (state_.done) throw EpisodeDone();
    NormalizedAction a = action;
    for (double& v : a) {
        if (!std::isfinite(v)) throw std::invalid_argument("action entries must be finite");
        v = std::clamp(v, -1.0, 1.0);
    }
    const DomainSpec d = state_.problem.domain(cfg_.elements_per_unit);
    const MmcComponent c = scale_action(a, d);
    const NodalField grid = tdf_grid(c, d);
    for (std::size_t n = 0; n < grid.values.size(); ++n) {
        state_.phi.values[n] = std::max(state_.phi.values[n], grid.values[n]);
    }
    state_.placed.push_back(c);
    state_.actions.push_back(a);
    ++state_.t;
    state_.done = state_.t >= state_.t_max;
    refresh(state_.done);

    StepResult out;
    out.reward = state_.reward;
    out.done = state_.done;
    out.observation = observe();
    return out;
}

void Environment::refresh(bool terminal) {
    EpisodeState& s = state_;
    s.density = project_density(s.phi, cfg_.projection);
    s.connected = s.t > 0 && connectivity(s.density, solver_->load_case());
    s.analysis.reset();

    const bool game = cfg_.observation == ObservationMode::TopOptGame;
    const bool gated = cfg_.reward.require_connectivity && !s.connected;
    double value = 0.0;
    if ((terminal || game) && s.t > 0 && !gated) {
        try {
            s.analysis = solver_->analyze(s.density);
            value = reward_value(cfg_.reward, s.analysis->compliance, s.volume(), s.problem.volume_fraction,
                                 s.connected, s.analysis->strain_energy);
        } catch (const AnalysisError&) {
            s.analysis_failed = true;
            value = 0.0;
        }
    }
    s.score = value;
    s.reward = terminal ? value : 0.0;
}

Observation Environment::observe() const {
    if (!started_) throw std::logic_error("observe before reset");
    const EpisodeState& s = state_;
    Observation o;
    o.beta = encode_beta(s.problem);
    o.steps_left = static_cast<double>(s.t_max - s.t) / s.t_max;
    o.design_variables.assign(kVariablesPerComponent * static_cast<std::size_t>(s.t_max), 0.0);
    for (std::size_t k = 0; k < s.actions.size(); ++k) {
        std::copy(s.actions[k].begin(), s.actions[k].end(), o.design_variables.begin() + kVariablesPerComponent * k);
    }
    o.volume = s.volume();
    if (cfg_.observation != ObservationMode::Vector) o.design_image = render_design_image(s.problem, s.placed);
    if (cfg_.observation == ObservationMode::TopOptGame) {
        o.strain_image = s.analysis ? render_strain_image(s.problem, s.density, s.analysis->strain_energy, s.connected)
                                    : Raster{};
        o.score = s.score;
    }
    return o;
}

}  // namespace sogym
