#include "sogym/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "sogym/design.hpp"
#include "sogym/sensitivity.hpp"

namespace sogym {

std::pair<int, int> layout_grid(double width, double height, int n) {
    const double target = std::log(width / height);
    std::pair<int, int> best{n, 1};
    double best_err = INFINITY;
    for (int cols = n; cols >= 1; --cols) {
        if (n % cols != 0) continue;
        const double err = std::abs(std::log(static_cast<double>(cols) / (n / cols)) - target);
        if (err < best_err - 1e-12) {
            best_err = err;
            best = {cols, n / cols};
        }
    }
    return best;
}

namespace {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

// Domain coordinates of fraction s along boundary b, matching the load and
// support parameterisation of build_loadcase.
Point2 boundary_point(const BoundaryProblem& p, Boundary b, double s) {
    switch (b) {
        case Boundary::Left: return {0.0, s * p.height};
        case Boundary::Right: return {p.width, s * p.height};
        case Boundary::Top: return {s * p.width, p.height};
        case Boundary::Bottom: return {s * p.width, 0.0};
    }
    return {};
}

double dist2(Point2 a, Point2 b) {
    return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
}

// Moves one endpoint of the component whose centre is nearest `target` onto
// it. The endpoint shared with more lattice neighbours stays put so the
// anchored bar keeps its junction.
void anchor(std::vector<MmcComponent>& comps, std::vector<char>& used, Point2 target, Point2 centre) {
    const double tol = 1e-9;
    auto degree = [&](double x, double y) {
        int n = 0;
        for (const MmcComponent& c : comps) {
            n += dist2({c.xa, c.ya}, {x, y}) < tol;
            n += dist2({c.xb, c.yb}, {x, y}) < tol;
        }
        return n;
    };
    std::size_t best = comps.size();
    for (std::size_t k = 0; k < comps.size(); ++k) {
        if (used[k]) continue;
        const Point2 mid{0.5 * (comps[k].xa + comps[k].xb), 0.5 * (comps[k].ya + comps[k].yb)};
        if (best == comps.size() || dist2(mid, target) < dist2({0.5 * (comps[best].xa + comps[best].xb),
                                                                  0.5 * (comps[best].ya + comps[best].yb)},
                                                                 target) - tol) {
            best = k;
        }
    }
    if (best == comps.size()) return;
    MmcComponent& c = comps[best];
    const int da = degree(c.xa, c.ya);
    const int db = degree(c.xb, c.yb);
    const bool keep_a = da > db || (da == db && dist2({c.xa, c.ya}, centre) <= dist2({c.xb, c.yb}, centre));
    if (keep_a) {
        c.xb = target.x;
        c.yb = target.y;
    } else {
        c.xa = target.x;
        c.ya = target.y;
    }
    used[best] = 1;
}

}  // namespace

std::vector<double> init_layout(const BoundaryProblem& p, int n) {
    if (n < 1) throw std::invalid_argument("init_layout: need at least one component");
    const auto [cols, rows] = layout_grid(p.width, p.height, n);
    const VariableBounds b = design_bounds(p.domain());
    const double ta = 0.5 * (b.lower[4] + b.upper[4]);
    const double tb = 0.5 * (b.lower[5] + b.upper[5]);
    const double cw = p.width / cols;
    const double ch = p.height / rows;

    std::vector<MmcComponent> comps;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double x0 = c * cw;
            const double x1 = (c + 1) * cw;
            const double y0 = r * ch;
            const double y1 = (r + 1) * ch;
            if ((r + c) % 2 == 0) comps.push_back({x0, y0, x1, y1, ta, tb});
            else comps.push_back({x0, y1, x1, y0, ta, tb});
        }
    }

    // A lattice of diagonals only touches the boundary at cell corners, so a
    // point load or short support segment in between would leave the start
    // disconnected and the gradients void of information.
    const Point2 load = boundary_point(p, p.load_boundary, p.load_position);
    const Point2 support = boundary_point(p, p.support_boundary, p.support_position + 0.5 * p.support_length);
    const Point2 centre{0.5 * p.width, 0.5 * p.height};
    if (n == 1) {
        comps[0] = {load.x, load.y, support.x, support.y, ta, tb};
    } else {
        std::vector<char> used(comps.size(), 0);
        anchor(comps, used, load, centre);
        anchor(comps, used, support, centre);
    }
    return pack_design(comps);
}

bool detect_oscillation(std::span<const double> f, double switch_tol) {
    if (f.size() < 3) return false;
    const std::size_t k = f.size() - 1;
    const double d1 = f[k - 1] - f[k - 2];
    const double d2 = f[k] - f[k - 1];
    if (!(d1 * d2 < 0.0)) return false;
    return std::abs(d1) < switch_tol * std::abs(f[k - 2]) && std::abs(d2) < switch_tol * std::abs(f[k - 1]);
}

bool detect_cycle(std::span<const double> f, double switch_tol) {
    if (f.size() < 4) return false;
    const std::size_t k = f.size() - 1;
    const double d1 = f[k - 2] - f[k - 3];
    const double d2 = f[k - 1] - f[k - 2];
    const double d3 = f[k] - f[k - 1];
    if (!(d1 * d2 < 0.0) || !(d2 * d3 < 0.0)) return false;
    return std::abs(f[k] - f[k - 2]) <= switch_tol * std::abs(f[k]) &&
           std::abs(f[k - 1] - f[k - 3]) <= switch_tol * std::abs(f[k - 1]);
}

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

std::size_t select_final(std::span<const IterationRecord> history, double feasibility_tol) {
    if (history.empty()) throw std::invalid_argument("select_final: empty history");
    // Tiers in order of preference; the lowest compliance wins within a tier.
    auto tier = [&](const IterationRecord& h) {
        if (!h.connected || !std::isfinite(h.compliance)) return 3;
        if (std::abs(h.constraint) <= feasibility_tol) return 0;
        if (h.constraint <= feasibility_tol) return 1;
        return 2;
    };
    std::size_t best = history.size() - 1;
    int best_tier = tier(history[best]);
    if (best_tier == 3) best_tier = 4;  // the last iterate is only a fallback
    for (std::size_t k = 0; k < history.size(); ++k) {
        const int t = tier(history[k]);
        if (t == 3) continue;
        if (t < best_tier || (t == best_tier && history[k].compliance < history[best].compliance)) {
            best = k;
            best_tier = t;
        }
    }
    return best;
}

OptRun optimize(const BoundaryProblem& p, const OptimizerConfig& cfg, int n) {
    const auto t0 = std::chrono::steady_clock::now();
    OptRun run;
    run.problem = p;
    run.components = n;
    run.config = cfg;

    const ComplianceModel model(p);
    std::vector<double> lower, upper;
    design_vector_bounds(model.domain(), n, lower, upper);
    const Eigen::VectorXd span = to_vector(upper) - to_vector(lower);

    ComplianceEvaluation last;
    double scale = 1.0;
    auto evaluate = [&](const Eigen::VectorXd& x) {
        last = model.evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
        Response r;
        r.f0 = last.compliance / scale;
        r.df0 = to_vector(last.dc) / scale;
        r.g = Eigen::VectorXd::Constant(1, last.volume / p.volume_fraction - 1.0);
        r.dg = to_vector(last.dv).transpose() / p.volume_fraction;
        return r;
    };
    auto record = [&](int it, Phase phase, double change, const StepInfo& info, const Eigen::VectorXd& x) {
        IterationRecord rec;
        rec.iteration = it;
        rec.phase = phase;
        rec.compliance = last.compliance;
        rec.volume = last.volume;
        rec.constraint = last.volume / p.volume_fraction - 1.0;
        rec.max_change = change;
        rec.inner_iterations = info.inner_iterations;
        rec.subproblem_converged = info.converged;
        rec.connected = last.connected;
        run.history.push_back(rec);
        run.designs.push_back(to_std(x));
    };

    MmaState state(to_vector(init_layout(p, n)), to_vector(lower), to_vector(upper), 1);
    std::vector<double> objective;
    try {
        Response current = evaluate(state.x);
        run.initial_compliance = last.compliance;
        if (last.compliance > 0.0 && std::isfinite(last.compliance)) {
            scale = last.compliance;
            double g = 0.0;
            for (std::size_t j = 0; j < last.dc.size(); ++j) {
                g = std::max(g, std::abs(last.dc[j]) * span[static_cast<Eigen::Index>(j)]);
            }
            if (g > 0.0 && std::isfinite(g) && cfg.objective_scale > 0.0) scale = g / cfg.objective_scale;
            current = evaluate(state.x);
        }
        record(0, Phase::Mma, 0.0, StepInfo{}, state.x);
        objective.push_back(current.f0);

        Phase phase = Phase::Mma;
        int stalled = 0;
        run.stop_reason = "max_outer";
        for (int it = 1; it <= cfg.max_outer; ++it) {
            StepInfo info;
            if (phase == Phase::Mma) {
                info = mma_step(state, cfg, current);
                current = evaluate(state.x);
            } else {
                info = gcmma_step(state, cfg, current, evaluate);
            }
            const double change = ((state.x - state.xold1).cwiseAbs().array() / span.array()).maxCoeff();
            record(it, phase, change, info, state.x);
            objective.push_back(current.f0);

            if (phase == Phase::Mma &&
                (detect_oscillation(objective, cfg.switch_tol) || detect_cycle(objective, cfg.switch_tol))) {
                phase = Phase::Gcmma;
                run.switch_iteration = it;
            }
            stalled = change < cfg.stall_change ? stalled + 1 : 0;
            if (stalled >= cfg.stall_iterations) {
                run.stop_reason = "converged";
                break;
            }
        }
    } catch (const AnalysisError& e) {
        run.failed = true;
        run.stop_reason = "analysis_failure";
        run.error = e.what();
    }

    if (!run.history.empty()) {
        const std::size_t k = select_final(run.history, cfg.feasibility_tol);
        run.final_iteration = static_cast<int>(k);
        run.final_design = run.designs[k];
        run.final_compliance = run.history[k].compliance;
        run.final_volume = run.history[k].volume;
        run.connected = run.history[k].connected;
    } else {
        run.final_design = to_std(state.x);
    }
    run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

}  // namespace sogym
