#include "doctest.h"

#include <cmath>

#include "sogym/mma.hpp"
#include "sogym/optimizer.hpp"

using namespace sogym;
using Eigen::VectorXd;

namespace {

// min (x - 1)^2 on [0, 2] with an inactive constraint g = -1.
Response parabola(const VectorXd& x) {
    Response r;
    r.f0 = (x[0] - 1.0) * (x[0] - 1.0);
    r.df0 = VectorXd::Constant(1, 2.0 * (x[0] - 1.0));
    r.g = VectorXd::Constant(1, -1.0);
    r.dg = Eigen::MatrixXd::Zero(1, 1);
    return r;
}

MmaState parabola_state(double x0) {
    return MmaState(VectorXd::Constant(1, x0), VectorXd::Zero(1), VectorXd::Constant(1, 2.0), 1);
}

}  // namespace

TEST_CASE("default parameters") {
    const OptimizerConfig cfg;
    CHECK(cfg.epsimin == 1e-10);
    CHECK(cfg.raa0 == 0.01);
    CHECK(cfg.albefa == 0.4);
    CHECK(cfg.asyinit == 0.05);
    CHECK(cfg.asyincr == 0.8);
    CHECK(cfg.asydecr == 0.6);
    CHECK(cfg.c == 1000.0);
    CHECK(cfg.d == 1.0);
    CHECK(cfg.a0 == 1.0);
    CHECK(cfg.a == 0.0);
    CHECK(cfg.maxinnerit == 2);
    CHECK(cfg.move == 1.0);
    CHECK(cfg.switch_tol == 2e-5);
    CHECK(cfg.max_outer == 1000);
}

TEST_CASE("first iteration asymptotes sit asyinit spans from x") {
    const OptimizerConfig cfg;
    MmaState s(VectorXd::Constant(2, 0.3), VectorXd::Zero(2), VectorXd::Constant(2, 4.0), 1);
    Response r = parabola(VectorXd::Constant(1, 0.3));
    r.df0 = VectorXd::Constant(2, 1.0);
    r.dg = Eigen::MatrixXd::Zero(1, 2);
    mma_step(s, cfg, r);
    CHECK(s.low[0] == doctest::Approx(0.3 - 0.05 * 4.0).epsilon(1e-15));
    CHECK(s.upp[1] == doctest::Approx(0.3 + 0.05 * 4.0).epsilon(1e-15));
}

TEST_CASE("MMA homes in on a one-variable parabola") {
    // With these defaults the asymptotes settle at 0.01 of the range on
    // either side and raa0 / range makes the model curvature 1, half the true
    // curvature 2. The iteration then overshoots by almost exactly its own
    // error and only the higher-order terms damp it, so 1e-6 is out of reach
    // in 50 steps; 1e-4 is not.
    const OptimizerConfig cfg;
    MmaState s = parabola_state(0.9);
    double err = 0.0;
    int side_changes = 0;
    double previous = s.x[0] - 1.0;
    for (int k = 0; k < 50; ++k) {
        const StepInfo info = mma_step(s, cfg, parabola(s.x));
        CHECK(info.converged);
        err = s.x[0] - 1.0;
        if (err * previous < 0.0) ++side_changes;
        previous = err;
    }
    CHECK(std::abs(err) <= 1e-4);
    CHECK(side_changes >= 40);
}

TEST_CASE("iterates respect the box") {
    const OptimizerConfig cfg;
    MmaState s = parabola_state(0.0);
    for (int k = 0; k < 30; ++k) {
        mma_step(s, cfg, parabola(s.x));
        CHECK(s.x[0] >= 0.0);
        CHECK(s.x[0] <= 2.0);
    }
}

TEST_CASE("subproblem solutions satisfy their own constraint") {
    // min sum x subject to 1 - x0 - x1 <= 0: the linearised constraint is
    // active at the subproblem optimum.
    const OptimizerConfig cfg;
    MmaState s(VectorXd::Constant(2, 0.8), VectorXd::Zero(2), VectorXd::Constant(2, 1.0), 1);
    for (int k = 0; k < 10; ++k) {
        Response r;
        r.f0 = s.x.sum();
        r.df0 = VectorXd::Ones(2);
        r.g = VectorXd::Constant(1, 1.0 - s.x.sum());
        r.dg = -Eigen::MatrixXd::Ones(1, 2);
        const StepInfo info = mma_step(s, cfg, r);
        CHECK(info.converged);
        // The constraint is linear, so its MMA approximation is exact at
        // the new point up to the elastic slack.
        CHECK(1.0 - s.x.sum() <= 1e-6);
    }
}

TEST_CASE("GCMMA on a conservative problem takes no inner iterations") {
    // A linear objective is over-approximated by the convex MMA model, so
    // the first inner solution is already conservative.
    const OptimizerConfig cfg;
    auto linear = [](const VectorXd& x) {
        Response r;
        r.f0 = 2.0 - x[0];
        r.df0 = VectorXd::Constant(1, -1.0);
        r.g = VectorXd::Constant(1, -1.0);
        r.dg = Eigen::MatrixXd::Zero(1, 1);
        return r;
    };
    MmaState s = parabola_state(0.5);
    Response current = linear(s.x);
    const StepInfo info = gcmma_step(s, cfg, current, linear);
    CHECK(info.conservative);
    CHECK(info.inner_iterations == 0);
    CHECK(current.f0 == linear(s.x).f0);
}

TEST_CASE("GCMMA inner iterations are capped and conservative steps never raise the objective") {
    const OptimizerConfig cfg;
    // Steep quartic: the first model underestimates it, forcing inner
    // iterations.
    auto quartic = [](const VectorXd& x) {
        Response r;
        const double d = x[0] - 1.0;
        r.f0 = 50.0 * d * d * d * d + d * d;
        r.df0 = VectorXd::Constant(1, 200.0 * d * d * d + 2.0 * d);
        r.g = VectorXd::Constant(1, -1.0);
        r.dg = Eigen::MatrixXd::Zero(1, 1);
        return r;
    };
    MmaState s = parabola_state(0.8);
    Response current = quartic(s.x);
    const double start = current.f0;
    int inner_total = 0;
    for (int k = 0; k < 40; ++k) {
        const double previous = current.f0;
        const StepInfo info = gcmma_step(s, cfg, current, quartic);
        CHECK(info.inner_iterations <= cfg.maxinnerit);
        inner_total += info.inner_iterations;
        // A conservative model bounds the new value from above and equals
        // the old value at the old point.
        if (info.conservative) CHECK(current.f0 <= previous + cfg.epsimin);
    }
    CHECK(inner_total > 0);
    CHECK(current.f0 < 1e-5 * start);
}

TEST_CASE("GCMMA decreases a convex objective with its optimum on the bound") {
    // min (x - 3)^2 on [0, 2]: every step moves towards the bound.
    const OptimizerConfig cfg;
    auto f = [](const VectorXd& x) {
        Response r;
        r.f0 = (x[0] - 3.0) * (x[0] - 3.0);
        r.df0 = VectorXd::Constant(1, 2.0 * (x[0] - 3.0));
        r.g = VectorXd::Constant(1, -1.0);
        r.dg = Eigen::MatrixXd::Zero(1, 1);
        return r;
    };
    MmaState s = parabola_state(1.5);
    Response current = f(s.x);
    for (int k = 0; k < 60; ++k) {
        const double previous = current.f0;
        gcmma_step(s, cfg, current, f);
        CHECK(current.f0 <= previous);
    }
    CHECK(s.x[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("oscillation detection") {
    const std::vector<double> monotone{3.0, 2.0, 1.0, 0.5};
    CHECK_FALSE(detect_oscillation(monotone));
    const std::vector<double> small{1.0, 1.0 + 1e-6, 1.0 - 1e-6};
    CHECK(detect_oscillation(small));
    const std::vector<double> large{1.0, 1.1, 1.0};
    CHECK_FALSE(detect_oscillation(large));
    const std::vector<double> short_history{1.0, 1.0 + 1e-6};
    CHECK_FALSE(detect_oscillation(short_history));
    // Same sign twice is not an oscillation however small.
    const std::vector<double> creeping{1.0, 1.0 - 1e-7, 1.0 - 2e-7};
    CHECK_FALSE(detect_oscillation(creeping));
}
