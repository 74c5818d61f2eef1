#pragma once

#include <functional>

#include <Eigen/Core>

namespace sogym {

/// Parameters shared by MMA and GCMMA plus the hybrid driver's own settings.
struct OptimizerConfig {
    double epsimin = 1e-10;
    double raa0 = 0.01;
    double albefa = 0.4;
    double asyinit = 0.05;
    double asyincr = 0.8;
    double asydecr = 0.6;
    double c = 1000.0;
    double d = 1.0;
    double a0 = 1.0;
    double a = 0.0;
    int maxinnerit = 2;
    double move = 1.0;
    double switch_tol = 2e-5;
    int max_outer = 1000;
    // Stop once the largest normalised design change stays below
    // stall_change for stall_iterations consecutive iterations.
    double stall_change = 1e-4;
    int stall_iterations = 5;
    // The objective is divided by max_j |dC/dx_j| * (upper_j - lower_j) at the
    // initial design, times this factor, so the largest first-order change
    // over a full variable range is about objective_scale.
    double objective_scale = 3.0;
    // Relative volume band |V/V* - 1| a design must sit in to be preferred
    // as the final result.
    double feasibility_tol = 0.01;
};

/// Function values and gradients at one design: objective f0 and m
/// constraints g_i <= 0.
struct Response {
    double f0 = 0.0;
    Eigen::VectorXd df0;
    Eigen::VectorXd g;
    Eigen::MatrixXd dg;  // m x n
};

using Evaluator = std::function<Response(const Eigen::VectorXd&)>;

/// Iterate history and asymptotes carried between outer iterations.
struct MmaState {
    MmaState(Eigen::VectorXd x0, Eigen::VectorXd lower, Eigen::VectorXd upper, int m);

    Eigen::VectorXd x, xold1, xold2;
    Eigen::VectorXd xmin, xmax;
    Eigen::VectorXd low, upp;
    int m = 1;
    int iter = 0;  // outer iterations started so far
    double raa0 = 0.0;
    Eigen::VectorXd raa;
};

/// Convex separable subproblem in Svanberg's form.
struct Subproblem {
    Eigen::VectorXd low, upp, alfa, beta;
    Eigen::VectorXd p0, q0;
    Eigen::MatrixXd P, Q;
    Eigen::VectorXd b;
    double r0 = 0.0;    // GCMMA only: constant part of the objective approximation
    Eigen::VectorXd r;  // GCMMA only
};

struct SubproblemSolution {
    Eigen::VectorXd x, y, lam;
    double z = 0.0;
    bool converged = false;
    double residual = 0.0;  // max-norm KKT residual of the last barrier level
    int newton_steps = 0;
};

/// Primal-dual interior point solve of the subproblem down to epsimin.
SubproblemSolution solve_subproblem(const Subproblem& sp, const OptimizerConfig& cfg);

struct StepInfo {
    bool converged = true;  // subsolver reached epsimin (possibly on the retry)
    bool retried = false;
    bool rejected = false;  // both attempts failed; the design did not move
    int inner_iterations = 0;
    bool conservative = true;
};

/// One MMA outer iteration from the response at state.x. Advances state.
StepInfo mma_step(MmaState& state, const OptimizerConfig& cfg, const Response& r);

/// One GCMMA outer iteration: the approximation is tightened for at most
/// cfg.maxinnerit inner iterations and the last inner iterate is accepted.
/// On return `current` holds the response at the new state.x.
StepInfo gcmma_step(MmaState& state, const OptimizerConfig& cfg, Response& current, const Evaluator& eval);

}  // namespace sogym
