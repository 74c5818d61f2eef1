#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sogym/mma.hpp"
#include "sogym/problem.hpp"

namespace sogym {

inline constexpr int kDefaultComponents = 8;

enum class Phase { Mma, Gcmma };

struct IterationRecord {
    int iteration = 0;
    Phase phase = Phase::Mma;
    double compliance = 0.0;
    double volume = 0.0;
    double constraint = 0.0;  // V / V* - 1
    double max_change = 0.0;  // largest |dx| / (upper - lower)
    int inner_iterations = 0;
    bool subproblem_converged = true;
    bool connected = false;
};

struct OptRun {
    BoundaryProblem problem;
    int components = kDefaultComponents;
    OptimizerConfig config;
    std::vector<IterationRecord> history;  // entry 0 is the initial layout
    std::vector<std::vector<double>> designs;
    std::optional<int> switch_iteration;
    std::vector<double> final_design;
    int final_iteration = 0;  // history entry the final design came from
    double initial_compliance = 0.0;
    double final_compliance = 0.0;
    double final_volume = 0.0;
    bool connected = false;
    bool failed = false;
    std::string stop_reason;  // converged | max_outer | analysis_failure
    std::string error;
    double wall_seconds = 0.0;
};

/// Components on a grid of cells matched to the domain's aspect ratio, each
/// spanning its cell's diagonal with alternating orientation, thicknesses at
/// mid-range.
std::vector<double> init_layout(const BoundaryProblem& p, int n = kDefaultComponents);

/// Factor pair (columns, rows) of n closest to the width/height ratio.
std::pair<int, int> layout_grid(double width, double height, int n);

/// True when the last two steps of `objective` change sign and both are
/// relatively smaller than switch_tol.
bool detect_oscillation(std::span<const double> objective, double switch_tol = 2e-5);

/// True when the last four values alternate in direction while every other
/// value repeats to within switch_tol: a two-step cycle that makes no
/// progress however large its swing.
bool detect_cycle(std::span<const double> objective, double switch_tol = 2e-5);

/// Index of the history entry returned as the result: the lowest compliance
/// among connected iterates with |V/V* - 1| <= feasibility_tol, else among
/// connected ones with V/V* - 1 <= feasibility_tol, else among any connected
/// ones, else the last iterate.
std::size_t select_final(std::span<const IterationRecord> history, double feasibility_tol = 0.01);

/// Hybrid MMA then GCMMA compliance minimisation under V <= V*.
OptRun optimize(const BoundaryProblem& p, const OptimizerConfig& cfg = {}, int n = kDefaultComponents);

}  // namespace sogym
