#pragma once

#include <span>
#include <vector>

#include "sogym/design.hpp"
#include "sogym/fea.hpp"
#include "sogym/problem.hpp"

namespace sogym {

/// Step of the central difference used for the TDF's own derivatives.
inline constexpr double kGeometryStep = 1e-6;

struct ComplianceEvaluation {
    double compliance = 0.0;
    double volume = 0.0;
    std::vector<double> dc;  // dC/dx, empty when gradients were not requested
    std::vector<double> dv;
    bool connected = false;
    DensityField density;
    SolveResult analysis;
};

/// Compliance and volume of flat design vectors on one problem. Holds the
/// factorization pattern, so repeated evaluations only pay for the solve.
class ComplianceModel {
public:
    explicit ComplianceModel(const BoundaryProblem& p, int elements_per_unit = 50, ProjectionParams params = {});

    /// Throws AnalysisError when the linear solve fails.
    ComplianceEvaluation evaluate(std::span<const double> x, bool with_gradients = true) const;

    const DomainSpec& domain() const { return domain_; }
    const Mesh& mesh() const { return solver_.mesh(); }
    const LoadCase& load_case() const { return solver_.load_case(); }
    const ProjectionParams& params() const { return params_; }

private:
    DomainSpec domain_;
    ProjectionParams params_;
    StructuralSolver solver_;
};

/// One-shot convenience wrapper around ComplianceModel.
ComplianceEvaluation objective_and_gradients(std::span<const double> x, const BoundaryProblem& p);

}  // namespace sogym
