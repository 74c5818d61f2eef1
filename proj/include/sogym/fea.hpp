#pragma once

#include <array>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "sogym/geometry.hpp"
#include "sogym/problem.hpp"
#include "sogym/projection.hpp"

namespace sogym {

inline constexpr double kPoissonRatio = 0.3;
inline constexpr double kSolidThreshold = 0.5;

/// Raised when the linear system cannot be solved to the required accuracy.
class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structured grid of square bilinear elements. Node (ix, iy) has index
/// iy * (nx + 1) + ix and owns DOFs 2n (x) and 2n + 1 (y).
struct Mesh {
    int nx = 0;
    int ny = 0;
    double element_size = 1.0;

    static Mesh from(const DomainSpec& d) { return Mesh{d.nx(), d.ny(), d.element_size()}; }

    int node(int ix, int iy) const { return iy * (nx + 1) + ix; }
    int node_count() const { return (nx + 1) * (ny + 1); }
    int dof_count() const { return 2 * node_count(); }
    int element_count() const { return nx * ny; }

    /// DOFs of element (ix, iy), corners counterclockwise from lower-left.
    std::array<int, 8> element_dofs(int ix, int iy) const;
};

using ElementMatrix = Eigen::Matrix<double, 8, 8>;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Unit-modulus plane-stress stiffness of a square bilinear element with unit
/// thickness. Independent of the element size in 2D.
ElementMatrix element_stiffness(double nu = kPoissonRatio);

/// Global stiffness K = sum_e E_e k0 over all DOFs (no supports applied).
SparseMatrix assemble(const DensityField& field, const Mesh& mesh, double nu = kPoissonRatio);

struct LoadCase {
    std::vector<int> fixed_dofs;    // sorted
    Eigen::VectorXd force;
    int load_node = -1;
    std::vector<int> support_nodes;
};

/// Nodes along `b` paired with their arc position in [0, 1].
std::vector<std::pair<int, double>> boundary_nodes(const Mesh& mesh, Boundary b);

/// Throws std::invalid_argument if the support covers fewer than two nodes or
/// contains the load node.
LoadCase build_loadcase(const BoundaryProblem& p, const Mesh& mesh);

struct Displacement {
    Eigen::VectorXd u;
    double compliance = 0.0;
};

struct SolveResult {
    Eigen::VectorXd u;
    double compliance = 0.0;
    std::vector<double> strain_energy;  // per element
};

/// Solves K u = f with the listed DOFs held at zero.
Displacement solve(const SparseMatrix& K, const Eigen::VectorXd& f, std::span<const int> fixed);

/// w_e = 1/2 E_e u_e^T k0 u_e for every element.
std::vector<double> strain_energy(const DensityField& field, const Mesh& mesh, const Eigen::VectorXd& u,
                                  double nu = kPoissonRatio);

/// Reusable solver for one mesh and load case: the sparsity pattern and the
/// fill-reducing ordering are computed once, each analysis only refactors.
class StructuralSolver {
public:
    StructuralSolver(const Mesh& mesh, LoadCase load_case, double nu = kPoissonRatio);
    ~StructuralSolver();
    StructuralSolver(StructuralSolver&&) noexcept;
    StructuralSolver& operator=(StructuralSolver&&) noexcept;

    SolveResult analyze(const DensityField& field) const;

    const Mesh& mesh() const { return mesh_; }
    const LoadCase& load_case() const { return load_case_; }
    const ElementMatrix& element_matrix() const { return k0_; }

private:
    struct Impl;
    Mesh mesh_;
    LoadCase load_case_;
    ElementMatrix k0_;
    std::unique_ptr<Impl> impl_;
};

/// True iff solid elements (rho >= threshold) form a 4-connected path from an
/// element touching the load node to an element touching a support node.
bool connectivity(const DensityField& field, const LoadCase& lc, double threshold = kSolidThreshold);

}  // namespace sogym
