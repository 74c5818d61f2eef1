#include "sogym/sensitivity.hpp"

#include <array>
#include <cmath>

namespace sogym {

ComplianceModel::ComplianceModel(const BoundaryProblem& p, int elements_per_unit, ProjectionParams params)
    : domain_(p.domain(elements_per_unit)),
      params_(params),
      solver_(Mesh::from(domain_), build_loadcase(p, Mesh::from(domain_))) {}

ComplianceEvaluation ComplianceModel::evaluate(std::span<const double> x, bool with_gradients) const {
    const std::vector<MmcComponent> comps = unpack_design(x);
    DesignField design = evaluate_design(comps, domain_, params_);

    ComplianceEvaluation out;
    out.analysis = solver_.analyze(design.density);
    out.compliance = out.analysis.compliance;
    out.volume = volume_fraction(design.density);
    out.connected = connectivity(design.density, load_case());
    if (with_gradients) {
        const Mesh& m = mesh();
        const int stride = m.nx + 1;
        const ElementMatrix& k0 = solver_.element_matrix();
        const double cell = 0.25 / static_cast<double>(m.element_count());

        // Nodal weights: a quarter of each incident element's dC/drho and
        // dV/drho.
        std::vector<double> gc(static_cast<std::size_t>(m.node_count()), 0.0);
        std::vector<double> gv(gc.size(), 0.0);
        Eigen::Matrix<double, 8, 1> ue;
        for (int iy = 0; iy < m.ny; ++iy) {
            for (int ix = 0; ix < m.nx; ++ix) {
                const auto dofs = m.element_dofs(ix, iy);
                for (int a = 0; a < 8; ++a) ue[a] = out.analysis.u[dofs[a]];
                const double s = -0.25 * params_.youngs * ue.dot(k0 * ue);
                for (int n : {m.node(ix, iy), m.node(ix + 1, iy), m.node(ix + 1, iy + 1), m.node(ix, iy + 1)}) {
                    gc[static_cast<std::size_t>(n)] += s;
                    gv[static_cast<std::size_t>(n)] += cell;
                }
            }
        }

        out.dc.assign(x.size(), 0.0);
        out.dv.assign(x.size(), 0.0);
        const double h = domain_.element_size();
        for (std::size_t k = 0; k < comps.size(); ++k) {
            std::array<TdfEvaluator, 12> perturbed = [&] {
                auto make = [&](std::size_t j, double sign) {
                    auto v = to_array(comps[k]);
                    v[j] += sign * kGeometryStep;
                    return TdfEvaluator(from_array(v.data()));
                };
                return std::array<TdfEvaluator, 12>{make(0, 1), make(0, -1), make(1, 1), make(1, -1),
                                                    make(2, 1), make(2, -1), make(3, 1), make(3, -1),
                                                    make(4, 1), make(4, -1), make(5, 1), make(5, -1)};
            }();
            for (std::size_t n = 0; n < design.phi.values.size(); ++n) {
                if (design.owner[n] != static_cast<int>(k)) continue;
                const double hp = heaviside_derivative(design.phi.values[n], params_);
                if (hp == 0.0) continue;
                const double px = static_cast<double>(static_cast<int>(n) % stride) * h;
                const double py = static_cast<double>(static_cast<int>(n) / stride) * h;
                for (std::size_t j = 0; j < kVariablesPerComponent; ++j) {
                    const double dphi =
                        (perturbed[2 * j](px, py) - perturbed[2 * j + 1](px, py)) / (2.0 * kGeometryStep);
                    out.dc[k * kVariablesPerComponent + j] += gc[n] * hp * dphi;
                    out.dv[k * kVariablesPerComponent + j] += gv[n] * hp * dphi;
                }
            }
        }
    }
    out.density = std::move(design.density);
    return out;
}

ComplianceEvaluation objective_and_gradients(std::span<const double> x, const BoundaryProblem& p) {
    return ComplianceModel(p).evaluate(x);
}

}  // namespace sogym
