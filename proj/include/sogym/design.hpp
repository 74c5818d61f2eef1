#pragma once

#include <span>
#include <vector>

#include "sogym/geometry.hpp"
#include "sogym/projection.hpp"

namespace sogym {

/// Projected state of a set of components on one mesh.
struct DesignField {
    std::vector<NodalField> components;  // per-component TDF on the nodes
    NodalField phi;                      // union
    std::vector<int> owner;              // maximising component per node, -1 when empty
    DensityField density;
};

DesignField evaluate_design(std::span<const MmcComponent> components, const DomainSpec& domain,
                            const ProjectionParams& params = {});

/// Flat design vector, six entries per component in action order.
std::vector<double> pack_design(std::span<const MmcComponent> components);
std::vector<MmcComponent> unpack_design(std::span<const double> x);

/// Box bounds of a flat design vector with n components.
void design_vector_bounds(const DomainSpec& domain, int n, std::vector<double>& lower, std::vector<double>& upper);

}  // namespace sogym
