#include "sogym/design.hpp"

#include <stdexcept>

namespace sogym {

DesignField evaluate_design(std::span<const MmcComponent> components, const DomainSpec& domain,
                            const ProjectionParams& params) {
    DesignField out;
    out.components.reserve(components.size());
    for (const MmcComponent& c : components) out.components.push_back(tdf_grid(c, domain));
    out.phi = combine_levelsets(out.components, domain.nx(), domain.ny(), out.owner);
    out.density = project_density(out.phi, params);
    return out;
}

std::vector<double> pack_design(std::span<const MmcComponent> components) {
    std::vector<double> x;
    x.reserve(components.size() * kVariablesPerComponent);
    for (const MmcComponent& c : components) {
        const auto v = to_array(c);
        x.insert(x.end(), v.begin(), v.end());
    }
    return x;
}

std::vector<MmcComponent> unpack_design(std::span<const double> x) {
    if (x.size() % kVariablesPerComponent != 0) {
        throw std::invalid_argument("design vector length is not a multiple of 6");
    }
    std::vector<MmcComponent> out;
    out.reserve(x.size() / kVariablesPerComponent);
    for (std::size_t i = 0; i < x.size(); i += kVariablesPerComponent) out.push_back(from_array(x.data() + i));
    return out;
}

void design_vector_bounds(const DomainSpec& domain, int n, std::vector<double>& lower, std::vector<double>& upper) {
    const VariableBounds b = design_bounds(domain);
    lower.clear();
    upper.clear();
    for (int k = 0; k < n; ++k) {
        lower.insert(lower.end(), b.lower.begin(), b.lower.end());
        upper.insert(upper.end(), b.upper.begin(), b.upper.end());
    }
}

}  // namespace sogym
