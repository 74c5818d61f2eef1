#pragma once

#include <span>
#include <vector>

#include "sogym/geometry.hpp"

namespace sogym {

struct ProjectionParams {
    double epsilon = 1e-2;  // half-width of the smoothed band
    double alpha = 1e-9;    // void density floor
    double youngs = 1.0;    // solid modulus
};

/// Elemental densities on the nx x ny mesh (element index iy * nx + ix) and
/// the matching ersatz moduli.
struct DensityField {
    int nx = 0;
    int ny = 0;
    std::vector<double> rho;
    std::vector<double> modulus;

    std::size_t element_count() const { return rho.size(); }
    std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx + ix; }
};

/// Level-set value used for "no component", low enough to project to void.
inline constexpr double kEmptyLevelSet = -1e9;

double heaviside(double phi, const ProjectionParams& p);
double heaviside_derivative(double phi, const ProjectionParams& p);

/// Union of components as the pointwise maximum. With no inputs the result is
/// an (nx+1) x (ny+1) field of kEmptyLevelSet. Throws std::invalid_argument on
/// shape mismatch.
NodalField combine_levelsets(std::span<const NodalField> fields, int nx, int ny);

/// Same as combine_levelsets and additionally records, per node, the index of
/// the maximising component (lowest index on ties, -1 when empty).
NodalField combine_levelsets(std::span<const NodalField> fields, int nx, int ny,
                             std::vector<int>& argmax);

DensityField project_density(const NodalField& phi, const ProjectionParams& p);

/// Mean elemental density.
double volume_fraction(const DensityField& f);

/// Builds a density field from explicit densities (moduli rho * E).
DensityField make_density_field(int nx, int ny, std::vector<double> rho, double youngs = 1.0);

}  // namespace sogym
