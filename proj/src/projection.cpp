#include "sogym/projection.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace sogym {

double heaviside(double phi, const ProjectionParams& p) {
    const double eps = p.epsilon;
    if (phi > eps) return 1.0;
    if (phi < -eps) return p.alpha;
    const double r = phi / eps;
    const double h = 0.75 * (1.0 - p.alpha) * (r - r * r * r / 3.0) + 0.5 * (1.0 + p.alpha);
    return std::clamp(h, p.alpha, 1.0);
}

double heaviside_derivative(double phi, const ProjectionParams& p) {
    const double eps = p.epsilon;
    if (phi > eps || phi < -eps) return 0.0;
    return 0.75 * (1.0 - p.alpha) * (1.0 / eps - phi * phi / (eps * eps * eps));
}

NodalField combine_levelsets(std::span<const NodalField> fields, int nx, int ny,
                             std::vector<int>& argmax) {
    NodalField out(nx, ny, kEmptyLevelSet);
    argmax.assign(out.node_count(), -1);
    for (std::size_t k = 0; k < fields.size(); ++k) {
        const NodalField& f = fields[k];
        if (f.nx != nx || f.ny != ny || f.values.size() != out.values.size()) {
            throw std::invalid_argument("combine_levelsets: shape mismatch");
        }
        for (std::size_t n = 0; n < out.values.size(); ++n) {
            if (argmax[n] < 0 || f.values[n] > out.values[n]) {
                out.values[n] = f.values[n];
                argmax[n] = static_cast<int>(k);
            }
        }
    }
    return out;
}

NodalField combine_levelsets(std::span<const NodalField> fields, int nx, int ny) {
    std::vector<int> unused;
    return combine_levelsets(fields, nx, ny, unused);
}

DensityField project_density(const NodalField& phi, const ProjectionParams& p) {
    std::vector<double> h(phi.values.size());
    for (std::size_t n = 0; n < h.size(); ++n) h[n] = heaviside(phi.values[n], p);

    const int nx = phi.nx;
    const int ny = phi.ny;
    std::vector<double> rho(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            rho[static_cast<std::size_t>(iy) * nx + ix] =
                0.25 * (h[phi.index(ix, iy)] + h[phi.index(ix + 1, iy)] +
                        h[phi.index(ix + 1, iy + 1)] + h[phi.index(ix, iy + 1)]);
        }
    }
    return make_density_field(nx, ny, std::move(rho), p.youngs);
}

double volume_fraction(const DensityField& f) {
    if (f.rho.empty()) return 0.0;
    return std::accumulate(f.rho.begin(), f.rho.end(), 0.0) / static_cast<double>(f.rho.size());
}

DensityField make_density_field(int nx, int ny, std::vector<double> rho, double youngs) {
    if (rho.size() != static_cast<std::size_t>(nx) * ny) {
        throw std::invalid_argument("density field size does not match mesh dims");
    }
    DensityField f;
    f.nx = nx;
    f.ny = ny;
    f.modulus.resize(rho.size());
    for (std::size_t e = 0; e < rho.size(); ++e) f.modulus[e] = rho[e] * youngs;
    f.rho = std::move(rho);
    return f;
}

}  // namespace sogym
