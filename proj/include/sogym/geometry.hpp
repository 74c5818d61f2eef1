#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace sogym {

/// Rectangular design domain and its structured-mesh resolution.
struct DomainSpec {
    double width = 1.0;
    double height = 1.0;
    int elements_per_unit = 50;

    int nx() const;
    int ny() const;
    double element_size() const { return 1.0 / elements_per_unit; }
};

/// One morphable bar: endpoints A, B and the thickness at each endpoint.
struct MmcComponent {
    double xa = 0.0;
    double ya = 0.0;
    double xb = 0.0;
    double yb = 0.0;
    double ta = 0.0;
    double tb = 0.0;

    bool operator==(const MmcComponent&) const = default;
};

/// Centroid, length and orientation derived from the endpoints.
struct ComponentFrame {
    double x0 = 0.0;
    double y0 = 0.0;
    double length = 0.0;
    double theta = 0.0;
};

inline constexpr std::size_t kVariablesPerComponent = 6;

/// Agent action: (xA, yA, xB, yB, tA, tB) in [-1, 1].
using NormalizedAction = std::array<double, kVariablesPerComponent>;

inline constexpr double kMinComponentLength = 1e-6;
inline constexpr double kMinThickness = 1e-9;

struct VariableBounds {
    std::array<double, kVariablesPerComponent> lower{};
    std::array<double, kVariablesPerComponent> upper{};
};

/// Box bounds of one component's design variables on `domain`.
VariableBounds design_bounds(const DomainSpec& domain);

MmcComponent scale_action(const NormalizedAction& action, const DomainSpec& domain);

/// Inverse of scale_action (components outside the bounds map outside [-1, 1]).
NormalizedAction normalize_component(const MmcComponent& c, const DomainSpec& domain);

ComponentFrame component_frame(const MmcComponent& c);

/// Topology description function: positive inside the bar, 1 at its centroid.
double tdf(const MmcComponent& c, double x, double y);

/// Evaluates one component's TDF repeatedly with the frame trigonometry hoisted.
class TdfEvaluator {
public:
    explicit TdfEvaluator(const MmcComponent& c);
    double operator()(double x, double y) const;
    const ComponentFrame& frame() const { return frame_; }

private:
    MmcComponent c_;
    ComponentFrame frame_;
    double cos_ = 1.0;
    double sin_ = 0.0;
};

/// Node-centred scalar field on the (nx+1) x (ny+1) mesh nodes; ix runs fastest.
struct NodalField {
    int nx = 0;
    int ny = 0;
    std::vector<double> values;

    NodalField() = default;
    NodalField(int nx_, int ny_, double fill = 0.0)
        : nx(nx_), ny(ny_), values(static_cast<std::size_t>(nx_ + 1) * (ny_ + 1), fill) {}

    std::size_t index(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * (nx + 1) + ix;
    }
    double& at(int ix, int iy) { return values[index(ix, iy)]; }
    double at(int ix, int iy) const { return values[index(ix, iy)]; }
    std::size_t node_count() const { return values.size(); }
};

NodalField tdf_grid(const MmcComponent& c, const DomainSpec& domain);

std::array<double, kVariablesPerComponent> to_array(const MmcComponent& c);
MmcComponent from_array(const double* v);

}  // namespace sogym
