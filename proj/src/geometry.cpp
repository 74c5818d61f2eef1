#include "sogym/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sogym {

int DomainSpec::nx() const {
    return static_cast<int>(std::lround(width * elements_per_unit));
}

int DomainSpec::ny() const {
    return static_cast<int>(std::lround(height * elements_per_unit));
}

VariableBounds design_bounds(const DomainSpec& domain) {
    const double t_max = 0.05 * std::min(domain.width, domain.height);
    VariableBounds b;
    b.lower = {0.0, 0.0, 0.0, 0.0, 0.01, 0.01};
    b.upper = {domain.width, domain.height, domain.width, domain.height, t_max, t_max};
    return b;
}

MmcComponent scale_action(const NormalizedAction& action, const DomainSpec& domain) {
    const VariableBounds b = design_bounds(domain);
    std::array<double, kVariablesPerComponent> v{};
    for (std::size_t i = 0; i < kVariablesPerComponent; ++i) {
        const double a = std::clamp(action[i], -1.0, 1.0);
        v[i] = b.lower[i] + (a + 1.0) * 0.5 * (b.upper[i] - b.lower[i]);
    }
    return from_array(v.data());
}

NormalizedAction normalize_component(const MmcComponent& c, const DomainSpec& domain) {
    const VariableBounds b = design_bounds(domain);
    const auto v = to_array(c);
    NormalizedAction a{};
    for (std::size_t i = 0; i < kVariablesPerComponent; ++i) {
        a[i] = 2.0 * (v[i] - b.lower[i]) / (b.upper[i] - b.lower[i]) - 1.0;
    }
    return a;
}

ComponentFrame component_frame(const MmcComponent& c) {
    ComponentFrame f;
    f.x0 = 0.5 * (c.xa + c.xb);
    f.y0 = 0.5 * (c.ya + c.yb);
    const double dx = c.xb - c.xa;
    const double dy = c.yb - c.ya;
    f.length = std::hypot(dx, dy);
    if (f.length < kMinComponentLength) {
        f.length = kMinComponentLength;
        f.theta = 0.0;
        return f;
    }
    f.theta = std::atan2(dy, dx);
    if (f.theta <= -std::numbers::pi) f.theta = std::numbers::pi;
    return f;
}

TdfEvaluator::TdfEvaluator(const MmcComponent& c)
    : c_(c), frame_(component_frame(c)), cos_(std::cos(frame_.theta)), sin_(std::sin(frame_.theta)) {}

double TdfEvaluator::operator()(double x, double y) const {
    const double dx = x - frame_.x0;
    const double dy = y - frame_.y0;
    const double x1 = cos_ * dx + sin_ * dy;
    const double y1 = -sin_ * dx + cos_ * dy;
    double t = 0.5 * (c_.ta + c_.tb) + (c_.tb - c_.ta) / (2.0 * frame_.length) * x1;
    t = std::max(t, kMinThickness);
    const double u = x1 / frame_.length;
    const double v = y1 / t;
    const double u2 = u * u;
    const double v2 = v * v;
    const double s = u2 * u2 * u2 + v2 * v2 * v2;
    return 1.0 - std::pow(s, 1.0 / 6.0);
}

double tdf(const MmcComponent& c, double x, double y) {
    return TdfEvaluator(c)(x, y);
}

NodalField tdf_grid(const MmcComponent& c, const DomainSpec& domain) {
    const TdfEvaluator phi(c);
    const double h = domain.element_size();
    NodalField out(domain.nx(), domain.ny());
    for (int iy = 0; iy <= out.ny; ++iy) {
        for (int ix = 0; ix <= out.nx; ++ix) {
            out.at(ix, iy) = phi(ix * h, iy * h);
        }
    }
    return out;
}

std::array<double, kVariablesPerComponent> to_array(const MmcComponent& c) {
    return {c.xa, c.ya, c.xb, c.yb, c.ta, c.tb};
}

MmcComponent from_array(const double* v) {
    return MmcComponent{v[0], v[1], v[2], v[3], v[4], v[5]};
}

}  // namespace sogym
