#include "sogym/problem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sogym {

namespace {

constexpr double kTol = 1e-9;

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

// Whole support segment must cover at least two mesh nodes at the default
// resolution.
bool support_is_degenerate(const BoundaryProblem& p) {
    const bool vertical = p.support_boundary == Boundary::Left || p.support_boundary == Boundary::Right;
    const double extent = vertical ? p.height : p.width;
    const long n = std::lround(extent * 50);
    const double lo = p.support_position * n;
    const double hi = (p.support_position + p.support_length) * n;
    return std::floor(hi + kTol) - std::ceil(lo - kTol) + 1 < 2;
}

}  // namespace

Boundary opposite(Boundary b) {
    switch (b) {
        case Boundary::Left: return Boundary::Right;
        case Boundary::Right: return Boundary::Left;
        case Boundary::Top: return Boundary::Bottom;
        case Boundary::Bottom: return Boundary::Top;
    }
    return Boundary::Left;
}

std::string_view to_string(Boundary b) {
    switch (b) {
        case Boundary::Left: return "left";
        case Boundary::Right: return "right";
        case Boundary::Top: return "top";
        case Boundary::Bottom: return "bottom";
    }
    return "left";
}

std::optional<Boundary> boundary_from_string(std::string_view s) {
    if (s == "left") return Boundary::Left;
    if (s == "right") return Boundary::Right;
    if (s == "top") return Boundary::Top;
    if (s == "bottom") return Boundary::Bottom;
    return std::nullopt;
}

void validate(const BoundaryProblem& p) {
    require(p.load_boundary == opposite(p.support_boundary), "b_l: load boundary must be opposite the support");
    require(p.support_length >= 0.25 - kTol && p.support_length <= 1.0 + kTol, "l_s: support length outside [0.25, 1]");
    require(p.support_position >= -kTol && p.support_position <= 1.0 - p.support_length + kTol,
            "p_s: support position outside [0, 1 - l_s]");
    require(p.load_position >= -kTol && p.load_position <= 1.0 + kTol, "p_l: load position outside [0, 1]");
    require(p.load_angle_deg >= 0.0 && p.load_angle_deg < 360.0, "theta_l: load angle outside [0, 360)");
    require(p.volume_fraction >= 0.2 - kTol && p.volume_fraction <= 0.4 + kTol, "v_star: volume fraction outside [0.2, 0.4]");
    require(p.height >= 1.0 - kTol && p.height <= 2.0 + kTol, "h: height outside [1, 2]");
    require(p.width >= 1.0 - kTol && p.width <= 2.0 + kTol, "w: width outside [1, 2]");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

BoundaryProblem sample(std::uint64_t seed) {
    Rng rng(seed);
    BoundaryProblem p;
    p.seed = seed;
    do {
        p.support_boundary = static_cast<Boundary>(rng.below(4));
        p.load_boundary = opposite(p.support_boundary);
        p.support_length = rng.uniform(0.25, 1.0);
        p.support_position = rng.uniform() * (1.0 - p.support_length);
        p.load_position = rng.uniform();
        p.load_angle_deg = rng.uniform(0.0, 360.0);
        p.volume_fraction = rng.uniform(0.2, 0.4);
        p.height = rng.uniform(1.0, 2.0);
        p.width = rng.uniform(1.0, 2.0);
    } while (support_is_degenerate(p));
    return p;
}

std::vector<BoundaryProblem> eval_set(std::uint64_t seed, int n) {
    if (n < 1) throw std::invalid_argument("eval_set: n must be >= 1");
    std::vector<BoundaryProblem> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(sample(mix_seed(seed, static_cast<std::uint64_t>(i))));
    return out;
}

BetaVector encode_beta(const BoundaryProblem& p) {
    BetaVector b{};
    const double theta = p.load_angle_deg * std::numbers::pi / 180.0;
    b[0] = static_cast<int>(p.support_boundary) / 3.0;   // 1: support boundary
    b[1] = kFullySupported;                              // 2: support type
    b[2] = p.support_length;                             // 3
    b[3] = p.support_position;                           // 4
    b[4] = p.load_position;                              // 5 (6-9 unused)
    b[9] = p.load_angle_deg / 360.0;                     // 10 (11-14 unused)
    b[14] = std::cos(theta);                             // 15 (16-19 unused)
    b[19] = std::sin(theta);                             // 20 (21-24 unused)
    b[24] = p.volume_fraction;                           // 25
    b[25] = p.width;                                     // 26
    b[26] = p.height;                                    // 27
    return b;
}

BoundaryProblem decode_beta(std::span<const double> beta) {
    if (beta.size() != kBetaSize) throw std::invalid_argument("beta: expected 27 entries");
    for (double v : beta) require(std::isfinite(v), "beta: non-finite entry");

    const double code = beta[0] * 3.0;
    const long rounded = std::lround(code);
    require(std::abs(code - rounded) < 1e-6 && rounded >= 0 && rounded <= 3, "beta[1]: unknown support boundary code");
    require(beta[1] == kFullySupported, "beta[2]: unsupported support type");
    for (std::size_t i : {5u, 6u, 7u, 8u, 10u, 11u, 12u, 13u, 15u, 16u, 17u, 18u, 20u, 21u, 22u, 23u}) {
        require(beta[i] == 0.0, "beta: only a single point load is supported");
    }

    BoundaryProblem p;
    p.support_boundary = static_cast<Boundary>(rounded);
    p.load_boundary = opposite(p.support_boundary);
    p.support_length = beta[2];
    p.support_position = beta[3];
    p.load_position = beta[4];
    p.load_angle_deg = beta[9] * 360.0;
    p.volume_fraction = beta[24];
    p.width = beta[25];
    p.height = beta[26];
    p.seed = 0;

    const double theta = p.load_angle_deg * std::numbers::pi / 180.0;
    require(std::abs(std::cos(theta) - beta[14]) < 1e-9 && std::abs(std::sin(theta) - beta[19]) < 1e-9,
            "beta[15], beta[20]: load components inconsistent with orientation");
    validate(p);
    return p;
}

}  // namespace sogym
