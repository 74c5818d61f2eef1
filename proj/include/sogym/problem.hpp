#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sogym/geometry.hpp"

namespace sogym {

enum class Boundary : int { Left = 0, Right = 1, Top = 2, Bottom = 3 };

Boundary opposite(Boundary b);
std::string_view to_string(Boundary b);
std::optional<Boundary> boundary_from_string(std::string_view s);

/// One randomized design task. Positions and lengths are fractions of the
/// chosen boundary; the load angle is in degrees, counterclockwise from +x.
struct BoundaryProblem {
    Boundary support_boundary = Boundary::Left;
    double support_length = 1.0;
    double support_position = 0.0;
    Boundary load_boundary = Boundary::Right;
    double load_position = 0.5;
    double load_angle_deg = 270.0;
    double volume_fraction = 0.3;
    double height = 1.0;
    double width = 1.0;
    std::uint64_t seed = 0;

    DomainSpec domain(int elements_per_unit = 50) const {
        return DomainSpec{width, height, elements_per_unit};
    }

    bool operator==(const BoundaryProblem&) const = default;
};

/// Throws std::invalid_argument naming the first field that violates the
/// sampling ranges or the opposite-boundary rule.
void validate(const BoundaryProblem& p);

/// The deterministic generator behind every sampled quantity. Draws are
/// derived from the 64-bit Mersenne Twister output directly, so values are
/// reproducible bit-for-bit on any conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * n); }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Stateless 64-bit mixer used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

BoundaryProblem sample(std::uint64_t seed);

/// Seed of the fixed evaluation problem set.
inline constexpr std::uint64_t kEvalSetSeed = 20240917;

/// n deterministic problems; throws std::invalid_argument when n < 1.
std::vector<BoundaryProblem> eval_set(std::uint64_t seed = kEvalSetSeed, int n = 10);

inline constexpr std::size_t kBetaSize = 27;
inline constexpr int kFullySupported = 0;

/// Problem description vector. Slot numbers in comments are 1-based.
using BetaVector = std::array<double, kBetaSize>;

BetaVector encode_beta(const BoundaryProblem& p);

/// Throws std::invalid_argument on vectors that no valid problem encodes to.
/// The seed is not part of the vector and decodes as 0.
BoundaryProblem decode_beta(std::span<const double> beta);

}  // namespace sogym
