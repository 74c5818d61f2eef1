#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sogym/geometry.hpp"

using namespace sogym;

namespace {

MmcComponent random_component(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pos(0.0, 2.0);
    std::uniform_real_distribution<double> thick(0.01, 0.1);
    return MmcComponent{pos(rng), pos(rng), pos(rng), pos(rng), thick(rng), thick(rng)};
}

}  // namespace

TEST_CASE("scale_action maps the action box onto the design bounds") {
    const DomainSpec wide{2.0, 1.0};
    NormalizedAction a{};
    a[0] = -1.0;
    CHECK(scale_action(a, wide).xa == 0.0);
    a[0] = 0.0;
    CHECK(scale_action(a, wide).xa == doctest::Approx(1.0));

    const DomainSpec unit{1.0, 1.0};
    a = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    const auto c = scale_action(a, unit);
    CHECK(c.ta == doctest::Approx(0.05));
    CHECK(c.tb == doctest::Approx(0.05));

    SUBCASE("out-of-range entries are clamped") {
        a = {-7.0, 3.0, -1.5, 1.5, -2.0, 2.0};
        const auto k = scale_action(a, wide);
        CHECK(k.xa == 0.0);
        CHECK(k.ya == 1.0);
        CHECK(k.xb == 0.0);
        CHECK(k.yb == 1.0);
        CHECK(k.ta == 0.01);
        CHECK(k.tb == doctest::Approx(0.05));
    }

    SUBCASE("monotone in every coordinate and invertible") {
        const DomainSpec d{1.7, 1.2};
        for (std::size_t i = 0; i < kVariablesPerComponent; ++i) {
            double prev = -1e300;
            for (double v = -1.0; v <= 1.0 + 1e-12; v += 0.125) {
                NormalizedAction b{};
                b[i] = v;
                const double x = to_array(scale_action(b, d))[i];
                CHECK(x > prev);
                prev = x;
                CHECK(normalize_component(scale_action(b, d), d)[i] == doctest::Approx(v));
            }
        }
    }
}

TEST_CASE("component_frame") {
    auto f = component_frame({0.0, 0.0, 1.0, 1.0, 0.1, 0.1});
    CHECK(f.x0 == 0.5);
    CHECK(f.y0 == 0.5);
    CHECK(f.length == doctest::Approx(std::sqrt(2.0)));
    CHECK(f.theta == doctest::Approx(std::numbers::pi / 4));

    f = component_frame({0.3, 0.3, 0.3, 0.3, 0.1, 0.1});
    CHECK(f.length == kMinComponentLength);
    CHECK(f.theta == 0.0);

    f = component_frame({0.5, 0.5, 1.5, 0.5, 0.1, 0.1});
    CHECK(f.x0 == 1.0);
    CHECK(f.y0 == 0.5);
    CHECK(f.length == 1.0);
    CHECK(f.theta == 0.0);

    // atan2 returns -pi for (-0, -1); the frame keeps theta in (-pi, pi].
    f = component_frame({1.0, 0.0, 0.0, -0.0, 0.1, 0.1});
    CHECK(f.theta == doctest::Approx(std::numbers::pi));
    CHECK(f.theta > 0.0);
}

TEST_CASE("tdf anchor values") {
    const MmcComponent c{0.5, 0.5, 1.5, 0.5, 0.1, 0.1};
    CHECK(tdf(c, 1.0, 0.5) == 1.0);
    CHECK(std::abs(tdf(c, 1.0, 0.6)) < 1e-12);
    // Reference value 1 - (0.25^6 + 0.5^6)^(1/6), computed separately.
    CHECK(tdf(c, 1.25, 0.55) == doctest::Approx(0.4987063137123946).epsilon(1e-14));
    // Zero level set at x1 = +-L on the axis.
    CHECK(std::abs(tdf(c, 2.0, 0.5)) < 1e-12);
    CHECK(std::abs(tdf(c, 0.0, 0.5)) < 1e-12);
}

TEST_CASE("degenerate and tapered components stay finite") {
    const MmcComponent dot{0.3, 0.3, 0.3, 0.3, 0.02, 0.02};
    CHECK(std::isfinite(tdf(dot, 0.3, 0.3)));
    CHECK(tdf(dot, 0.3, 0.3) == 1.0);
    CHECK(tdf(dot, 0.8, 0.3) < 0.0);

    const MmcComponent taper{0.0, 0.0, 1.0, 0.0, 0.01, 0.05};
    // Far beyond the thin end the linear thickness would go negative.
    CHECK(std::isfinite(tdf(taper, -5.0, 0.2)));
    CHECK(tdf(taper, -5.0, 0.2) < 0.0);
}

TEST_CASE("tdf is invariant under endpoint swap") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pt(-0.5, 2.5);
    for (int k = 0; k < 2000; ++k) {
        const MmcComponent c = random_component(rng);
        const MmcComponent s{c.xb, c.yb, c.xa, c.ya, c.tb, c.ta};
        const double x = pt(rng);
        const double y = pt(rng);
        const double phi = tdf(c, x, y);
        CHECK(std::abs(phi - tdf(s, x, y)) < 1e-12 * std::max(1.0, std::abs(phi)));
    }
}

TEST_CASE("tdf is invariant under rigid motions") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> pt(-0.5, 2.5);
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    for (int k = 0; k < 2000; ++k) {
        const MmcComponent c = random_component(rng);
        const double x = pt(rng);
        const double y = pt(rng);
        const double phi = ang(rng);
        const double tx = pt(rng);
        const double ty = pt(rng);
        auto move = [&](double px, double py) {
            return std::pair{std::cos(phi) * px - std::sin(phi) * py + tx, std::sin(phi) * px + std::cos(phi) * py + ty};
        };
        const auto [xa, ya] = move(c.xa, c.ya);
        const auto [xb, yb] = move(c.xb, c.yb);
        const auto [qx, qy] = move(x, y);
        const MmcComponent m{xa, ya, xb, yb, c.ta, c.tb};
        const double ref = tdf(c, x, y);
        CHECK(std::abs(ref - tdf(m, qx, qy)) < 1e-10 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("tdf_grid matches pointwise evaluation") {
    const DomainSpec tiny{1.0, 1.0, 2};
    const MmcComponent c{0.1, 0.2, 0.8, 0.7, 0.05, 0.03};
    const NodalField g = tdf_grid(c, tiny);
    REQUIRE(g.nx == 2);
    REQUIRE(g.ny == 2);
    REQUIRE(g.values.size() == 9);
    for (int iy = 0; iy <= 2; ++iy) {
        for (int ix = 0; ix <= 2; ++ix) CHECK(g.at(ix, iy) == tdf(c, ix * 0.5, iy * 0.5));
    }

    std::mt19937_64 rng(3);
    const DomainSpec d{1.0, 1.0, 50};
    const MmcComponent r = random_component(rng);
    const NodalField big = tdf_grid(r, d);
    std::uniform_int_distribution<int> node(0, 50);
    for (int k = 0; k < 100; ++k) {
        const int ix = node(rng);
        const int iy = node(rng);
        CHECK(big.at(ix, iy) == doctest::Approx(tdf(r, ix * 0.02, iy * 0.02)).epsilon(1e-14));
    }
}

TEST_CASE("tdf_grid respects the component's mirror symmetry") {
    const DomainSpec d{1.0, 1.0, 20};
    const MmcComponent c{0.3, 0.5, 0.7, 0.5, 0.04, 0.04};
    const NodalField g = tdf_grid(c, d);
    for (int iy = 0; iy <= 20; ++iy) {
        for (int ix = 0; ix <= 20; ++ix) {
            CHECK(g.at(ix, iy) == doctest::Approx(g.at(20 - ix, iy)).epsilon(1e-12));
            CHECK(g.at(ix, iy) == doctest::Approx(g.at(ix, 20 - iy)).epsilon(1e-12));
        }
    }
}

TEST_CASE("mesh dimensions round to the nearest element") {
    const DomainSpec d{1.37, 1.999, 50};
    CHECK(d.nx() == 69);
    CHECK(d.ny() == 100);
    CHECK(d.element_size() == 0.02);
}
