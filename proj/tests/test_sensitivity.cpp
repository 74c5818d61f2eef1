#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "sogym/design.hpp"
#include "sogym/sensitivity.hpp"

using namespace sogym;

TEST_CASE("pack and unpack are inverse") {
    const std::vector<double> x = oracle::random_bar_design(3, 4);
    CHECK(pack_design(unpack_design(x)) == x);
    CHECK_THROWS_AS(unpack_design(std::vector<double>(7, 0.0)), std::invalid_argument);
}

TEST_CASE("union owner is the lowest index among ties") {
    const DomainSpec d{1.0, 1.0, 10};
    const MmcComponent c{0.2, 0.5, 0.8, 0.5, 0.1, 0.1};
    const std::vector<MmcComponent> twice{c, c};
    const DesignField f = evaluate_design(twice, d);
    for (std::size_t n = 0; n < f.owner.size(); ++n) CHECK(f.owner[n] == 0);
}

TEST_CASE("analytic gradients match finite differences on random designs") {
    const BoundaryProblem p;  // unit square, 50 x 50 elements
    const ComplianceModel model(p);
    for (std::uint64_t s = 0; s < 4; ++s) {
        const oracle::GradientCheck g = oracle::check_gradients(model, oracle::random_bar_design(100 + s, 3));
        CAPTURE(s);
        CHECK(g.compliance_error < 1e-3);
        CHECK(g.volume_error < 1e-3);
    }
}

TEST_CASE("volume gradient vanishes away from the band") {
    const BoundaryProblem p;
    const ComplianceModel model(p);
    // A thick bar inside the domain plus a bar lying entirely outside it:
    // nothing of the second one touches a node, so its gradient is zero.
    std::vector<double> x{0.0, 0.5, 1.0, 0.5, 0.1, 0.1, 5.0, 5.0, 6.0, 5.0, 0.05, 0.05};
    const ComplianceEvaluation e = model.evaluate(x);
    for (std::size_t j = 6; j < 12; ++j) {
        CHECK(e.dv[j] == 0.0);
        CHECK(e.dc[j] == 0.0);
    }
    bool any = false;
    for (std::size_t j = 0; j < 6; ++j) any = any || e.dv[j] != 0.0;
    CHECK(any);
}

TEST_CASE("a bar buried inside a solid region has near-zero gradients") {
    const BoundaryProblem p;
    const ComplianceModel model(p);
    // Thin bar well inside a thick one: moving it only changes nodes that are
    // already saturated by the thick bar.
    std::vector<double> x{0.0, 0.5, 1.0, 0.5, 0.2, 0.2, 0.4, 0.5, 0.6, 0.5, 0.02, 0.02};
    const ComplianceEvaluation e = model.evaluate(x);
    double big = 0.0;
    for (std::size_t j = 0; j < 6; ++j) big = std::max(big, std::abs(e.dc[j]));
    REQUIRE(big > 0.0);
    for (std::size_t j = 6; j < 12; ++j) CHECK(std::abs(e.dc[j]) <= 1e-9 * big);
}

TEST_CASE("one-shot wrapper agrees with the model") {
    const BoundaryProblem p;
    const std::vector<double> x = oracle::random_bar_design(7, 2);
    const ComplianceEvaluation a = objective_and_gradients(x, p);
    const ComplianceEvaluation b = ComplianceModel(p).evaluate(x);
    CHECK(a.compliance == b.compliance);
    CHECK(a.dc == b.dc);
    CHECK(a.dv == b.dv);
}
