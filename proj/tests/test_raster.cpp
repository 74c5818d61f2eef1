#include "doctest.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sogym/design.hpp"
#include "sogym/raster.hpp"

using namespace sogym;

namespace {

bool is_component(Rgb c) {
    for (std::size_t k = 0; k < kPaletteSize; ++k) {
        if (c == component_color(k)) return true;
    }
    return false;
}

Raster decode_png(const std::string& bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    REQUIRE(png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()));
    REQUIRE(image.width == 64u);
    REQUIRE(image.height == 64u);
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
    REQUIRE(png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr));
    Raster r;
    for (int row = 0; row < 64; ++row) {
        for (int col = 0; col < 64; ++col) {
            const std::size_t i = 3 * static_cast<std::size_t>(row * 64 + col);
            r.set(row, col, {rgb[i], rgb[i + 1], rgb[i + 2]});
        }
    }
    return r;
}

}  // namespace

TEST_CASE("jet colormap") {
    CHECK(jet_colormap(0.0) == Rgb{0, 0, 128});
    CHECK(jet_colormap(0.5) == Rgb{128, 255, 128});
    CHECK(jet_colormap(1.0) == Rgb{128, 0, 0});
    CHECK(jet_colormap(0.25) == Rgb{0, 128, 255});
    CHECK(jet_colormap(0.75) == Rgb{255, 128, 0});
    CHECK(jet_colormap(-3.0) == jet_colormap(0.0));
    CHECK(jet_colormap(7.0) == jet_colormap(1.0));
    CHECK(jet_colormap(std::nan("")) == jet_colormap(0.0));
}

TEST_CASE("letterbox centres the short side") {
    const Letterbox wide = Letterbox::of(2.0, 1.0);
    CHECK(wide.cols == 64);
    CHECK(wide.rows == 32);
    CHECK(wide.row0 == 16);
    CHECK(wide.col0 == 0);
    const Letterbox square = Letterbox::of(1.0, 1.0);
    CHECK(square.rows == 64);
    CHECK(square.x_of(0) == doctest::Approx(0.5 / 64));
    CHECK(square.y_of(63) == doctest::Approx(0.5 / 64));
    CHECK_THROWS_AS(Letterbox::of(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("design image layout") {
    BoundaryProblem p;
    p.width = 2.0;
    const Raster empty = render_design_image(p, {});
    CHECK(empty.pixel(0, 10) == kMarginColor);
    CHECK(empty.pixel(63, 10) == kMarginColor);
    CHECK(empty.pixel(30, 32) == kBackgroundColor);
    // Full-height support on the left edge.
    CHECK(empty.pixel(30, 0) == kSupportColor);
    CHECK(empty.pixel(30, 1) == kSupportColor);
    // Load at mid-height on the right edge, pointing down.
    int load = 0;
    for (std::size_t i = 0; i < 64 * 64; ++i) {
        if (empty.pixel(static_cast<int>(i / 64), static_cast<int>(i % 64)) == kLoadColor) ++load;
    }
    CHECK(load >= 5);
    CHECK(empty.pixel(32, 63) == kLoadColor);
    CHECK(render_design_image(p, {}) == empty);
}

TEST_CASE("components use placement colours") {
    const BoundaryProblem p;
    const std::vector<MmcComponent> placed{{0.1, 0.3, 0.9, 0.3, 0.05, 0.05}, {0.1, 0.7, 0.9, 0.7, 0.05, 0.05}};
    const Raster img = render_design_image(p, placed);
    const Letterbox lb = Letterbox::of(1.0, 1.0);
    const int r0 = lb.row0 + lb.rows - 1 - static_cast<int>(0.3 * 64);
    const int r1 = lb.row0 + lb.rows - 1 - static_cast<int>(0.7 * 64);
    CHECK(img.pixel(r0, 32) == component_color(0));
    CHECK(img.pixel(r1, 32) == component_color(1));
    CHECK(component_color(kPaletteSize) == component_color(0));
}

TEST_CASE("design footprint matches the projected density") {
    const BoundaryProblem p;
    const std::vector<MmcComponent> placed{
        {0.0, 0.5, 1.0, 0.5, 0.04, 0.04}, {0.2, 0.1, 0.8, 0.9, 0.03, 0.05}, {0.3, 0.8, 0.7, 0.6, 0.05, 0.02}};
    const Raster img = render_design_image(p, placed);
    const DesignField f = evaluate_design(placed, p.domain(64));
    const Letterbox lb = Letterbox::of(1.0, 1.0);
    auto mask = [&](int row, int col) {
        const int ix = std::clamp(static_cast<int>(lb.x_of(col) * 64), 0, 63);
        const int iy = std::clamp(static_cast<int>(lb.y_of(row) * 64), 0, 63);
        return f.density.rho[f.density.index(ix, iy)] >= 0.5;
    };
    int mismatched = 0;
    int solid = 0;
    for (int row = 2; row < 62; ++row) {  // skip the support band and arrow
        for (int col = 2; col < 56; ++col) {
            const bool drawn = is_component(img.pixel(row, col));
            solid += drawn;
            if (drawn == mask(row, col)) continue;
            ++mismatched;
            bool near = false;
            for (int dr = -2; dr <= 2 && !near; ++dr) {
                for (int dc = -2; dc <= 2 && !near; ++dc) near = mask(row + dr, col + dc) == drawn;
            }
            CAPTURE(row);
            CAPTURE(col);
            CHECK(near);
        }
    }
    CHECK(solid > 200);
    CHECK(mismatched < solid / 5);
}

TEST_CASE("strain image") {
    const BoundaryProblem p;
    const DensityField field = make_density_field(4, 4, std::vector<double>(16, 1.0));
    std::vector<double> energy(16, 1.0);
    const Raster flat = render_strain_image(p, field, energy, true);
    CHECK(flat.pixel(10, 10) == jet_colormap(0.5));
    CHECK(flat.pixel(60, 60) == jet_colormap(0.5));

    CHECK(render_strain_image(p, field, energy, false) == Raster{});

    energy[0] = 100.0;  // bottom-left element
    energy[15] = 1e-3;  // top-right element
    const Raster ramp = render_strain_image(p, field, energy, true);
    CHECK(ramp.pixel(63, 0) == jet_colormap(1.0));
    CHECK(ramp.pixel(0, 63) == jet_colormap(0.0));

    CHECK_THROWS_AS(render_strain_image(p, field, std::vector<double>(3, 1.0), true), std::invalid_argument);
}

TEST_CASE("png round trip") {
    const BoundaryProblem p;
    const std::vector<MmcComponent> placed{{0.0, 0.5, 1.0, 0.5, 0.05, 0.05}};
    const Raster img = render_design_image(p, placed);
    const std::string png = encode_png(img);
    REQUIRE(png.size() > 8);
    CHECK(png.substr(1, 3) == "PNG");
    CHECK(decode_png(png) == img);
}
