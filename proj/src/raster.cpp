#include "sogym/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <png.h>

namespace sogym {

namespace {

constexpr int kPlane = kRasterSize * kRasterSize;

// Qualitative palette (tab10 order, grey and cyan dropped: they are the
// support and load colours).
constexpr std::array<Rgb, kPaletteSize> kPalette{{
    {31, 119, 180},
    {255, 127, 14},
    {44, 160, 44},
    {214, 39, 40},
    {148, 103, 189},
    {140, 86, 75},
    {227, 119, 194},
    {188, 189, 34},
}};

std::uint8_t to_byte(double c) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(c, 0.0, 1.0)));
}

int clamp_pixel(double v) {
    return std::clamp(static_cast<int>(std::floor(v)), 0, kRasterSize - 1);
}

}  // namespace

Rgb Raster::pixel(int row, int col) const {
    const std::size_t i = static_cast<std::size_t>(row) * kRasterSize + col;
    return {data[i], data[kPlane + i], data[2 * kPlane + i]};
}

void Raster::set(int row, int col, Rgb c) {
    const std::size_t i = static_cast<std::size_t>(row) * kRasterSize + col;
    data[i] = c.r;
    data[kPlane + i] = c.g;
    data[2 * kPlane + i] = c.b;
}

Rgb jet_colormap(double v) {
    if (std::isnan(v)) v = 0.0;
    v = std::clamp(v, 0.0, 1.0);
    double r = 0.0, g = 0.0, b = 0.0;
    if (v < 3.0 / 8) r = 0.0;
    else if (v < 5.0 / 8) r = 4.0 * (v - 3.0 / 8);
    else if (v < 7.0 / 8) r = 1.0;
    else r = 1.0 - 4.0 * (v - 7.0 / 8);

    if (v < 1.0 / 8) g = 0.0;
    else if (v < 3.0 / 8) g = 4.0 * (v - 1.0 / 8);
    else if (v < 5.0 / 8) g = 1.0;
    else if (v < 7.0 / 8) g = 1.0 - 4.0 * (v - 5.0 / 8);
    else g = 0.0;

    if (v < 1.0 / 8) b = 0.5 + 4.0 * v;
    else if (v < 3.0 / 8) b = 1.0;
    else if (v < 5.0 / 8) b = 1.0 - 4.0 * (v - 3.0 / 8);
    else b = 0.0;
    return {to_byte(r), to_byte(g), to_byte(b)};
}

Rgb component_color(std::size_t k) {
    return kPalette[k % kPaletteSize];
}

Letterbox Letterbox::of(double width, double height) {
    if (!(width > 0.0) || !(height > 0.0)) throw std::invalid_argument("letterbox: non-positive domain");
    Letterbox lb;
    lb.pixels_per_unit = kRasterSize / std::max(width, height);
    lb.cols = std::clamp(static_cast<int>(std::lround(width * lb.pixels_per_unit)), 1, kRasterSize);
    lb.rows = std::clamp(static_cast<int>(std::lround(height * lb.pixels_per_unit)), 1, kRasterSize);
    lb.col0 = (kRasterSize - lb.cols) / 2;
    lb.row0 = (kRasterSize - lb.rows) / 2;
    return lb;
}

namespace {

void fill_letterbox(Raster& img, const Letterbox& lb, Rgb inside) {
    for (int row = 0; row < kRasterSize; ++row) {
        for (int col = 0; col < kRasterSize; ++col) img.set(row, col, lb.inside(row, col) ? inside : kMarginColor);
    }
}

void draw_support(Raster& img, const Letterbox& lb, const BoundaryProblem& p) {
    const double half = 0.5 / lb.pixels_per_unit;
    const bool vertical = p.support_boundary == Boundary::Left || p.support_boundary == Boundary::Right;
    const double extent = vertical ? p.height : p.width;
    const double s0 = p.support_position * extent - half;
    const double s1 = (p.support_position + p.support_length) * extent + half;
    for (int k = 0; k < 2; ++k) {
        if (vertical) {
            const int col = p.support_boundary == Boundary::Left ? lb.col0 + k : lb.col0 + lb.cols - 1 - k;
            for (int row = lb.row0; row < lb.row0 + lb.rows; ++row) {
                const double y = lb.y_of(row);
                if (y >= s0 && y <= s1) img.set(row, col, kSupportColor);
            }
        } else {
            const int row = p.support_boundary == Boundary::Bottom ? lb.row0 + lb.rows - 1 - k : lb.row0 + k;
            for (int col = lb.col0; col < lb.col0 + lb.cols; ++col) {
                const double x = lb.x_of(col);
                if (x >= s0 && x <= s1) img.set(row, col, kSupportColor);
            }
        }
    }
}

// Five-pixel shaft from the load point along the force, two head pixels
// folded back from the tip.
void draw_load(Raster& img, const Letterbox& lb, const BoundaryProblem& p) {
    double x = 0.0, y = 0.0;
    switch (p.load_boundary) {
        case Boundary::Left: y = p.load_position * p.height; break;
        case Boundary::Right: x = p.width; y = p.load_position * p.height; break;
        case Boundary::Top: x = p.load_position * p.width; y = p.height; break;
        case Boundary::Bottom: x = p.load_position * p.width; break;
    }
    const double fc = lb.col0 + x * lb.pixels_per_unit;
    const double fr = lb.row0 + lb.rows - y * lb.pixels_per_unit;
    const double th = p.load_angle_deg * M_PI / 180.0;
    const double dc = std::cos(th);
    const double dr = -std::sin(th);
    for (int t = 0; t < 5; ++t) img.set(clamp_pixel(fr + t * dr), clamp_pixel(fc + t * dc), kLoadColor);
    const double tip_c = fc + 4.0 * dc;
    const double tip_r = fr + 4.0 * dr;
    for (double side : {-1.0, 1.0}) {
        const double a = side * 3.0 * M_PI / 4.0;
        const double hc = dc * std::cos(a) - dr * std::sin(a);
        const double hr = dc * std::sin(a) + dr * std::cos(a);
        img.set(clamp_pixel(tip_r + 1.5 * hr), clamp_pixel(tip_c + 1.5 * hc), kLoadColor);
    }
}

}  // namespace

Raster render_design_image(const BoundaryProblem& p, std::span<const MmcComponent> placed) {
    const Letterbox lb = Letterbox::of(p.width, p.height);
    Raster img;
    fill_letterbox(img, lb, kBackgroundColor);

    std::vector<TdfEvaluator> tdfs;
    tdfs.reserve(placed.size());
    for (const MmcComponent& c : placed) tdfs.emplace_back(c);
    for (int row = lb.row0; row < lb.row0 + lb.rows; ++row) {
        const double y = lb.y_of(row);
        for (int col = lb.col0; col < lb.col0 + lb.cols; ++col) {
            const double x = lb.x_of(col);
            double best = -std::numeric_limits<double>::infinity();
            std::size_t owner = 0;
            for (std::size_t k = 0; k < tdfs.size(); ++k) {
                const double v = tdfs[k](x, y);
                if (v > best) {
                    best = v;
                    owner = k;
                }
            }
            if (best >= 0.0) img.set(row, col, component_color(owner));
        }
    }
    draw_support(img, lb, p);
    draw_load(img, lb, p);
    return img;
}

Raster render_strain_image(const BoundaryProblem& p, const DensityField& field, std::span<const double> strain_energy,
                           bool connected) {
    Raster img;
    if (!connected) return img;
    if (strain_energy.size() != field.element_count()) {
        throw std::invalid_argument("render_strain_image: strain energy does not match the mesh");
    }
    std::vector<double> v(strain_energy.size());
    for (std::size_t e = 0; e < v.size(); ++e) v[e] = std::log(strain_energy[e] + 1e-12);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double vmin = *lo;
    const double range = *hi - *lo;
    for (double& x : v) x = range > 0.0 ? (x - vmin) / range : 0.5;

    const Letterbox lb = Letterbox::of(p.width, p.height);
    for (int row = lb.row0; row < lb.row0 + lb.rows; ++row) {
        const int iy = std::clamp(static_cast<int>(lb.y_of(row) / p.height * field.ny), 0, field.ny - 1);
        for (int col = lb.col0; col < lb.col0 + lb.cols; ++col) {
            const int ix = std::clamp(static_cast<int>(lb.x_of(col) / p.width * field.nx), 0, field.nx - 1);
            img.set(row, col, jet_colormap(v[field.index(ix, iy)]));
        }
    }
    return img;
}

std::string encode_png(const Raster& r) {
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(3) * kPlane);
    for (int i = 0; i < kPlane; ++i) {
        for (int c = 0; c < 3; ++c) rgb[3 * i + c] = r.data[c * kPlane + i];
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = kRasterSize;
    image.height = kRasterSize;
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
        throw std::runtime_error(std::string("png encode: ") + image.message);
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
        throw std::runtime_error(std::string("png encode: ") + image.message);
    }
    out.resize(size);
    return out;
}

}  // namespace sogym
