#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sogym/geometry.hpp"
#include "sogym/problem.hpp"
#include "sogym/projection.hpp"

namespace sogym {

inline constexpr int kRasterSize = 64;
inline constexpr int kRasterChannels = 3;

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

/// 3 x 64 x 64 image stored channel-major: data[c * 64 * 64 + row * 64 + col],
/// row 0 at the top of the domain.
struct Raster {
    std::vector<std::uint8_t> data = std::vector<std::uint8_t>(kRasterChannels * kRasterSize * kRasterSize, 0);

    Rgb pixel(int row, int col) const;
    void set(int row, int col, Rgb c);
    bool operator==(const Raster&) const = default;
};

/// Classic jet colormap, v clamped to [0, 1]; channels rounded to 8 bits.
Rgb jet_colormap(double v);

/// Colour of the k-th placed component (k modulo the palette size).
Rgb component_color(std::size_t k);
inline constexpr std::size_t kPaletteSize = 8;

inline constexpr Rgb kMarginColor{0, 0, 0};
inline constexpr Rgb kBackgroundColor{255, 255, 255};
inline constexpr Rgb kSupportColor{96, 96, 96};
inline constexpr Rgb kLoadColor{23, 190, 207};

/// Placement of the domain inside the square image: the longer side spans all
/// 64 pixels and the shorter one is centred.
struct Letterbox {
    double pixels_per_unit = 0.0;
    int col0 = 0;
    int row0 = 0;
    int cols = 0;
    int rows = 0;

    static Letterbox of(double width, double height);
    bool inside(int row, int col) const {
        return row >= row0 && row < row0 + rows && col >= col0 && col < col0 + cols;
    }
    /// Domain coordinates of a pixel centre.
    double x_of(int col) const { return (col - col0 + 0.5) / pixels_per_unit; }
    double y_of(int row) const { return (row0 + rows - row - 0.5) / pixels_per_unit; }
};

/// Components in placement colours over the white domain, the support as a
/// 2-pixel band along its boundary segment and the load as a short arrow.
Raster render_design_image(const BoundaryProblem& p, std::span<const MmcComponent> placed);

/// Log strain energy through jet, min-max normalised over the frame; all
/// zeros when the design is disconnected.
Raster render_strain_image(const BoundaryProblem& p, const DensityField& field, std::span<const double> strain_energy,
                           bool connected);

/// PNG bytes of the raster (8-bit RGB).
std::string encode_png(const Raster& r);

}  // namespace sogym
