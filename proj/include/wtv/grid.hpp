#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace wtv {

inline constexpr std::size_t kMaxGridDim = 3;

/// Uniform rectangular grid on the half-open box [lo, hi) with n nodes per axis.
///
/// Node k on axis a sits at lo[a] + k * spacing(a). Flat storage is row-major
/// with the last axis varying fastest. Each axis count must be a power of two.
/// The dual frequency grid has spacing 2*pi / (n * h) and nodes
/// (k - n/2) * du for k in [0, n), i.e. it covers [-pi/h, pi/h).
struct GridSpec {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<std::size_t> n;

    std::size_t dim() const noexcept { return n.size(); }
    std::size_t size() const noexcept;
    double spacing(std::size_t axis) const { return (hi[axis] - lo[axis]) / static_cast<double>(n[axis]); }
    double cell_volume() const;
    double node(std::size_t axis, std::size_t k) const { return lo[axis] + static_cast<double>(k) * spacing(axis); }

    double frequency_spacing(std::size_t axis) const;
    double frequency(std::size_t axis, std::size_t k) const;
    /// Half-width U of the frequency box on one axis (= pi / h).
    double frequency_limit(std::size_t axis) const;
    double frequency_cell_volume() const;

    /// Per-axis indices of a flat offset.
    std::array<std::size_t, kMaxGridDim> unravel(std::size_t flat) const;
    /// Coordinates of the node at a flat offset.
    std::array<double, kMaxGridDim> point(std::size_t flat) const;
    std::array<double, kMaxGridDim> frequency_point(std::size_t flat) const;

    /// Throws PreconditionError unless 1 <= d <= 3, lo < hi and each n is a power of two >= 2.
    void validate() const;

    /// Same box, twice the nodes per axis.
    GridSpec refined() const;

    bool operator==(const GridSpec&) const = default;
};

/// Uniform 1-D grid helper.
GridSpec make_grid_1d(double lo, double hi, std::size_t n);

/// Nonnegative density samples on a grid, normalized to unit discrete mass.
class GridDensity {
public:
    /// Renormalizes `values` to unit Riemann mass. Throws PreconditionError on negative
    /// or non-finite values, size mismatch, or zero mass.
    GridDensity(GridSpec spec, std::vector<double> values, double mass_defect = 0.0);

    const GridSpec& spec() const noexcept { return spec_; }
    std::span<const double> values() const noexcept { return values_; }
    /// Out-of-box mass of the source law, as recorded at discretization time.
    double mass_defect() const noexcept { return mass_defect_; }
    /// Riemann mass before renormalization.
    double raw_mass() const noexcept { return raw_mass_; }
    double mass() const;

private:
    GridSpec spec_;
    std::vector<double> values_;
    double mass_defect_ = 0.0;
    double raw_mass_ = 1.0;
};

/// Signed real samples on a grid (reconstructions, derivatives, differences).
struct GridField {
    GridSpec spec;
    std::vector<double> values;
};

/// Complex samples on the dual frequency grid of `spec`.
///
/// When `is_char_fn` holds the values represent a characteristic function, so
/// |value| <= 1 and value(0) = 1 up to discretization error.
struct CharGrid {
    GridSpec spec;
    std::vector<std::complex<double>> values;
    bool is_char_fn = true;

    std::size_t zero_index() const;
};

}  // namespace wtv
