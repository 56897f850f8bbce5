#include "wtv/grid.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "wtv/errors.hpp"

namespace wtv {

namespace {
bool is_power_of_two(std::size_t v) { return v >= 2 && (v & (v - 1)) == 0; }
}  // namespace

std::size_t GridSpec::size() const noexcept {
    std::size_t total = 1;
    for (auto c : n) total *= c;
    return total;
}

double GridSpec::cell_volume() const {
    double vol = 1.0;
    for (std::size_t a = 0; a < dim(); ++a) vol *= spacing(a);
    return vol;
}

double GridSpec::frequency_spacing(std::size_t axis) const {
    return 2.0 * std::numbers::pi / (hi[axis] - lo[axis]);
}

double GridSpec::frequency(std::size_t axis, std::size_t k) const {
    const double shifted = static_cast<double>(k) - static_cast<double>(n[axis] / 2);
    return shifted * frequency_spacing(axis);
}

double GridSpec::frequency_limit(std::size_t axis) const { return std::numbers::pi / spacing(axis); }

double GridSpec::frequency_cell_volume() const {
    double vol = 1.0;
    for (std::size_t a = 0; a < dim(); ++a) vol *= frequency_spacing(a);
    return vol;
}

std::array<std::size_t, kMaxGridDim> GridSpec::unravel(std::size_t flat) const {
    std::array<std::size_t, kMaxGridDim> idx{};
    for (std::size_t a = dim(); a-- > 0;) {
        idx[a] = flat % n[a];
        flat /= n[a];
    }
    return idx;
}

std::array<double, kMaxGridDim> GridSpec::point(std::size_t flat) const {
    const auto idx = unravel(flat);
    std::array<double, kMaxGridDim> x{};
    for (std::size_t a = 0; a < dim(); ++a) x[a] = node(a, idx[a]);
    return x;
}

std::array<double, kMaxGridDim> GridSpec::frequency_point(std::size_t flat) const {
    const auto idx = unravel(flat);
    std::array<double, kMaxGridDim> u{};
    for (std::size_t a = 0; a < dim(); ++a) u[a] = frequency(a, idx[a]);
    return u;
}

void GridSpec::validate() const {
    if (n.empty() || n.size() > kMaxGridDim) {
        detail::fail_precondition("grid dimension must be 1, 2 or 3");
    }
    if (lo.size() != n.size() || hi.size() != n.size()) {
        detail::fail_precondition("grid box and resolution have different dimensions");
    }
    for (std::size_t a = 0; a < n.size(); ++a) {
        if (!(std::isfinite(lo[a]) && std::isfinite(hi[a]) && lo[a] < hi[a])) {
            std::ostringstream os;
            os << "grid axis " << a << " has an empty or invalid interval";
            detail::fail_precondition(os.str());
        }
        if (!is_power_of_two(n[a])) {
            std::ostringstream os;
            os << "grid axis " << a << " resolution " << n[a] << " is not a power of two";
            detail::fail_precondition(os.str());
        }
    }
}

GridSpec GridSpec::refined() const {
    GridSpec out = *this;
    for (auto& c : out.n) c *= 2;
    return out;
}

GridSpec make_grid_1d(double lo, double hi, std::size_t n) {
    GridSpec spec{{lo}, {hi}, {n}};
    spec.validate();
    return spec;
}

GridDensity::GridDensity(GridSpec spec, std::vector<double> values, double mass_defect)
    : spec_(std::move(spec)), values_(std::move(values)), mass_defect_(mass_defect) {
    spec_.validate();
    if (values_.size() != spec_.size()) {
        detail::fail_precondition("grid density value count does not match the grid");
    }
    double sum = 0.0;
    for (double v : values_) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            detail::fail_precondition("grid density values must be finite and nonnegative");
        }
        sum += v;
    }
    raw_mass_ = sum * spec_.cell_volume();
    if (!(raw_mass_ > 0.0)) detail::fail_precondition("grid density has zero mass");
    const double scale = 1.0 / raw_mass_;
    for (double& v : values_) v *= scale;
}

double GridDensity::mass() const {
    double sum = 0.0;
    for (double v : values_) sum += v;
    return sum * spec_.cell_volume();
}

std::size_t CharGrid::zero_index() const {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < spec.dim(); ++a) flat = flat * spec.n[a] + spec.n[a] / 2;
    return flat;
}

}  // namespace wtv
