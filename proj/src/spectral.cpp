#include "wtv/spectral.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "wtv/detail/fft.hpp"
#include "wtv/errors.hpp"

namespace wtv {

namespace {

using cd = std::complex<double>;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Relative magnitude below which transformed values are treated as roundoff.
constexpr double kRoundoffFloor = 1e-14;
constexpr double kEdgeNoiseMargin = 100.0;
// Spectral differentiation is accepted when the weighted spectrum at the outer 10% of
// the grid is below this fraction of its peak.
constexpr double kEdgeTolerance = 1e-3;

void require_even_p(int p) {
    if (p < 2 || p % 2 != 0) {
        std::ostringstream os;
        os << "Delta_p needs an even order p >= 2, got " << p;
        detail::fail_precondition(os.str());
    }
}

void require_alpha(const MultiIndex& alpha, std::size_t d) {
    for (std::size_t a = 0; a < kMaxGridDim; ++a) {
        detail::require(alpha[a] >= 0, "multi-index entries must be nonnegative");
        if (a >= d) detail::require(alpha[a] == 0, "multi-index has entries beyond the dimension");
    }
}

double parity_sign(const GridSpec& spec, std::size_t flat) {
    const auto idx = spec.unravel(flat);
    std::size_t s = 0;
    for (std::size_t a = 0; a < spec.dim(); ++a) s += idx[a];
    return (s % 2 == 0) ? 1.0 : -1.0;
}

// exp(i <u_j, lo>) at every dual node, as a product of per-axis factors.
std::vector<cd> offset_phase(const GridSpec& spec, double sign) {
    std::vector<std::vector<cd>> axis(spec.dim());
    for (std::size_t a = 0; a < spec.dim(); ++a) {
        axis[a].resize(spec.n[a]);
        for (std::size_t j = 0; j < spec.n[a]; ++j) {
            axis[a][j] = std::polar(1.0, sign * spec.frequency(a, j) * spec.lo[a]);
        }
    }
    std::vector<cd> out(spec.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto idx = spec.unravel(i);
        cd v = 1.0;
        for (std::size_t a = 0; a < spec.dim(); ++a) v *= axis[a][idx[a]];
        out[i] = v;
    }
    return out;
}

// phi(u_j) = cellvol * e^{i<u_j,lo>} * sum_k g_k (-1)^{|k|} e^{+2 pi i <j,k/n>}
std::vector<cd> forward(const GridSpec& spec, std::vector<cd> data) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] *= parity_sign(spec, i);
    detail::dft_inplace(data, spec.n, +1);
    const auto ph = offset_phase(spec, 1.0);
    const double vol = spec.cell_volume();
    for (std::size_t j = 0; j < data.size(); ++j) data[j] *= vol * ph[j];
    return data;
}

std::vector<cd> inverse(const GridSpec& spec, std::vector<cd> data) {
    const auto ph = offset_phase(spec, -1.0);
    for (std::size_t j = 0; j < data.size(); ++j) data[j] *= ph[j];
    detail::dft_inplace(data, spec.n, -1);
    const double scale = 1.0 / (static_cast<double>(spec.size()) * spec.cell_volume());
    for (std::size_t k = 0; k < data.size(); ++k) data[k] *= scale * parity_sign(spec, k);
    return data;
}

void drop_roundoff(std::vector<cd>& v) {
    double peak = 0.0;
    for (const auto& z : v) peak = std::max(peak, std::abs(z));
    const double floor = kRoundoffFloor * peak;
    for (auto& z : v) {
        if (std::abs(z) < floor) z = 0.0;
    }
}

double norm_of(const std::array<double, kMaxGridDim>& x, std::size_t d) {
    double s = 0.0;
    for (std::size_t a = 0; a < d; ++a) s += x[a] * x[a];
    return std::sqrt(s);
}

// P_alpha with d^alpha e^Q = P_alpha e^Q for quadratic Q with gradient g and constant Hessian H:
// P_{b+e_j} = g_j P_b + sum_k b_k H_jk P_{b-e_k}.
template <class T>
T hermite_factor(const MultiIndex& alpha, std::size_t d, const std::array<T, kMaxGridDim>& g,
                 const std::array<double, kMaxGridDim * kMaxGridDim>& hess) {
    std::array<std::size_t, kMaxGridDim> stride{};
    std::size_t total = 1;
    for (std::size_t a = d; a-- > 0;) {
        stride[a] = total;
        total *= static_cast<std::size_t>(alpha[a]) + 1;
    }
    std::vector<T> table(total, T(0));
    table[0] = T(1);
    for (std::size_t flat = 1; flat < total; ++flat) {
        std::array<int, kMaxGridDim> beta{};
        std::size_t rest = flat;
        for (std::size_t a = 0; a < d; ++a) {
            beta[a] = static_cast<int>(rest / stride[a]);
            rest %= stride[a];
        }
        std::size_t j = d - 1;
        while (beta[j] == 0) --j;
        --beta[j];
        const std::size_t parent = flat - stride[j];
        T v = g[j] * table[parent];
        for (std::size_t k = 0; k < d; ++k) {
            if (beta[k] > 0) v += static_cast<double>(beta[k]) * hess[j * d + k] * table[parent - stride[k]];
        }
        table[flat] = v;
    }
    return table[total - 1];
}

// Per-component log-magnitude and phase of w_c P_c e^{Q_c}.
struct LogTerm {
    double log_abs;
    double sign_or_phase;
};

// log |sum_c z_c| where z_c = exp(log_abs_c + i phase_c).
double log_abs_sum_complex(const std::vector<LogTerm>& terms) {
    double top = kNegInf;
    for (const auto& t : terms) top = std::max(top, t.log_abs);
    if (top == kNegInf) return kNegInf;
    cd acc = 0.0;
    for (const auto& t : terms) {
        if (t.log_abs == kNegInf) continue;
        acc += std::polar(std::exp(t.log_abs - top), t.sign_or_phase);
    }
    const double m = std::abs(acc);
    return m > 0.0 ? top + std::log(m) : kNegInf;
}

double log_abs_sum_real(const std::vector<LogTerm>& terms) {
    double top = kNegInf;
    for (const auto& t : terms) top = std::max(top, t.log_abs);
    if (top == kNegInf) return kNegInf;
    double acc = 0.0;
    for (const auto& t : terms) {
        if (t.log_abs == kNegInf) continue;
        acc += t.sign_or_phase * std::exp(t.log_abs - top);
    }
    return acc != 0.0 ? top + std::log(std::abs(acc)) : kNegInf;
}

void check_derivative_dim(const GaussianMixture& dist, const MultiIndex& alpha) {
    require_alpha(alpha, std::min(dist.dim(), kMaxGridDim));
    if (order(alpha) > 0) {
        detail::require(dist.dim() <= kMaxGridDim, "closed-form derivatives are available for d <= 3");
    }
}

std::vector<LogTerm> char_terms(const GaussianMixture& dist, std::span<const double> u, const MultiIndex& alpha) {
    const std::size_t d = dist.dim();
    std::vector<LogTerm> terms;
    terms.reserve(dist.size());
    for (std::size_t c = 0; c < dist.size(); ++c) {
        const auto& comp = dist.component(c);
        double mu = 0.0;
        double quad = 0.0;
        std::array<cd, kMaxGridDim> g{};
        std::array<double, kMaxGridDim * kMaxGridDim> hess{};
        for (std::size_t a = 0; a < d; ++a) {
            const auto ia = static_cast<Eigen::Index>(a);
            mu += u[a] * comp.mean(ia);
            double su = 0.0;
            for (std::size_t b = 0; b < d; ++b) su += comp.cov(ia, static_cast<Eigen::Index>(b)) * u[b];
            quad += u[a] * su;
            if (a < kMaxGridDim && d <= kMaxGridDim) {
                g[a] = cd(-su, comp.mean(ia));
                for (std::size_t b = 0; b < d; ++b) hess[a * d + b] = -comp.cov(ia, static_cast<Eigen::Index>(b));
            }
        }
        cd poly = 1.0;
        if (order(alpha) > 0) poly = hermite_factor<cd>(alpha, d, g, hess);
        const double mag = std::abs(poly);
        const double la = mag > 0.0 ? std::log(comp.weight) + std::log(mag) - 0.5 * quad : kNegInf;
        terms.push_back({la, mu + std::arg(poly)});
    }
    return terms;
}

std::vector<LogTerm> density_terms(const GaussianMixture& dist, std::span<const double> x, const MultiIndex& alpha) {
    const std::size_t d = dist.dim();
    std::vector<LogTerm> terms;
    terms.reserve(dist.size());
    for (std::size_t c = 0; c < dist.size(); ++c) {
        const auto& comp = dist.component(c);
        double poly = 1.0;
        if (order(alpha) > 0) {
            const auto prec = dist.precision(c);
            std::array<double, kMaxGridDim> g{};
            std::array<double, kMaxGridDim * kMaxGridDim> hess{};
            for (std::size_t a = 0; a < d; ++a) {
                double acc = 0.0;
                for (std::size_t b = 0; b < d; ++b) {
                    acc += prec[a * d + b] * (x[b] - comp.mean(static_cast<Eigen::Index>(b)));
                    hess[a * d + b] = -prec[a * d + b];
                }
                g[a] = -acc;
            }
            poly = hermite_factor<double>(alpha, d, g, hess);
        }
        const double la = poly != 0.0 ? std::log(comp.weight) + std::log(std::abs(poly)) + dist.log_normalizer(c) +
                                             dist.quadratic_form(c, x)
                                       : kNegInf;
        terms.push_back({la, poly < 0.0 ? -1.0 : 1.0});
    }
    return terms;
}

void check_dim(std::size_t want, std::size_t got) {
    if (want != got) {
        std::ostringstream os;
        os << "dimension mismatch: expected " << want << ", got " << got;
        detail::fail_precondition(os.str());
    }
}

std::vector<cd> to_complex(std::span<const double> v) { return {v.begin(), v.end()}; }

// d^alpha phi on the dual grid from raw density samples.
std::vector<cd> char_derivative_raw(const GridSpec& spec, std::span<const double> f, const MultiIndex& alpha) {
    std::vector<cd> data(spec.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = spec.point(i);
        cd w = 1.0;
        for (std::size_t a = 0; a < spec.dim(); ++a) w *= std::pow(cd(0.0, x[a]), alpha[a]);
        data[i] = w * f[i];
    }
    data = forward(spec, std::move(data));
    drop_roundoff(data);
    return data;
}

// max of w over nodes in the outer 10% of any axis, relative to the global max.
template <class Coord>
double edge_ratio(const GridSpec& spec, std::span<const double> w, Coord coord, std::span<const double> center,
                  std::span<const double> half) {
    double peak = 0.0;
    double edge = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        peak = std::max(peak, w[i]);
        const auto x = coord(i);
        bool outer = false;
        for (std::size_t a = 0; a < spec.dim(); ++a) outer = outer || std::abs(x[a] - center[a]) >= 0.9 * half[a];
        if (outer) edge = std::max(edge, w[i]);
    }
    return peak > 0.0 ? edge / peak : 0.0;
}

std::vector<double> filtered_abs(std::vector<cd> v) {
    drop_roundoff(v);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]);
    return out;
}

// Magnitudes on the dual grid with transform roundoff removed. For a resolved law the outer
// shell of the dual grid holds roundoff only, so anything within kEdgeNoiseMargin of the
// shell's largest value is noise as well.
std::vector<double> denoised_abs(const GridSpec& spec, const std::vector<cd>& v) {
    auto out = filtered_abs(v);
    double edge = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto u = spec.frequency_point(i);
        bool outer = false;
        for (std::size_t a = 0; a < spec.dim(); ++a) outer = outer || std::abs(u[a]) >= 0.9 * spec.frequency_limit(a);
        if (outer) edge = std::max(edge, out[i]);
    }
    const double floor = kEdgeNoiseMargin * edge;
    for (auto& x : out) {
        if (x < floor) x = 0.0;
    }
    return out;
}

void check_frequency_decay(const CharGrid& phi, int K) {
    const auto& spec = phi.spec;
    auto mag = filtered_abs(phi.values);
    for (std::size_t i = 0; i < mag.size(); ++i) {
        mag[i] *= std::pow(norm_of(spec.frequency_point(i), spec.dim()), K);
    }
    std::vector<double> center(spec.dim(), 0.0);
    std::vector<double> half(spec.dim());
    for (std::size_t a = 0; a < spec.dim(); ++a) half[a] = spec.frequency_limit(a);
    const double ratio = edge_ratio(spec, mag, [&](std::size_t i) { return spec.frequency_point(i); }, center, half);
    if (ratio > kEdgeTolerance) {
        std::ostringstream os;
        os << "spectral differentiation of order " << K << " is unstable: |u|^K |phi| at the grid edge is " << ratio
           << " of its peak (refine the grid)";
        throw NumericalError(os.str());
    }
}

void check_space_decay(const GridSpec& spec, std::span<const double> f, int K) {
    std::vector<double> w(f.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::abs(f[i]) * std::pow(norm_of(spec.point(i), spec.dim()), K);
    std::vector<double> center(spec.dim());
    std::vector<double> half(spec.dim());
    for (std::size_t a = 0; a < spec.dim(); ++a) {
        center[a] = 0.5 * (spec.lo[a] + spec.hi[a]);
        half[a] = 0.5 * (spec.hi[a] - spec.lo[a]);
    }
    const double ratio = edge_ratio(spec, w, [&](std::size_t i) { return spec.point(i); }, center, half);
    if (ratio > kEdgeTolerance) {
        std::ostringstream os;
        os << "frequency-side differentiation of order " << K << " is unstable: |x|^K |f| at the box edge is "
           << ratio << " of its peak (enlarge the box)";
        throw NumericalError(os.str());
    }
}

// Fold one derivative grid into the table row k.
template <class Coord>
void accumulate_row(PolyEnvelopeTable& table, int k, std::span<const double> mag, Coord coord, std::size_t d) {
    for (std::size_t i = 0; i < mag.size(); ++i) {
        if (mag[i] == 0.0) continue;
        const double w = 1.0 + norm_of(coord(i), d);
        double v = mag[i];
        for (int l = 0; l <= table.L; ++l) {
            table.at(k, l) = std::max(table.at(k, l), v);
            v *= w;
        }
    }
}

PolyEnvelopeTable empty_table(EnvelopeSide side, int K, int L) {
    detail::require(K >= 0 && L >= 0, "envelope orders must be nonnegative");
    PolyEnvelopeTable t;
    t.side = side;
    t.K = K;
    t.L = L;
    t.values.assign(static_cast<std::size_t>((K + 1) * (L + 1)), 0.0);
    return t;
}

void check_finite(const PolyEnvelopeTable& t) {
    for (double v : t.values) {
        if (!std::isfinite(v)) throw NumericalError("envelope constant overflowed double precision");
    }
}

double sphere_area(std::size_t d) {
    const double h = 0.5 * static_cast<double>(d);
    return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

ExpEnvelopeEntry fit_exponential_tail(const GridSpec& spec, std::span<const double> log_mag, int k) {
    const std::size_t d = spec.dim();
    double peak = kNegInf;
    for (double v : log_mag) peak = std::max(peak, v);
    if (!std::isfinite(peak)) throw HypothesisError("derivative of order " + std::to_string(k) + " vanishes on the grid");
    const double threshold = peak + std::log(1e-6);

    std::vector<double> radius(log_mag.size());
    double u_res = 0.0;
    for (std::size_t i = 0; i < log_mag.size(); ++i) {
        radius[i] = norm_of(spec.frequency_point(i), d);
        if (log_mag[i] >= threshold) u_res = std::max(u_res, radius[i]);
    }
    double min_u = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < d; ++a) min_u = std::min(min_u, spec.frequency_limit(a));
    if (u_res > 0.9 * min_u) {
        std::ostringstream os;
        os << "order " << k << ": resolved band (|u| <= " << u_res << ") reaches the grid edge " << min_u
           << "; exponential decay is not certified";
        throw HypothesisError(os.str());
    }

    // Least squares of log|phi^(k)| against |u| on the outer quarter of the band.
    double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < log_mag.size(); ++i) {
        if (radius[i] < 0.75 * u_res || radius[i] > u_res || !std::isfinite(log_mag[i])) continue;
        n += 1.0;
        sx += radius[i];
        sy += log_mag[i];
        sxx += radius[i] * radius[i];
        sxy += radius[i] * log_mag[i];
    }
    const double den = n * sxx - sx * sx;
    if (n < 2.0 || !(den > 0.0)) {
        throw HypothesisError("order " + std::to_string(k) + ": too few resolved nodes to fit the tail");
    }
    const double slope = (n * sxy - sx * sy) / den;
    const double intercept = (sy - slope * sx) / n;
    if (!(slope < 0.0)) {
        std::ostringstream os;
        os << "order " << k << ": fitted tail slope " << slope << " is not negative; exponential decay is not certified";
        throw HypothesisError(os.str());
    }

    ExpEnvelopeEntry e;
    e.r = -0.5 * slope;
    e.slope = slope;
    e.intercept = intercept;
    e.u_resolved = u_res;
    const double cell = spec.frequency_cell_volume();
    double body = 0.0;
    for (std::size_t i = 0; i < log_mag.size(); ++i) {
        if (radius[i] <= u_res && std::isfinite(log_mag[i])) body += std::exp(log_mag[i] + e.r * radius[i]) * cell;
    }
    // \int_{|u|>R} e^{a + s|u|} e^{r|u|} du = omega_d e^a Gamma(d, beta R) / beta^d, beta = -s/2.
    const double beta = -0.5 * slope;
    const double dd = static_cast<double>(d);
    const double tail =
        sphere_area(d) * std::exp(intercept) * boost::math::tgamma(dd, beta * u_res) / std::pow(beta, dd);
    e.c = body + tail;
    if (!std::isfinite(e.c)) throw HypothesisError("order " + std::to_string(k) + ": envelope integral diverged");
    return e;
}

}  // namespace

// ---------------------------------------------------------------------------

int order(const MultiIndex& alpha) {
    int s = 0;
    for (int a : alpha) s += a;
    return s;
}

std::vector<MultiIndex> multi_indices(std::size_t d, int k) {
    detail::require(d >= 1 && d <= kMaxGridDim, "multi-indices are available for d <= 3");
    detail::require(k >= 0, "derivative order must be nonnegative");
    std::vector<MultiIndex> out;
    MultiIndex cur{};
    auto rec = [&](auto&& self, std::size_t axis, int left) -> void {
        if (axis + 1 == d) {
            cur[axis] = left;
            out.push_back(cur);
            cur[axis] = 0;
            return;
        }
        for (int v = left; v >= 0; --v) {
            cur[axis] = v;
            self(self, axis + 1, left - v);
        }
        cur[axis] = 0;
    };
    rec(rec, 0, k);
    return out;
}

double multinomial(const MultiIndex& alpha) {
    double v = std::tgamma(order(alpha) + 1.0);
    for (int a : alpha) v /= std::tgamma(a + 1.0);
    return v;
}

std::complex<double> char_fn_analytic(const GaussianMixture& dist, std::span<const double> u) {
    check_dim(dist.dim(), u.size());
    cd acc = 0.0;
    const std::size_t d = dist.dim();
    for (const auto& comp : dist.components()) {
        double mu = 0.0;
        double quad = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            const auto ia = static_cast<Eigen::Index>(a);
            mu += u[a] * comp.mean(ia);
            double su = 0.0;
            for (std::size_t b = 0; b < d; ++b) su += comp.cov(ia, static_cast<Eigen::Index>(b)) * u[b];
            quad += u[a] * su;
        }
        acc += comp.weight * std::polar(std::exp(-0.5 * quad), mu);
    }
    return acc;
}

std::complex<double> char_fn_derivative(const GaussianMixture& dist, std::span<const double> u,
                                        const MultiIndex& alpha) {
    check_dim(dist.dim(), u.size());
    check_derivative_dim(dist, alpha);
    cd acc = 0.0;
    for (const auto& t : char_terms(dist, u, alpha)) {
        if (t.log_abs != kNegInf) acc += std::polar(std::exp(t.log_abs), t.sign_or_phase);
    }
    return acc;
}

double log_abs_char_fn_derivative(const GaussianMixture& dist, std::span<const double> u, const MultiIndex& alpha) {
    check_dim(dist.dim(), u.size());
    check_derivative_dim(dist, alpha);
    return log_abs_sum_complex(char_terms(dist, u, alpha));
}

double density_derivative_analytic(const GaussianMixture& dist, std::span<const double> x, const MultiIndex& alpha) {
    check_dim(dist.dim(), x.size());
    check_derivative_dim(dist, alpha);
    double acc = 0.0;
    for (const auto& t : density_terms(dist, x, alpha)) {
        if (t.log_abs != kNegInf) acc += t.sign_or_phase * std::exp(t.log_abs);
    }
    return acc;
}

double log_abs_density_derivative(const GaussianMixture& dist, std::span<const double> x, const MultiIndex& alpha) {
    check_dim(dist.dim(), x.size());
    check_derivative_dim(dist, alpha);
    return log_abs_sum_real(density_terms(dist, x, alpha));
}

std::complex<double> delta_p_analytic(const GaussianMixture& dist, std::span<const double> u, int p) {
    require_even_p(p);
    cd acc = 0.0;
    for (std::size_t j = 0; j < dist.dim(); ++j) {
        MultiIndex alpha{};
        if (j < kMaxGridDim) alpha[j] = p;
        acc += char_fn_derivative(dist, u, alpha);
    }
    return acc;
}

CharGrid char_fn_grid(const GridDensity& f) {
    return CharGrid{f.spec(), forward(f.spec(), to_complex(f.values())), true};
}

CharGrid char_fn_on_grid(const GaussianMixture& dist, const GridSpec& spec) {
    spec.validate();
    check_dim(dist.dim(), spec.dim());
    CharGrid out{spec, std::vector<cd>(spec.size()), true};
    for (std::size_t j = 0; j < out.values.size(); ++j) {
        const auto u = spec.frequency_point(j);
        out.values[j] = char_fn_analytic(dist, {u.data(), spec.dim()});
    }
    return out;
}

GridField inverse_char_fn(const CharGrid& phi) {
    phi.spec.validate();
    detail::require(phi.values.size() == phi.spec.size(), "characteristic grid has the wrong number of values");
    const auto back = inverse(phi.spec, phi.values);
    GridField out{phi.spec, std::vector<double>(back.size())};
    for (std::size_t i = 0; i < back.size(); ++i) out.values[i] = back[i].real();
    return out;
}

CharGrid delta_p_char(const GridDensity& f, int p) {
    require_even_p(p);
    const auto& spec = f.spec();
    std::vector<cd> data(spec.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = spec.point(i);
        double w = 0.0;
        for (std::size_t a = 0; a < spec.dim(); ++a) w += std::pow(x[a], p);
        data[i] = w * f.values()[i];
    }
    data = forward(spec, std::move(data));
    // i^p is +-1 for even p.
    const double ip = (p % 4 == 0) ? 1.0 : -1.0;
    for (auto& z : data) z *= ip;
    return CharGrid{spec, std::move(data), false};
}

CharGrid delta_p_char(const GaussianMixture& dist, const GridSpec& spec, int p) {
    require_even_p(p);
    return delta_p_char(discretize(dist, spec), p);
}

namespace {
GridField reconstruct_from(const CharGrid& da, const CharGrid& db, int p) {
    std::vector<cd> diff(da.values.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = da.values[j] - db.values[j];
    const auto back = inverse(da.spec, std::move(diff));
    const double mp = (p % 4 == 0) ? 1.0 : -1.0;  // (-i)^p for even p
    GridField out{da.spec, std::vector<double>(back.size())};
    for (std::size_t i = 0; i < back.size(); ++i) out.values[i] = mp * back[i].real();
    return out;
}
}  // namespace

GridField weighted_diff_reconstruct(const GaussianMixture& a, const GaussianMixture& b, const GridSpec& spec, int p) {
    detail::require(a.dim() == b.dim(), "weighted_diff_reconstruct: distributions have different dimensions");
    return reconstruct_from(delta_p_char(a, spec, p), delta_p_char(b, spec, p), p);
}

GridField weighted_diff_reconstruct(const GridDensity& a, const GridDensity& b, int p) {
    detail::require(a.spec() == b.spec(), "weighted_diff_reconstruct: grids differ");
    return reconstruct_from(delta_p_char(a, p), delta_p_char(b, p), p);
}

GridField spectral_density_derivative(const CharGrid& phi, const MultiIndex& alpha) {
    const auto& spec = phi.spec;
    require_alpha(alpha, spec.dim());
    std::vector<cd> data = phi.values;
    drop_roundoff(data);
    for (std::size_t j = 0; j < data.size(); ++j) {
        const auto u = spec.frequency_point(j);
        cd w = 1.0;
        for (std::size_t a = 0; a < spec.dim(); ++a) w *= std::pow(cd(0.0, -u[a]), alpha[a]);
        data[j] *= w;
    }
    const auto back = inverse(spec, std::move(data));
    GridField out{spec, std::vector<double>(back.size())};
    for (std::size_t i = 0; i < back.size(); ++i) out.values[i] = back[i].real();
    return out;
}

CharGrid spectral_char_derivative(const GridDensity& f, const MultiIndex& alpha) {
    require_alpha(alpha, f.spec().dim());
    return CharGrid{f.spec(), char_derivative_raw(f.spec(), f.values(), alpha), order(alpha) == 0};
}

// ---------------------------------------------------------------------------
// Polynomial envelopes

double PolyEnvelopeTable::at(int k, int l) const {
    if (k < 0 || k > K || l < 0 || l > L) {
        std::ostringstream os;
        os << "envelope entry (k=" << k << ", l=" << l << ") is outside the table (K=" << K << ", L=" << L << ")";
        detail::fail_precondition(os.str());
    }
    return values[static_cast<std::size_t>(k * (L + 1) + l)];
}

double& PolyEnvelopeTable::at(int k, int l) {
    const auto& self = *this;
    (void)self.at(k, l);
    return values[static_cast<std::size_t>(k * (L + 1) + l)];
}

PolyEnvelopeTable poly_envelope(const GridDensity& f, int K, int L) {
    auto table = empty_table(EnvelopeSide::Density, K, L);
    const auto& spec = f.spec();
    const auto phi = char_fn_grid(f);
    check_frequency_decay(phi, K);
    auto coord = [&](std::size_t i) { return spec.point(i); };
    std::vector<double> mag(spec.size());
    for (int k = 0; k <= K; ++k) {
        for (const auto& alpha : multi_indices(spec.dim(), k)) {
            if (k == 0) {
                for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = f.values()[i];
            } else {
                const auto g = spectral_density_derivative(phi, alpha);
                for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(g.values[i]);
            }
            accumulate_row(table, k, mag, coord, spec.dim());
        }
    }
    check_finite(table);
    return table;
}

PolyEnvelopeTable poly_envelope(const CharGrid& phi, int K, int L) {
    auto table = empty_table(EnvelopeSide::Frequency, K, L);
    const auto& spec = phi.spec;
    const auto f = inverse_char_fn(phi);
    check_space_decay(spec, f.values, K);
    auto coord = [&](std::size_t i) { return spec.frequency_point(i); };
    for (int k = 0; k <= K; ++k) {
        for (const auto& alpha : multi_indices(spec.dim(), k)) {
            const auto mag = denoised_abs(spec, k == 0 ? phi.values : char_derivative_raw(spec, f.values, alpha));
            accumulate_row(table, k, mag, coord, spec.dim());
        }
    }
    check_finite(table);
    return table;
}

PolyEnvelopeTable poly_envelope_analytic(const GaussianMixture& dist, const GridSpec& spec, EnvelopeSide side,
                                         int K, int L) {
    spec.validate();
    check_dim(dist.dim(), spec.dim());
    auto table = empty_table(side, K, L);
    const std::size_t d = spec.dim();
    std::vector<double> best(table.values.size(), kNegInf);
    for (int k = 0; k <= K; ++k) {
        const auto alphas = multi_indices(d, k);
        for (std::size_t i = 0; i < spec.size(); ++i) {
            const auto x = side == EnvelopeSide::Density ? spec.point(i) : spec.frequency_point(i);
            const double lw = std::log1p(norm_of(x, d));
            for (const auto& alpha : alphas) {
                const double lg = side == EnvelopeSide::Density ? log_abs_density_derivative(dist, {x.data(), d}, alpha)
                                                                : log_abs_char_fn_derivative(dist, {x.data(), d}, alpha);
                if (lg == kNegInf) continue;
                for (int l = 0; l <= L; ++l) {
                    auto& b = best[static_cast<std::size_t>(k * (L + 1) + l)];
                    b = std::max(b, lg + l * lw);
                }
            }
        }
    }
    for (std::size_t i = 0; i < best.size(); ++i) table.values[i] = best[i] == kNegInf ? 0.0 : std::exp(best[i]);
    check_finite(table);
    return table;
}

PolyEnvelopeTable sum_tables(const PolyEnvelopeTable& a, const PolyEnvelopeTable& b) {
    detail::require(a.side == b.side && a.K == b.K && a.L == b.L, "envelope tables have different layouts");
    PolyEnvelopeTable out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
    out.empirical = a.empirical || b.empirical;
    return out;
}

// ---------------------------------------------------------------------------
// Exponential envelopes

ExpEnvelopeTable exp_envelope(const CharGrid& phi, int K) {
    detail::require(K >= 0, "envelope order must be nonnegative");
    const auto& spec = phi.spec;
    ExpEnvelopeTable table;
    std::vector<double> f;
    if (K > 0) f = inverse_char_fn(phi).values;
    for (int k = 0; k <= K; ++k) {
        std::vector<double> sq(spec.size(), 0.0);
        for (const auto& alpha : multi_indices(spec.dim(), k)) {
            const auto mag = filtered_abs(k == 0 ? phi.values : char_derivative_raw(spec, f, alpha));
            const double w = multinomial(alpha);
            for (std::size_t i = 0; i < sq.size(); ++i) sq[i] += w * mag[i] * mag[i];
        }
        std::vector<double> log_mag(sq.size());
        for (std::size_t i = 0; i < sq.size(); ++i) log_mag[i] = sq[i] > 0.0 ? 0.5 * std::log(sq[i]) : kNegInf;
        table.entries.push_back(fit_exponential_tail(spec, log_mag, k));
    }
    return table;
}

ExpEnvelopeTable exp_envelope_analytic(const GaussianMixture& dist, const GridSpec& spec, int K) {
    detail::require(K >= 0, "envelope order must be nonnegative");
    spec.validate();
    check_dim(dist.dim(), spec.dim());
    const std::size_t d = spec.dim();
    ExpEnvelopeTable table;
    for (int k = 0; k <= K; ++k) {
        const auto alphas = multi_indices(d, k);
        std::vector<double> log_mag(spec.size());
        for (std::size_t i = 0; i < spec.size(); ++i) {
            const auto u = spec.frequency_point(i);
            std::vector<LogTerm> terms;
            for (const auto& alpha : alphas) {
                const double lg = log_abs_char_fn_derivative(dist, {u.data(), d}, alpha);
                terms.push_back({lg == kNegInf ? kNegInf : 2.0 * lg + std::log(multinomial(alpha)), 1.0});
            }
            const double ls = log_abs_sum_real(terms);
            log_mag[i] = ls == kNegInf ? kNegInf : 0.5 * ls;
        }
        table.entries.push_back(fit_exponential_tail(spec, log_mag, k));
    }
    return table;
}

ExpEnvelopeTable combine_exp(const ExpEnvelopeTable& a, const ExpEnvelopeTable& b) {
    detail::require(a.entries.size() == b.entries.size(), "exponential envelope tables have different orders");
    ExpEnvelopeTable out;
    out.empirical = a.empirical || b.empirical;
    for (std::size_t k = 0; k < a.entries.size(); ++k) {
        ExpEnvelopeEntry e;
        // \int |phi_a| e^{r|u|} <= c_a for any r <= r_a, likewise for b.
        e.r = std::min(a.entries[k].r, b.entries[k].r);
        e.c = a.entries[k].c + b.entries[k].c;
        e.u_resolved = std::max(a.entries[k].u_resolved, b.entries[k].u_resolved);
        e.slope = std::max(a.entries[k].slope, b.entries[k].slope);
        e.intercept = std::max(a.entries[k].intercept, b.entries[k].intercept);
        out.entries.push_back(e);
    }
    return out;
}

}  // namespace wtv
