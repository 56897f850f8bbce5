#include "wtv/distributions.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "wtv/errors.hpp"
#include "wtv/quadrature.hpp"

namespace wtv {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

bool is_integer(double p) { return std::abs(p - std::round(p)) < 1e-12; }

void check_dim(const GaussianMixture& dist, std::size_t got) {
    if (got != dist.dim()) {
        std::ostringstream os;
        os << "dimension mismatch: distribution has d=" << dist.dim() << ", argument has " << got;
        detail::fail_precondition(os.str());
    }
}

// int_0^inf x^n N(x; m, s^2) dx via the integration-by-parts recursion
// I_n = m I_{n-1} + (n-1) s^2 I_{n-2}, with I_1 picking up the boundary term s^2 f(0).
double half_line_moment(int n, double m, double s) {
    const double i0 = normal_cdf(m / s);
    if (n == 0) return i0;
    const double f0 = normal_pdf(m / s) / s;
    double prev = i0;
    double cur = m * i0 + s * s * f0;
    for (int k = 2; k <= n; ++k) {
        const double next = m * cur + (k - 1) * s * s * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double abs_moment_1d_integer(double m, double s, int n) {
    return half_line_moment(n, m, s) + half_line_moment(n, -m, s);
}

double abs_moment_1d_quadrature(double m, double s, double p) {
    using boost::math::quadrature::gauss_kronrod;
    const double split = -m / s;
    auto f = [&](double z) {
        const double x = m + s * z;
        return std::pow(std::abs(x), p) * normal_pdf(z);
    };
    const double inf = std::numeric_limits<double>::infinity();
    const double left = gauss_kronrod<double, 61>::integrate(f, -inf, split, 20, 1e-13);
    const double right = gauss_kronrod<double, 61>::integrate(f, split, inf, 20, 1e-13);
    return left + right;
}

// E[(X^T X)^k] for X ~ N(m, S) from the cumulants of the quadratic form
// kappa_r = 2^{r-1} (r-1)! (tr S^r + r m^T S^{r-1} m).
double even_norm_moment(const MixtureComponent& c, int k) {
    std::vector<double> kappa(static_cast<std::size_t>(k) + 1, 0.0);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(c.cov.rows(), c.cov.cols());  // S^{r-1}
    double factorial = 1.0;                                                          // (r-1)!
    for (int r = 1; r <= k; ++r) {
        const double mt = c.mean.dot(power * c.mean);
        power = power * c.cov;
        kappa[static_cast<std::size_t>(r)] = std::ldexp(factorial, r - 1) * (power.trace() + r * mt);
        factorial *= r;
    }
    std::vector<double> mu(static_cast<std::size_t>(k) + 1, 0.0);
    mu[0] = 1.0;
    for (int j = 1; j <= k; ++j) {
        double acc = 0.0;
        for (int i = 0; i < j; ++i) {
            acc += boost::math::binomial_coefficient<double>(static_cast<unsigned>(j - 1), static_cast<unsigned>(i)) *
                   kappa[static_cast<std::size_t>(j - i)] * mu[static_cast<std::size_t>(i)];
        }
        mu[static_cast<std::size_t>(j)] = acc;
    }
    return mu[static_cast<std::size_t>(k)];
}

// Spherical average of the component density at radius r, times the sphere area.
double shell_integral(const GaussianMixture& dist, std::size_t c, double r) {
    const std::size_t d = dist.dim();
    std::array<double, kMaxMixtureDim> x{};
    double acc = 0.0;
    if (d == 2) {
        constexpr std::size_t kAngles = 256;
        for (std::size_t k = 0; k < kAngles; ++k) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / kAngles;
            x[0] = r * std::cos(th);
            x[1] = r * std::sin(th);
            acc += std::exp(dist.log_normalizer(c) + dist.quadratic_form(c, {x.data(), d}));
        }
        return acc * 2.0 * std::numbers::pi / kAngles;
    }
    const auto& gl = gauss_legendre_rule(48);
    constexpr std::size_t kAzimuth = 96;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double ct = gl.nodes[i];
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (std::size_t k = 0; k < kAzimuth; ++k) {
            const double ph = 2.0 * std::numbers::pi * static_cast<double>(k) / kAzimuth;
            x[0] = r * st * std::cos(ph);
            x[1] = r * st * std::sin(ph);
            x[2] = r * ct;
            acc += gl.weights[i] * std::exp(dist.log_normalizer(c) + dist.quadratic_form(c, {x.data(), d}));
        }
    }
    return acc * 2.0 * std::numbers::pi / kAzimuth;
}

double radial_abs_moment(const GaussianMixture& dist, std::size_t c, double p) {
    using boost::math::quadrature::gauss_kronrod;
    const double d = static_cast<double>(dist.dim());
    auto f = [&](double r) {
        if (r == 0.0) return 0.0;
        return std::pow(r, p + d - 1.0) * shell_integral(dist, c, r);
    };
    return gauss_kronrod<double, 31>::integrate(f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-11);
}

double component_sd(const MixtureComponent& c, std::size_t axis) {
    const auto a = static_cast<Eigen::Index>(axis);
    return std::sqrt(c.cov(a, a));
}

}  // namespace

// ---------------------------------------------------------------------------
// GaussianMixture

GaussianMixture::GaussianMixture(std::size_t dim, std::vector<MixtureComponent> components)
    : dim_(dim), components_(std::move(components)) {
    detail::require(dim_ >= 1, "mixture dimension must be at least 1");
    detail::require(dim_ <= kMaxMixtureDim, "mixture dimension exceeds the supported maximum");
    detail::require(!components_.empty(), "mixture needs at least one component");
    const auto d = static_cast<Eigen::Index>(dim_);
    double total = 0.0;
    for (const auto& c : components_) {
        detail::require(c.weight > 0.0 && c.weight <= 1.0, "mixture weights must lie in (0, 1]");
        detail::require(c.mean.size() == d, "component mean has the wrong length");
        detail::require(c.cov.rows() == d && c.cov.cols() == d, "component covariance has the wrong shape");
        detail::require(c.mean.allFinite() && c.cov.allFinite(), "component parameters must be finite");
        const double scale = std::max(1.0, c.cov.cwiseAbs().maxCoeff());
        detail::require((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                        "component covariance is not symmetric");
        total += c.weight;
    }
    detail::require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1");

    cache_.reserve(components_.size());
    for (const auto& c : components_) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.cov, Eigen::EigenvaluesOnly);
        detail::require(eig.eigenvalues().minCoeff() > 0.0, "component covariance is not positive definite");
        Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
        detail::require(llt.info() == Eigen::Success, "component covariance is not positive definite");
        const Eigen::MatrixXd l = llt.matrixL();
        const Eigen::MatrixXd linv = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
        const Eigen::MatrixXd prec = linv.transpose() * linv;
        Cache cache;
        cache.precision.resize(dim_ * dim_);
        cache.chol_inverse.resize(dim_ * dim_);
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                cache.precision[static_cast<std::size_t>(i * d + j)] = prec(i, j);
                cache.chol_inverse[static_cast<std::size_t>(i * d + j)] = linv(i, j);
            }
        }
        const double log_det = 2.0 * l.diagonal().array().log().sum();
        cache.log_norm = -0.5 * (static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi) + log_det);
        cache_.push_back(std::move(cache));
    }
}

GaussianMixture GaussianMixture::normal(double mean, double variance) {
    MixtureComponent c;
    c.weight = 1.0;
    c.mean = Eigen::VectorXd::Constant(1, mean);
    c.cov = Eigen::MatrixXd::Constant(1, 1, variance);
    return GaussianMixture(1, {c});
}

GaussianMixture GaussianMixture::isotropic(const Eigen::VectorXd& mean, double variance) {
    const auto d = mean.size();
    MixtureComponent c{1.0, mean, variance * Eigen::MatrixXd::Identity(d, d)};
    return GaussianMixture(static_cast<std::size_t>(d), {c});
}

double GaussianMixture::quadratic_form(std::size_t c, std::span<const double> x) const {
    const auto& m = components_[c].mean;
    const auto& linv = cache_[c].chol_inverse;
    std::array<double, kMaxMixtureDim> diff{};
    for (std::size_t i = 0; i < dim_; ++i) diff[i] = x[i] - m(static_cast<Eigen::Index>(i));
    double q = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        double y = 0.0;
        for (std::size_t j = 0; j <= i; ++j) y += linv[i * dim_ + j] * diff[j];
        q += y * y;
    }
    return -0.5 * q;
}

double GaussianMixture::max_axis_sd(std::size_t axis) const {
    double s = 0.0;
    for (const auto& c : components_) s = std::max(s, component_sd(c, axis));
    return s;
}

double GaussianMixture::density(std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t c = 0; c < components_.size(); ++c) {
        acc += components_[c].weight * std::exp(cache_[c].log_norm + quadratic_form(c, x));
    }
    return acc;
}

double GaussianMixture::cdf(double x) const {
    detail::require(dim_ == 1, "cdf requires a one-dimensional mixture");
    double acc = 0.0;
    for (const auto& c : components_) acc += c.weight * normal_cdf((x - c.mean(0)) / std::sqrt(c.cov(0, 0)));
    return acc;
}

double GaussianMixture::survival(double x) const {
    detail::require(dim_ == 1, "survival requires a one-dimensional mixture");
    double acc = 0.0;
    for (const auto& c : components_) acc += c.weight * normal_cdf(-(x - c.mean(0)) / std::sqrt(c.cov(0, 0)));
    return acc;
}

// ---------------------------------------------------------------------------
// AtomSet

AtomSet::AtomSet(std::size_t dim, std::vector<double> locations, std::vector<double> masses)
    : dim_(dim), locations_(std::move(locations)), masses_(std::move(masses)) {
    detail::require(dim_ >= 1, "atom set dimension must be at least 1");
    detail::require(!masses_.empty(), "atom set must contain at least one atom");
    detail::require(locations_.size() == masses_.size() * dim_, "atom locations do not match the atom count");
    long double total = 0.0L;
    for (double m : masses_) {
        detail::require(m > 0.0 && m <= 1.0, "atom masses must lie in (0, 1]");
        total += m;
    }
    detail::require(std::abs(static_cast<double>(total) - 1.0) <= 1e-12, "atom masses must sum to 1");
    for (double v : locations_) detail::require(std::isfinite(v), "atom locations must be finite");
}

// ---------------------------------------------------------------------------
// Operations

double density_eval(const GaussianMixture& dist, std::span<const double> x) {
    check_dim(dist, x.size());
    return dist.density(x);
}

double abs_moment(const GaussianMixture& dist, double p) {
    detail::require(p >= 0.0 && std::isfinite(p), "moment order must be finite and nonnegative");
    if (p == 0.0) return 1.0;
    const bool integer = is_integer(p);
    const int n = static_cast<int>(std::round(p));
    double acc = 0.0;
    for (std::size_t c = 0; c < dist.size(); ++c) {
        const auto& comp = dist.component(c);
        double value = 0.0;
        if (dist.dim() == 1) {
            const double m = comp.mean(0);
            const double s = std::sqrt(comp.cov(0, 0));
            value = integer ? abs_moment_1d_integer(m, s, n) : abs_moment_1d_quadrature(m, s, p);
        } else if (integer && n % 2 == 0) {
            value = even_norm_moment(comp, n / 2);
        } else {
            detail::require(dist.dim() <= 3, "fractional moments are only available for d <= 3");
            value = radial_abs_moment(dist, c, p);
        }
        acc += comp.weight * value;
    }
    return acc;
}

double marginal_abs_moment(const GaussianMixture& dist, std::size_t axis, double p) {
    detail::require(axis < dist.dim(), "axis out of range");
    detail::require(p >= 0.0 && std::isfinite(p), "moment order must be finite and nonnegative");
    double acc = 0.0;
    for (const auto& c : dist.components()) {
        const double m = c.mean(static_cast<Eigen::Index>(axis));
        const double s = component_sd(c, axis);
        acc += c.weight * (is_integer(p) ? abs_moment_1d_integer(m, s, static_cast<int>(std::round(p)))
                                         : abs_moment_1d_quadrature(m, s, p));
    }
    return acc;
}

double exp_abs_moment(const GaussianMixture& dist, double r) {
    detail::require(r >= 0.0 && std::isfinite(r), "exponential moment rate must be nonnegative");
    const std::size_t d = dist.dim();
    // |x| <= sum_j |x_j| and AM-GM give E e^{r|X|} <= (1/d) sum_j E e^{d r |X_j|}.
    const double rate = r * static_cast<double>(d);
    double acc = 0.0;
    for (const auto& c : dist.components()) {
        double per = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            const double m = c.mean(static_cast<Eigen::Index>(a));
            const double s = component_sd(c, a);
            const double v = rate * rate * s * s / 2.0;
            per += std::exp(rate * m + v) * normal_cdf((m + rate * s * s) / s) +
                   std::exp(-rate * m + v) * normal_cdf((-m + rate * s * s) / s);
        }
        acc += c.weight * per / static_cast<double>(d);
    }
    return acc;
}

double box_mass_defect(const GaussianMixture& dist, std::span<const double> lo, std::span<const double> hi) {
    check_dim(dist, lo.size());
    check_dim(dist, hi.size());
    double defect = 0.0;
    for (const auto& c : dist.components()) {
        double tail = 0.0;
        for (std::size_t a = 0; a < dist.dim(); ++a) {
            const double m = c.mean(static_cast<Eigen::Index>(a));
            const double s = component_sd(c, a);
            tail += normal_cdf((lo[a] - m) / s) + normal_cdf(-(hi[a] - m) / s);
        }
        defect += c.weight * std::min(1.0, tail);
    }
    return defect;
}

Box auto_box(const GaussianMixture& dist, double delta) {
    detail::require(delta > 0.0 && delta < 1.0, "auto_box tolerance must lie in (0, 1)");
    const std::size_t d = dist.dim();
    boost::math::normal std_normal;
    // Two tails per axis, union over axes: 2 d Phi(-k) <= delta.
    const double k = boost::math::quantile(boost::math::complement(std_normal, delta / (2.0 * static_cast<double>(d))));
    Box box{std::vector<double>(d, std::numeric_limits<double>::infinity()),
            std::vector<double>(d, -std::numeric_limits<double>::infinity())};
    for (const auto& c : dist.components()) {
        for (std::size_t a = 0; a < d; ++a) {
            const double m = c.mean(static_cast<Eigen::Index>(a));
            const double s = component_sd(c, a);
            box.lo[a] = std::min(box.lo[a], m - k * s);
            box.hi[a] = std::max(box.hi[a], m + k * s);
        }
    }
    return box;
}

Box auto_box(const GaussianMixture& a, const GaussianMixture& b, double delta) {
    detail::require(a.dim() == b.dim(), "auto_box: distributions have different dimensions");
    Box ba = auto_box(a, delta);
    const Box bb = auto_box(b, delta);
    for (std::size_t j = 0; j < a.dim(); ++j) {
        ba.lo[j] = std::min(ba.lo[j], bb.lo[j]);
        ba.hi[j] = std::max(ba.hi[j], bb.hi[j]);
    }
    return ba;
}

GridSpec grid_from_box(const Box& box, std::size_t n_per_axis) {
    GridSpec spec{box.lo, box.hi, std::vector<std::size_t>(box.lo.size(), n_per_axis)};
    spec.validate();
    return spec;
}

GridDensity discretize(const GaussianMixture& dist, const GridSpec& grid) {
    grid.validate();
    check_dim(dist, grid.dim());
    const double defect = box_mass_defect(dist, grid.lo, grid.hi);
    if (defect > kMaxMassDefect) {
        std::ostringstream os;
        os << "discretization box misses mass " << defect << " (limit " << kMaxMassDefect << ")";
        throw PrecisionError(os.str(), defect);
    }
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto x = grid.point(i);
        values[i] = dist.density({x.data(), grid.dim()});
    }
    return GridDensity(grid, std::move(values), defect);
}

GaussianMixture smooth(const GaussianMixture& dist, double sigma) {
    detail::require(sigma > 0.0 && std::isfinite(sigma), "smoothing scale must be positive");
    auto comps = dist.components();
    const auto d = static_cast<Eigen::Index>(dist.dim());
    for (auto& c : comps) c.cov += sigma * sigma * Eigen::MatrixXd::Identity(d, d);
    return GaussianMixture(dist.dim(), std::move(comps));
}

GaussianMixture translate(const GaussianMixture& dist, std::span<const double> shift) {
    check_dim(dist, shift.size());
    auto comps = dist.components();
    for (auto& c : comps) {
        for (std::size_t a = 0; a < dist.dim(); ++a) c.mean(static_cast<Eigen::Index>(a)) += shift[a];
    }
    return GaussianMixture(dist.dim(), std::move(comps));
}

GaussianMixture scale(const GaussianMixture& dist, double factor) {
    detail::require(factor > 0.0 && std::isfinite(factor), "scale factor must be positive");
    auto comps = dist.components();
    for (auto& c : comps) {
        c.mean *= factor;
        c.cov *= factor * factor;
    }
    return GaussianMixture(dist.dim(), std::move(comps));
}

GaussianMixture blend(const GaussianMixture& a, const GaussianMixture& b, double w) {
    detail::require(a.dim() == b.dim(), "blend: distributions have different dimensions");
    detail::require(w >= 0.0 && w <= 1.0, "blend weight must lie in [0, 1]");
    std::vector<MixtureComponent> comps;
    if (w < 1.0) {
        for (auto c : a.components()) {
            c.weight *= (1.0 - w);
            comps.push_back(std::move(c));
        }
    }
    if (w > 0.0) {
        for (auto c : b.components()) {
            c.weight *= w;
            comps.push_back(std::move(c));
        }
    }
    // Re-close the weights so that rounding never trips the sum-to-one check.
    double total = 0.0;
    for (const auto& c : comps) total += c.weight;
    for (auto& c : comps) c.weight /= total;
    return GaussianMixture(a.dim(), std::move(comps));
}

namespace {

// Bisection bracket that certainly contains the quantile at normal score t.
std::pair<double, double> quantile_bracket(const GaussianMixture& dist, double t) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const double reach = std::abs(t) + 40.0;
    for (const auto& c : dist.components()) {
        const double s = std::sqrt(c.cov(0, 0));
        lo = std::min(lo, c.mean(0) - reach * s);
        hi = std::max(hi, c.mean(0) + reach * s);
    }
    return {lo, hi};
}

template <class GoRight>
double bisect(double lo, double hi, GoRight go_right) {
    for (int it = 0; it < 2000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (go_right(mid)) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double quantile_1d(const GaussianMixture& dist, double u) {
    detail::require(dist.dim() == 1, "quantile_1d requires a one-dimensional mixture");
    detail::require(u > 0.0 && u < 1.0, "quantile level must lie in (0, 1)");
    boost::math::normal std_normal;
    const auto [lo, hi] = quantile_bracket(dist, boost::math::quantile(std_normal, u));
    if (u <= 0.5) return bisect(lo, hi, [&](double x) { return dist.cdf(x) < u; });
    const double tail = 1.0 - u;
    return bisect(lo, hi, [&](double x) { return dist.survival(x) > tail; });
}

double quantile_at_normal_score(const GaussianMixture& dist, double t) {
    detail::require(dist.dim() == 1, "quantile requires a one-dimensional mixture");
    detail::require(std::isfinite(t), "normal score must be finite");
    const auto [lo, hi] = quantile_bracket(dist, t);
    if (t <= 0.0) {
        const double target = normal_cdf(t);
        return bisect(lo, hi, [&](double x) { return dist.cdf(x) < target; });
    }
    const double target = normal_cdf(-t);
    return bisect(lo, hi, [&](double x) { return dist.survival(x) > target; });
}

AtomSet sample(const GaussianMixture& dist, std::size_t n, std::uint64_t seed) {
    detail::require(n >= 1, "sample size must be at least 1");
    const std::size_t d = dist.dim();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<Eigen::MatrixXd> chol;
    std::vector<double> cumulative;
    double running = 0.0;
    for (const auto& c : dist.components()) {
        chol.push_back(Eigen::LLT<Eigen::MatrixXd>(c.cov).matrixL());
        running += c.weight;
        cumulative.push_back(running);
    }

    std::vector<double> locations(n * d);
    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        const double u = unif(rng) * running;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const auto c = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), dist.size() - 1);
        for (Eigen::Index a = 0; a < z.size(); ++a) z(a) = gauss(rng);
        const Eigen::VectorXd x = dist.component(c).mean + chol[c] * z;
        for (std::size_t a = 0; a < d; ++a) locations[i * d + a] = x(static_cast<Eigen::Index>(a));
    }
    return AtomSet(d, std::move(locations), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

AtomSet quantile_atoms(const GaussianMixture& dist, std::size_t n) {
    detail::require(n >= 1, "atom count must be at least 1");
    std::vector<double> locations(n);
    for (std::size_t i = 0; i < n; ++i) {
        locations[i] = quantile_1d(dist, (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    }
    return AtomSet(1, std::move(locations), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

AtomSet grid_atoms(const GridDensity& density) {
    const auto& spec = density.spec();
    const double vol = spec.cell_volume();
    std::vector<double> locations;
    std::vector<double> masses;
    long double total = 0.0L;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double m = density.values()[i] * vol;
        if (m <= 0.0) continue;
        const auto x = spec.point(i);
        locations.insert(locations.end(), x.begin(), x.begin() + static_cast<std::ptrdiff_t>(spec.dim()));
        masses.push_back(m);
        total += m;
    }
    for (double& m : masses) m = static_cast<double>(m / total);
    return AtomSet(spec.dim(), std::move(locations), std::move(masses));
}

}  // namespace wtv
