#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "wtv/grid.hpp"

namespace wtv {

/// Largest ambient dimension accepted for analytic mixtures.
inline constexpr std::size_t kMaxMixtureDim = 8;

struct MixtureComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Finite Gaussian mixture on R^d with exact density, moments and characteristic function.
///
/// Immutable after construction; all member functions are safe to call concurrently.
class GaussianMixture {
public:
    /// Validates weights (each in (0,1], total 1 within 1e-12), symmetry and positive
    /// definiteness of every covariance. Throws PreconditionError otherwise.
    GaussianMixture(std::size_t dim, std::vector<MixtureComponent> components);

    static GaussianMixture normal(double mean, double variance);
    static GaussianMixture isotropic(const Eigen::VectorXd& mean, double variance);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return components_.size(); }
    const std::vector<MixtureComponent>& components() const noexcept { return components_; }
    const MixtureComponent& component(std::size_t c) const { return components_[c]; }

    /// Inverse covariance of component c, row-major d*d.
    std::span<const double> precision(std::size_t c) const { return cache_[c].precision; }
    /// Log of the Gaussian normalizing constant of component c.
    double log_normalizer(std::size_t c) const { return cache_[c].log_norm; }
    /// -1/2 (x-m)^T Sigma^{-1} (x-m) for component c.
    double quadratic_form(std::size_t c, std::span<const double> x) const;

    /// Largest per-axis standard deviation over all components.
    double max_axis_sd(std::size_t axis) const;

    double density(std::span<const double> x) const;
    /// One-dimensional CDF and survival function; require dim() == 1.
    double cdf(double x) const;
    double survival(double x) const;

private:
    struct Cache {
        std::vector<double> precision;     // Sigma^{-1}, row-major
        std::vector<double> chol_inverse;  // L^{-1}, row-major lower triangular
        double log_norm = 0.0;
    };

    std::size_t dim_;
    std::vector<MixtureComponent> components_;
    std::vector<Cache> cache_;
};

/// Discrete probability measure: weighted atoms in R^d.
class AtomSet {
public:
    /// `locations` holds masses.size() points of dimension `dim`, point-major.
    /// Masses must lie in (0,1] and sum to one within 1e-12.
    AtomSet(std::size_t dim, std::vector<double> locations, std::vector<double> masses);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return masses_.size(); }
    std::span<const double> location(std::size_t i) const { return {locations_.data() + i * dim_, dim_}; }
    double mass(std::size_t i) const { return masses_[i]; }
    std::span<const double> masses() const noexcept { return masses_; }
    std::span<const double> locations() const noexcept { return locations_; }

private:
    std::size_t dim_;
    std::vector<double> locations_;
    std::vector<double> masses_;
};

/// Mixture density at x. Throws PreconditionError on dimension mismatch.
double density_eval(const GaussianMixture& dist, std::span<const double> x);

/// E|X|^p with the Euclidean norm. Closed form for integer p in 1-D and even p in
/// any dimension; adaptive quadrature otherwise.
double abs_moment(const GaussianMixture& dist, double p);

/// E|X_axis|^p for one coordinate.
double marginal_abs_moment(const GaussianMixture& dist, std::size_t axis, double p);

/// Upper bound on E exp(r|X|); exact in one dimension.
double exp_abs_moment(const GaussianMixture& dist, double r);

/// Mass lying outside the box, bounded per component by a union over axes of the
/// exact Gaussian marginal tails (exact in 1-D).
double box_mass_defect(const GaussianMixture& dist, std::span<const double> lo, std::span<const double> hi);

/// Per-axis box whose mass defect is at most delta.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;
};
Box auto_box(const GaussianMixture& dist, double delta);
/// Smallest box containing the auto_box of both laws.
Box auto_box(const GaussianMixture& a, const GaussianMixture& b, double delta);
GridSpec grid_from_box(const Box& box, std::size_t n_per_axis);

/// Largest mass defect accepted by discretize().
inline constexpr double kMaxMassDefect = 1e-6;

/// Samples the density on the grid nodes and renormalizes to unit discrete mass.
/// Throws PrecisionError when the box misses more than kMaxMassDefect of the mass.
GridDensity discretize(const GaussianMixture& dist, const GridSpec& grid);

/// Law of X + theta with theta ~ N(0, sigma^2 I) independent of X.
GaussianMixture smooth(const GaussianMixture& dist, double sigma);

/// Law of X + shift.
GaussianMixture translate(const GaussianMixture& dist, std::span<const double> shift);
/// Law of c * X.
GaussianMixture scale(const GaussianMixture& dist, double c);
/// (1 - w) * a + w * b as a single mixture.
GaussianMixture blend(const GaussianMixture& a, const GaussianMixture& b, double w);

/// F^{-1}(u) for a 1-D mixture, by bisection; |F(result) - u| <= 1e-12.
double quantile_1d(const GaussianMixture& dist, double u);
/// F^{-1}(Phi(t)) without forming Phi(t), so extreme normal scores stay accurate.
double quantile_at_normal_score(const GaussianMixture& dist, double t);

/// n i.i.d. draws with masses 1/n, reproducible for a given seed.
AtomSet sample(const GaussianMixture& dist, std::size_t n, std::uint64_t seed);

/// Atoms at the 1-D quantiles (i + 1/2) / n with equal masses.
AtomSet quantile_atoms(const GaussianMixture& dist, std::size_t n);

/// One atom per grid node with mass value * cell volume (zero-mass nodes dropped).
AtomSet grid_atoms(const GridDensity& density);

}  // namespace wtv
