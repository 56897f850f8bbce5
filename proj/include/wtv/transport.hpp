#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wtv/distributions.hpp"
#include "wtv/grid.hpp"

namespace wtv {

enum class DistanceMethod { QuantileQuadrature, ExactOt, EntropicOt, GridQuadrature };

std::string to_string(DistanceMethod m);
/// Inverse of to_string; throws PreconditionError on an unknown tag.
DistanceMethod distance_method_from_string(const std::string& s);

struct DistanceResult {
    double value = 0.0;
    DistanceMethod method = DistanceMethod::GridQuadrature;
    double err = 0.0;  ///< nonnegative error estimate
};

/// Coupling between two atom sets; mass(i, j) is the mass moved from row atom i to column atom j.
struct TransportPlan {
    AtomSet rows;
    AtomSet cols;
    std::vector<double> masses;  // rows.size() x cols.size(), row-major

    double mass(std::size_t i, std::size_t j) const { return masses[i * cols.size() + j]; }
};

/// Riemann-sum settings for distances between analytic laws. Zero counts pick the
/// per-dimension defaults (4096..65536 nodes in 1-D, 256..1024 per axis in 2-D, 64..256 in 3-D).
struct QuadratureOptions {
    double tol = 1e-6;          ///< accepted |S_2n - S_n| relative to the value
    std::size_t n_start = 0;
    std::size_t n_max = 0;
    double box_delta = 1e-20;   ///< tail mass allowed outside the integration box
};

/// \int V_p |f_a - f_b| dx with V_p(x) = 1 + |x|^p for p > 0 and V_0 = 1.
/// Densities are sampled exactly on a common box; the grid is doubled until two successive
/// sums agree to opts.tol (relative). Throws NumericalError if n_max is reached first.
DistanceResult rho_p(const GaussianMixture& a, const GaussianMixture& b, double p, const QuadratureOptions& opts = {});
/// Same sum on a shared grid; the error estimate compares against the half-resolution subgrid.
DistanceResult rho_p(const GridDensity& a, const GridDensity& b, double p);

/// \int |f_a - f_b| dx.
DistanceResult tv_mass(const GaussianMixture& a, const GaussianMixture& b, const QuadratureOptions& opts = {});
DistanceResult tv_mass(const GridDensity& a, const GridDensity& b);

/// W_q between 1-D laws from the quantile representation, integrated in the normal-score
/// variable t (u = Phi(t)) with Gauss-Hermite rules of order 64/128/256. Requires q > 1.
DistanceResult wasserstein_1d(const GaussianMixture& a, const GaussianMixture& b, double q);

/// Largest n_a * n_b accepted by ot_exact.
inline constexpr std::size_t kMaxExactCells = 1'000'000;

/// Exact discrete optimal transport for cost |x - y|^q by the transportation simplex.
/// Returns W_q = cost^{1/q} and an optimal vertex plan.
std::pair<DistanceResult, TransportPlan> ot_exact(const AtomSet& a, const AtomSet& b, double q);

struct SinkhornOptions {
    /// Regularization levels relative to the largest cost entry, decreasing.
    std::vector<double> schedule{1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
    std::size_t max_iter = 500000; ///< per level
    double tol = 1e-7;             ///< L1 row-marginal violation ending the last level
};

/// Annealed log-domain Sinkhorn. The plan is rounded onto the feasible set before its cost
/// is reported, so value >= exact W_q. err is the gap to a dual lower bound.
/// Throws NumericalError if the last level does not converge.
DistanceResult ot_entropic(const AtomSet& a, const AtomSet& b, double q, const SinkhornOptions& opts = {});

/// Upper bound min(2, W_1) for the Fortet-Mourier distance. 1-D mixtures only.
DistanceResult fm_upper(const GaussianMixture& a, const GaussianMixture& b);
DistanceResult fm_upper(const AtomSet& a, const AtomSet& b);

namespace detail {
/// W_q by the quantile route without the q > 1 restriction (q >= 1).
DistanceResult quantile_wasserstein(const GaussianMixture& a, const GaussianMixture& b, double q);
}  // namespace detail

}  // namespace wtv
