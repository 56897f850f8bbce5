#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "wtv/distributions.hpp"
#include "wtv/grid.hpp"

namespace wtv {

// Sign convention throughout: phi(u) = E exp(i <u, X>), so
// f(x) = (2 pi)^{-d} \int phi(u) exp(-i <u, x>) du.

/// Derivative orders per axis; entries past the dimension must be zero.
using MultiIndex = std::array<int, kMaxGridDim>;

int order(const MultiIndex& alpha);
/// All multi-indices of total order k in d dimensions, lexicographic.
std::vector<MultiIndex> multi_indices(std::size_t d, int k);
/// k! / (alpha_1! ... alpha_d!).
double multinomial(const MultiIndex& alpha);

std::complex<double> char_fn_analytic(const GaussianMixture& dist, std::span<const double> u);

/// d^alpha phi(u) in closed form.
std::complex<double> char_fn_derivative(const GaussianMixture& dist, std::span<const double> u,
                                        const MultiIndex& alpha);
/// log |d^alpha phi(u)|, evaluated without forming the possibly underflowing product.
double log_abs_char_fn_derivative(const GaussianMixture& dist, std::span<const double> u, const MultiIndex& alpha);

/// d^alpha f(x) in closed form, and its logarithmic magnitude.
double density_derivative_analytic(const GaussianMixture& dist, std::span<const double> x, const MultiIndex& alpha);
double log_abs_density_derivative(const GaussianMixture& dist, std::span<const double> x, const MultiIndex& alpha);

/// Delta_p phi(u) = sum_j d_j^p phi(u) in closed form. p must be even and >= 2.
std::complex<double> delta_p_analytic(const GaussianMixture& dist, std::span<const double> u, int p);

/// Discrete characteristic function on the dual grid: a Riemann sum of f(x) e^{i<u,x>}
/// evaluated by FFT with the phase of the box offset restored.
CharGrid char_fn_grid(const GridDensity& f);
/// Closed-form characteristic function sampled on the dual grid of `spec`.
CharGrid char_fn_on_grid(const GaussianMixture& dist, const GridSpec& spec);

/// Exact inverse of the discrete transform used by char_fn_grid; returns the real part.
GridField inverse_char_fn(const CharGrid& phi);

/// Delta_p phi on the dual grid, by transforming f(x) sum_j x_j^p.
CharGrid delta_p_char(const GridDensity& f, int p);
/// As above with the density sampled from the mixture at the grid nodes.
CharGrid delta_p_char(const GaussianMixture& dist, const GridSpec& spec, int p);

/// (f_a - f_b)(x) sum_j x_j^p on the grid nodes, recovered as
/// (-i)^p (2 pi)^{-d} \int Delta_p (phi_a - phi_b)(u) e^{-i<u,x>} du.
GridField weighted_diff_reconstruct(const GaussianMixture& a, const GaussianMixture& b, const GridSpec& spec, int p);
GridField weighted_diff_reconstruct(const GridDensity& a, const GridDensity& b, int p);

/// d^alpha f on the grid nodes by multiplying phi with (-iu)^alpha. Frequencies whose
/// magnitude is at roundoff level are discarded first.
GridField spectral_density_derivative(const CharGrid& phi, const MultiIndex& alpha);
/// d^alpha phi on the dual grid by transforming (ix)^alpha f.
CharGrid spectral_char_derivative(const GridDensity& f, const MultiIndex& alpha);

enum class EnvelopeSide { Density, Frequency };

/// Constants bounding sup |d^alpha g|(1+|x|)^l over |alpha| = k, for 0 <= k <= K, 0 <= l <= L.
/// Density side: g = f (d_{k,l}). Frequency side: g = phi (b_{k,l}).
/// Grid suprema are lower bounds of the true ones, hence `empirical`.
struct PolyEnvelopeTable {
    EnvelopeSide side = EnvelopeSide::Density;
    int K = 0;
    int L = 0;
    std::vector<double> values;  // (K+1) x (L+1), row k
    bool empirical = true;

    double at(int k, int l) const;
    double& at(int k, int l);
};

/// Density-side table from a grid density, using spectral derivatives.
/// Throws NumericalError when the spectrum of |u|^K phi has not decayed at the grid edge.
PolyEnvelopeTable poly_envelope(const GridDensity& f, int K, int L);
/// Frequency-side table from a characteristic-function grid. Throws NumericalError when
/// |x|^K f has not decayed at the box edge.
PolyEnvelopeTable poly_envelope(const CharGrid& phi, int K, int L);
/// Same quantities with exact derivatives sampled on the nodes (space nodes for the
/// density side, dual nodes for the frequency side). Evaluated in log space so large l is safe.
PolyEnvelopeTable poly_envelope_analytic(const GaussianMixture& dist, const GridSpec& spec, EnvelopeSide side,
                                         int K, int L);
/// Entrywise sum, the envelope of a pair of laws.
PolyEnvelopeTable sum_tables(const PolyEnvelopeTable& a, const PolyEnvelopeTable& b);

struct ExpEnvelopeEntry {
    double r = 0.0;           ///< half the fitted decay rate
    double c = 0.0;           ///< \int |phi^(k)| e^{r|u|} du, grid part plus fitted tail
    double u_resolved = 0.0;  ///< radius of the resolved band
    double slope = 0.0;       ///< fitted d/d|u| of log |phi^(k)|
    double intercept = 0.0;
};

/// Entry k bounds \int |phi^(k)(u)| e^{r_k |u|} du <= c_k, where |phi^(k)| is the
/// Euclidean norm of the k-th derivative tensor.
struct ExpEnvelopeTable {
    std::vector<ExpEnvelopeEntry> entries;
    bool empirical = true;
};

/// Least-squares fit of log |phi^(k)| on |u| over the outer quarter of the resolved band.
/// Throws HypothesisError when the fitted slope is not negative or the band reaches the grid edge.
ExpEnvelopeTable exp_envelope(const CharGrid& phi, int K);
ExpEnvelopeTable exp_envelope_analytic(const GaussianMixture& dist, const GridSpec& spec, int K);
/// Envelope of a pair: r = min, c = sum.
ExpEnvelopeTable combine_exp(const ExpEnvelopeTable& a, const ExpEnvelopeTable& b);

}  // namespace wtv
