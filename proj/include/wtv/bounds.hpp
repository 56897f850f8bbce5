#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wtv/distributions.hpp"
#include "wtv/spectral.hpp"

namespace wtv {

struct BoundParams {
    double p = 2.0;        ///< weight power, p >= 1
    double q = 2.0;        ///< Wasserstein order, q > 1
    double epsilon = 0.1;  ///< rate loss, 0 < epsilon < 1
    std::size_t d = 1;

    /// Throws PreconditionError unless p >= 1, q > 1, 0 < epsilon < 1, d >= 1.
    void validate() const;
    /// Smallest even integer >= max(p, 2); the Fourier machinery works with this power.
    int p_even() const;
    bool p_is_even() const { return static_cast<double>(p_even()) == p; }
};

// ---------------------------------------------------------------------------
// Constants of the polynomial-regime proof

/// Area of the unit sphere in R^d.
double sphere_area(std::size_t d);
/// Volume of the unit ball in R^d.
double ball_volume(std::size_t d);

/// gamma_k = 2 pi^{d/2} / (Gamma(d/2) (k - d)) = \int_{|u|>=1} |u|^{-k} du. Requires k > d.
double gamma_k(int k, std::size_t d);

/// C°_k from moments. k = 0 gives 1. For k >= 1:
/// ||xi||^k_{kq'} + k 2^{k-1} (|| |xi|^{k-1} ||_{q'} + || |eta|^{k-1} ||_{q'}),
/// with E|xi|^{kq'}, E|xi|^{(k-1)q'}, E|eta|^{(k-1)q'} supplied.
double c_circ_from_moments(int k, double q, double xi_kq, double xi_k1q, double eta_k1q);
/// Same with the moments taken from the two laws.
double c_circ(int k, double q, const GaussianMixture& xi, const GaussianMixture& eta);

/// d^{p/2 - 1}, so that |x|^p <= h_p sum_j |x_j|^p. Requires even p >= 2.
double h_p_const(int p, std::size_t d);

/// theta_{l,p} = (l - d) l / ((l + 1)(l + p + d)). Requires l > d.
double theta(int l, double p, std::size_t d);

/// ceil((d + s(p + d)) / (1 - s)) with s = sqrt(1 - epsilon), at least d + 1, increased
/// further if needed so that theta(l, p, d) >= 1 - epsilon holds in floating point.
int choose_l(double epsilon, double p, std::size_t d);

/// A^{-1/(l+1)} for 0 < A <= 1 and 1 for A > 1.
double choose_M(double A, int l);

/// (2 h_p d / (2 pi)^d) (C°_p vol_d + b_{p,l} gamma_l). For p = 0 the factor h_p d is 1.
double hat_C(int l, int p, double c_circ_p, double b_pl, std::size_t d);

/// hat_C vol_d + 2 sqrt(a_{0,2p} a_{0,2l}).
double bar_C(double hat_c, double a_2p, double a_2l, std::size_t d);

// ---------------------------------------------------------------------------
// Laws entering a certificate

/// The laws a certificate must hold for uniformly. Pair quantities (sums over xi and eta)
/// are bounded by the sum of the two largest per-law values, so a single family can
/// certify every pair drawn from it.
class LawFamily {
public:
    /// `grid` is a common space grid; envelopes are sampled on it (frequency side on its dual).
    LawFamily(std::vector<GaussianMixture> laws, GridSpec grid);
    /// Family {a, b} on the auto_box of the pair with the default resolution for its dimension.
    static LawFamily of_pair(const GaussianMixture& a, const GaussianMixture& b);
    /// Default nodes per axis: 4096 (d=1), 512 (d=2), 64 (d=3).
    static std::size_t default_resolution(std::size_t d);

    std::size_t dim() const { return laws_.front().dim(); }
    const std::vector<GaussianMixture>& laws() const { return laws_; }
    const GridSpec& grid() const { return grid_; }

    /// max over laws of E|X|^m.
    double max_moment(double m) const;
    /// Bound on E|xi|^m + E|eta|^m.
    double pair_moment(double m) const;
    /// Bound on sum_j (E|xi_j|^p + E|eta_j|^p).
    double pair_marginal_moment(double p) const;
    /// Bound on E e^{r|xi|} + E e^{r|eta|}.
    double pair_exp_moment(double r) const;
    /// Bound on the frequency-side table of phi_xi plus that of phi_eta.
    PolyEnvelopeTable pair_frequency_envelope(int K, int L) const;
    /// r_k = min over laws, c_k = sum of the two largest.
    ExpEnvelopeTable pair_exp_envelope(int K) const;

private:
    double top_two(const std::vector<double>& v) const;

    std::vector<GaussianMixture> laws_;
    GridSpec grid_;
};

// ---------------------------------------------------------------------------
// Certificates

enum class Regime { Lemma1Poly, Lemma2Exp, Pointwise };
std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct ConstantLedger {
    std::map<int, double> gamma;
    std::map<int, double> c_circ;
    double h_p = 0.0;
    std::map<std::pair<int, int>, double> hat_C;  // (l, p)
    std::map<std::pair<int, int>, double> bar_C;
    std::map<std::pair<int, int>, double> theta;
    std::map<int, double> a;                      // m -> a_{0,m}
    std::map<std::string, double> named;          // everything else, by name

    bool operator==(const ConstantLedger&) const = default;
};

struct BoundCertificate {
    BoundParams params;
    Regime regime = Regime::Lemma1Poly;
    /// "rate" (A in the rate regime), "constant" (large-A fallback) or "identical" (A = 0).
    std::string branch = "rate";
    int l = 0;
    double M = 1.0;
    double A = 0.0;
    MultiIndex alpha{};
    ConstantLedger constants;
    double rhs = 0.0;
    double lhs = 0.0;
    bool satisfied = false;
    std::string provenance = "empirical";
};

/// rho_p <= C A^{1-eps}. `A` is W_q(a, b); `lhs` the measured rho_p(a, b).
BoundCertificate certificate_lemma1(const BoundParams& params, double A, double lhs, const LawFamily& family);
/// Convenience: A from wasserstein_1d (d = 1 only), lhs from rho_p, family {a, b}.
BoundCertificate certificate_lemma1(const GaussianMixture& a, const GaussianMixture& b, const BoundParams& params);

/// sup |d^alpha f_a - d^alpha f_b| (1 + |x|^p) <= C A^{(l-d-|alpha|)/(l+1)},
/// l = ceil((d + |alpha| + 1 - eps) / eps) so the exponent is at least 1 - eps.
BoundCertificate certificate_pointwise(const BoundParams& params, const MultiIndex& alpha, double A, double lhs,
                                       const LawFamily& family);
/// Grid supremum of |d^alpha f_a - d^alpha f_b| (1 + |x|^p) over the family grid nodes.
double pointwise_lhs(const GaussianMixture& a, const GaussianMixture& b, double p, const MultiIndex& alpha,
                     const GridSpec& grid);
BoundCertificate certificate_pointwise(const GaussianMixture& a, const GaussianMixture& b, const BoundParams& params,
                                       const MultiIndex& alpha);

/// rho_p <= C A |ln A|^{2d+1} for exponentially decaying characteristic functions.
/// `r` is the exponential-moment rate and `c_sharp` a bound on E e^{r|xi|} + E e^{r|eta|};
/// when c_sharp is absent it is computed from the family.
BoundCertificate certificate_lemma2(const BoundParams& params, double A, double lhs, const LawFamily& family,
                                    double r = 1.0, std::optional<double> c_sharp = std::nullopt);
BoundCertificate certificate_lemma2(const GaussianMixture& a, const GaussianMixture& b, const BoundParams& params,
                                    double r = 1.0);

}  // namespace wtv
