#include "wtv/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wtv/errors.hpp"
#include "wtv/transport.hpp"

namespace wtv {

void BoundParams::validate() const {
    std::ostringstream os;
    if (!(p >= 1.0) || !std::isfinite(p)) os << "weight power p must be >= 1 (got " << p << ")";
    else if (!(q > 1.0) || !std::isfinite(q)) os << "certificates require q > 1 (got " << q << ")";
    else if (!(epsilon > 0.0 && epsilon < 1.0)) os << "epsilon must lie in (0, 1) (got " << epsilon << ")";
    else if (d < 1) os << "dimension must be at least 1";
    if (!os.str().empty()) detail::fail_precondition(os.str());
}

int BoundParams::p_even() const {
    const int c = static_cast<int>(std::ceil(std::max(p, 2.0) - 1e-12));
    return c % 2 == 0 ? c : c + 1;
}

double sphere_area(std::size_t d) {
    const double h = 0.5 * static_cast<double>(d);
    return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

double ball_volume(std::size_t d) {
    const double h = 0.5 * static_cast<double>(d);
    return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0);
}

double gamma_k(int k, std::size_t d) {
    if (k <= static_cast<int>(d)) {
        std::ostringstream os;
        os << "gamma_k needs k > d (k=" << k << ", d=" << d << "): the tail integral diverges";
        detail::fail_precondition(os.str());
    }
    return sphere_area(d) / static_cast<double>(k - static_cast<int>(d));
}

double c_circ_from_moments(int k, double q, double xi_kq, double xi_k1q, double eta_k1q) {
    detail::require(k >= 0, "c_circ needs k >= 0");
    detail::require(q > 1.0, "c_circ needs q > 1");
    if (k == 0) return 1.0;
    for (double m : {xi_kq, xi_k1q, eta_k1q}) {
        detail::require(std::isfinite(m) && m >= 0.0, "c_circ: moment missing or not finite");
    }
    const double qp = q / (q - 1.0);
    // Minkowski in L^{q'} for the sum |xi|^{k-1} + |eta|^{k-1}.
    const double mixed = std::pow(xi_k1q, 1.0 / qp) + std::pow(eta_k1q, 1.0 / qp);
    return std::pow(xi_kq, 1.0 / qp) + k * std::ldexp(1.0, k - 1) * mixed;
}

double c_circ(int k, double q, const GaussianMixture& xi, const GaussianMixture& eta) {
    detail::require(q > 1.0, "c_circ needs q > 1");
    if (k == 0) return 1.0;
    const double qp = q / (q - 1.0);
    return c_circ_from_moments(k, q, abs_moment(xi, k * qp), abs_moment(xi, (k - 1) * qp),
                               abs_moment(eta, (k - 1) * qp));
}

double h_p_const(int p, std::size_t d) {
    if (p < 2 || p % 2 != 0) {
        std::ostringstream os;
        os << "h_p needs an even p >= 2 (got " << p << ")";
        detail::fail_precondition(os.str());
    }
    return std::pow(static_cast<double>(d), 0.5 * p - 1.0);
}

double theta(int l, double p, std::size_t d) {
    const double dd = static_cast<double>(d);
    if (l <= static_cast<int>(d)) {
        std::ostringstream os;
        os << "theta needs l > d (l=" << l << ", d=" << d << ")";
        detail::fail_precondition(os.str());
    }
    const double ll = l;
    return (ll - dd) * ll / ((ll + 1.0) * (ll + p + dd));
}

int choose_l(double epsilon, double p, std::size_t d) {
    detail::require(epsilon > 0.0 && epsilon < 1.0, "choose_l needs epsilon in (0, 1)");
    const double s = std::sqrt(1.0 - epsilon);
    const double dd = static_cast<double>(d);
    const double x = (dd + s * (p + dd)) / (1.0 - s);
    // Shift below the ceiling so that exact integers are not pushed up by rounding.
    int l = static_cast<int>(std::ceil(x - 1e-9));
    l = std::max(l, static_cast<int>(d) + 1);
    while (theta(l, p, d) < 1.0 - epsilon) ++l;
    return l;
}

double choose_M(double A, int l) {
    detail::require(A > 0.0 && std::isfinite(A), "choose_M needs a positive finite A");
    detail::require(l >= 0, "choose_M needs l >= 0");
    if (A > 1.0) return 1.0;
    return std::pow(A, -1.0 / (l + 1.0));
}

double hat_C(int l, int p, double c_circ_p, double b_pl, std::size_t d) {
    const double two_pi_d = std::pow(2.0 * std::numbers::pi, static_cast<double>(d));
    const double lead = p == 0 ? 2.0 / two_pi_d : 2.0 * h_p_const(p, d) * static_cast<double>(d) / two_pi_d;
    return lead * (c_circ_p * ball_volume(d) + b_pl * gamma_k(l, d));
}

double bar_C(double hat_c, double a_2p, double a_2l, std::size_t d) {
    return hat_c * ball_volume(d) + 2.0 * std::sqrt(a_2p * a_2l);
}

// ---------------------------------------------------------------------------
// LawFamily

LawFamily::LawFamily(std::vector<GaussianMixture> laws, GridSpec grid) : laws_(std::move(laws)), grid_(std::move(grid)) {
    detail::require(!laws_.empty(), "law family must not be empty");
    for (const auto& law : laws_) detail::require(law.dim() == laws_.front().dim(), "law family mixes dimensions");
    grid_.validate();
    detail::require(grid_.dim() == dim(), "law family grid has the wrong dimension");
}

std::size_t LawFamily::default_resolution(std::size_t d) {
    switch (d) {
        case 1: return 4096;
        case 2: return 512;
        default: return 64;
    }
}

LawFamily LawFamily::of_pair(const GaussianMixture& a, const GaussianMixture& b) {
    detail::require(a.dim() == b.dim(), "certificate: distributions have different dimensions");
    detail::require(a.dim() <= kMaxGridDim, "certificates are available for d <= 3");
    const Box box = auto_box(a, b, 1e-12);
    return LawFamily({a, b}, grid_from_box(box, default_resolution(a.dim())));
}

double LawFamily::top_two(const std::vector<double>& v) const {
    if (v.size() == 1) return 2.0 * v.front();
    std::vector<double> s = v;
    std::partial_sort(s.begin(), s.begin() + 2, s.end(), std::greater<>());
    return s[0] + s[1];
}

double LawFamily::max_moment(double m) const {
    double best = 0.0;
    for (const auto& law : laws_) best = std::max(best, abs_moment(law, m));
    return best;
}

double LawFamily::pair_moment(double m) const {
    std::vector<double> v;
    for (const auto& law : laws_) v.push_back(abs_moment(law, m));
    return top_two(v);
}

double LawFamily::pair_marginal_moment(double p) const {
    std::vector<double> v;
    for (const auto& law : laws_) {
        double s = 0.0;
        for (std::size_t j = 0; j < law.dim(); ++j) s += marginal_abs_moment(law, j, p);
        v.push_back(s);
    }
    return top_two(v);
}

double LawFamily::pair_exp_moment(double r) const {
    std::vector<double> v;
    for (const auto& law : laws_) v.push_back(exp_abs_moment(law, r));
    return top_two(v);
}

PolyEnvelopeTable LawFamily::pair_frequency_envelope(int K, int L) const {
    std::vector<PolyEnvelopeTable> tables;
    for (const auto& law : laws_) tables.push_back(poly_envelope_analytic(law, grid_, EnvelopeSide::Frequency, K, L));
    PolyEnvelopeTable out = tables.front();
    for (std::size_t e = 0; e < out.values.size(); ++e) {
        std::vector<double> v;
        for (const auto& t : tables) v.push_back(t.values[e]);
        out.values[e] = top_two(v);
    }
    return out;
}

ExpEnvelopeTable LawFamily::pair_exp_envelope(int K) const {
    std::vector<ExpEnvelopeTable> tables;
    for (const auto& law : laws_) tables.push_back(exp_envelope_analytic(law, grid_, K));
    ExpEnvelopeTable out = tables.front();
    for (std::size_t k = 0; k < out.entries.size(); ++k) {
        std::vector<double> c;
        for (const auto& t : tables) {
            out.entries[k].r = std::min(out.entries[k].r, t.entries[k].r);
            out.entries[k].u_resolved = std::max(out.entries[k].u_resolved, t.entries[k].u_resolved);
            c.push_back(t.entries[k].c);
        }
        out.entries[k].c = top_two(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Certificates

std::string to_string(Regime r) {
    switch (r) {
        case Regime::Lemma1Poly: return "lemma1-poly";
        case Regime::Lemma2Exp: return "lemma2-exp";
        case Regime::Pointwise: return "pointwise";
    }
    return "unknown";
}

Regime regime_from_string(const std::string& s) {
    for (auto r : {Regime::Lemma1Poly, Regime::Lemma2Exp, Regime::Pointwise}) {
        if (to_string(r) == s) return r;
    }
    detail::fail_precondition("unknown certificate regime '" + s + "'");
}

namespace {

void check_inputs(const BoundParams& params, double A, double lhs, const LawFamily& family) {
    params.validate();
    detail::require(family.dim() == params.d, "certificate: family dimension differs from params.d");
    detail::require(A >= 0.0 && std::isfinite(A), "certificate: A must be finite and nonnegative");
    detail::require(lhs >= 0.0 && std::isfinite(lhs), "certificate: lhs must be finite and nonnegative");
}

BoundCertificate start(const BoundParams& params, Regime regime, double A, double lhs) {
    BoundCertificate cert;
    cert.params = params;
    cert.regime = regime;
    cert.A = A;
    cert.lhs = lhs;
    return cert;
}

void finish(BoundCertificate& cert) {
    if (!std::isfinite(cert.rhs)) throw NumericalError("certificate right-hand side is not finite");
    cert.satisfied = cert.lhs <= cert.rhs;
}

// C°_k for the family: the xi and eta moments are both replaced by the family maximum.
double family_c_circ(int k, double q, const LawFamily& family) {
    if (k == 0) return 1.0;
    const double qp = q / (q - 1.0);
    const double lower = family.max_moment((k - 1) * qp);
    return c_circ_from_moments(k, q, family.max_moment(k * qp), lower, lower);
}

double one_dim_w(const GaussianMixture& a, const GaussianMixture& b, double q) {
    detail::require(a.dim() == 1, "this certificate entry point computes A in one dimension only; pass A explicitly");
    return wasserstein_1d(a, b, q).value;
}

// sum_{k<d} (d-1)!/(d-1-k)! / r^{k+1}, so that \int_M^inf y^{d-1} e^{-ry} dy <= K e^{-rM} M^{d-1} for M >= 1.
double radial_tail_factor(std::size_t d, double r) {
    double acc = 0.0;
    double falling = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
        acc += falling / std::pow(r, static_cast<double>(k + 1));
        falling *= static_cast<double>(d - 1 - k);
    }
    return acc;
}

}  // namespace

BoundCertificate certificate_lemma1(const BoundParams& params, double A, double lhs, const LawFamily& family) {
    check_inputs(params, A, lhs, family);
    auto cert = start(params, Regime::Lemma1Poly, A, lhs);
    const std::size_t d = params.d;
    const int pe = params.p_even();
    const int l = choose_l(params.epsilon, pe, d);
    cert.l = l;
    auto& led = cert.constants;

    const auto b = family.pair_frequency_envelope(pe, l);
    const double cp = family_c_circ(pe, params.q, family);
    led.c_circ[0] = 1.0;
    led.c_circ[pe] = cp;
    led.gamma[l] = gamma_k(l, d);
    led.h_p = h_p_const(pe, d);
    led.named["b_p_l"] = b.at(pe, l);
    led.named["b_0_l"] = b.at(0, l);
    const double hat_p = hat_C(l, pe, cp, b.at(pe, l), d);
    const double hat_0 = hat_C(l, 0, 1.0, b.at(0, l), d);
    led.hat_C[{l, pe}] = hat_p;
    led.hat_C[{l, 0}] = hat_0;
    led.a[0] = 1.0;
    led.a[2 * pe] = family.max_moment(2.0 * pe);
    led.a[2 * l] = family.max_moment(2.0 * l);
    const double bar_p = bar_C(hat_p, led.a[2 * pe], led.a[2 * l], d);
    const double bar_0 = bar_C(hat_0, 1.0, led.a[2 * l], d);
    led.bar_C[{l, pe}] = bar_p;
    led.bar_C[{l, 0}] = bar_0;
    const double th_p = theta(l, pe, d);
    const double th_0 = theta(l, 0.0, d);
    led.theta[{l, pe}] = th_p;
    led.theta[{l, 0}] = th_0;

    if (A == 0.0) {
        cert.branch = "identical";
        cert.rhs = 0.0;
    } else if (A <= 1.0) {
        cert.M = choose_M(A, l);
        cert.rhs = (2.0 * bar_p + bar_0) * std::pow(A, th_p);
        // |x|^p <= 1 + |x|^{p'}: pay for the promoted power with extra total-variation terms.
        if (!params.p_is_even()) cert.rhs += 2.0 * bar_0 * std::pow(A, th_0);
    } else {
        cert.branch = "constant";
        const double moments = family.pair_moment(params.p);
        led.named["pair_moment_p"] = moments;
        cert.rhs = (2.0 + moments) * A;
    }
    finish(cert);
    return cert;
}

BoundCertificate certificate_lemma1(const GaussianMixture& a, const GaussianMixture& b, const BoundParams& params) {
    const double A = one_dim_w(a, b, params.q);
    const double lhs = rho_p(a, b, params.p).value;
    return certificate_lemma1(params, A, lhs, LawFamily::of_pair(a, b));
}

BoundCertificate certificate_pointwise(const BoundParams& params, const MultiIndex& alpha, double A, double lhs,
                                       const LawFamily& family) {
    check_inputs(params, A, lhs, family);
    for (std::size_t j = 0; j < kMaxGridDim; ++j) {
        detail::require(alpha[j] >= 0 && (j < params.d || alpha[j] == 0), "pointwise certificate: invalid multi-index");
    }
    auto cert = start(params, Regime::Pointwise, A, lhs);
    cert.alpha = alpha;
    const std::size_t d = params.d;
    const int k = order(alpha);
    const int dk = static_cast<int>(d) + k;
    const double eps = params.epsilon;
    int l = static_cast<int>(std::ceil((dk + 1.0 - eps) / eps - 1e-9));
    l = std::max(l, dk + 1);
    while (static_cast<double>(l - dk) / (l + 1.0) < 1.0 - eps) ++l;
    cert.l = l;
    const double expo = static_cast<double>(l - dk) / (l + 1.0);

    const int pe = params.p_even();
    auto& led = cert.constants;
    const auto b = family.pair_frequency_envelope(pe, l);
    const double cp = family_c_circ(pe, params.q, family);
    const double g = gamma_k(l - k, d);
    const double vol = ball_volume(d);
    const double two_pi_d = std::pow(2.0 * std::numbers::pi, static_cast<double>(d));
    const double c_pt_p = 2.0 * static_cast<double>(d) * (cp * vol + b.at(pe, l) * g) / two_pi_d;
    const double c_pt_0 = 2.0 * (vol + b.at(0, l) * g) / two_pi_d;
    const double h = h_p_const(pe, d);
    const double total = (params.p_is_even() ? 1.0 : 2.0) * c_pt_0 + h * c_pt_p;
    led.c_circ[0] = 1.0;
    led.c_circ[pe] = cp;
    led.gamma[l - k] = g;
    led.h_p = h;
    led.named["b_p_l"] = b.at(pe, l);
    led.named["b_0_l"] = b.at(0, l);
    led.named["C_pt_p"] = c_pt_p;
    led.named["C_pt_0"] = c_pt_0;
    led.named["C_pt"] = total;
    led.named["exponent"] = expo;

    if (A == 0.0) {
        cert.branch = "identical";
        cert.rhs = 0.0;
    } else if (A <= 1.0) {
        cert.M = choose_M(A, l);
        cert.rhs = total * std::pow(A, expo);
    } else {
        cert.branch = "constant";
        cert.rhs = total * A;
    }
    finish(cert);
    return cert;
}

double pointwise_lhs(const GaussianMixture& a, const GaussianMixture& b, double p, const MultiIndex& alpha,
                     const GridSpec& grid) {
    detail::require(a.dim() == b.dim() && a.dim() == grid.dim(), "pointwise_lhs: dimension mismatch");
    const std::size_t d = grid.dim();
    double best = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto x = grid.point(i);
        const std::span<const double> xs{x.data(), d};
        double r2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) r2 += x[j] * x[j];
        const double w = p > 0.0 ? 1.0 + std::pow(std::sqrt(r2), p) : 1.0;
        const double diff = density_derivative_analytic(a, xs, alpha) - density_derivative_analytic(b, xs, alpha);
        best = std::max(best, std::abs(diff) * w);
    }
    return best;
}

BoundCertificate certificate_pointwise(const GaussianMixture& a, const GaussianMixture& b, const BoundParams& params,
                                       const MultiIndex& alpha) {
    const double A = one_dim_w(a, b, params.q);
    const auto family = LawFamily::of_pair(a, b);
    const double lhs = pointwise_lhs(a, b, params.p, alpha, family.grid());
    return certificate_pointwise(params, alpha, A, lhs, family);
}

BoundCertificate certificate_lemma2(const BoundParams& params, double A, double lhs, const LawFamily& family, double r,
                                    std::optional<double> c_sharp) {
    check_inputs(params, A, lhs, family);
    detail::require(r > 0.0 && std::isfinite(r), "lemma2 certificate needs an exponential-moment rate r > 0");
    auto cert = start(params, Regime::Lemma2Exp, A, lhs);
    const std::size_t d = params.d;
    const double dd = static_cast<double>(d);
    const int pe = params.p_even();
    auto& led = cert.constants;

    const auto env = family.pair_exp_envelope(pe);
    const double r0 = env.entries[0].r, c0 = env.entries[0].c;
    const double rp = env.entries[static_cast<std::size_t>(pe)].r;
    // |Delta_p phi| <= sqrt(d) times the Euclidean norm of the p-th derivative tensor.
    const double cp = std::sqrt(dd) * env.entries[static_cast<std::size_t>(pe)].c;
    const double sharp = c_sharp ? *c_sharp : family.pair_exp_moment(r);
    detail::require(sharp > 0.0 && std::isfinite(sharp), "lemma2 certificate needs a finite C_sharp");
    const double circ_p = family_c_circ(pe, params.q, family);
    const double s_p = family.pair_marginal_moment(pe);
    const double h = h_p_const(pe, d);
    const double vol = ball_volume(d);
    const double omega = sphere_area(d);
    const double two_pi_d = std::pow(2.0 * std::numbers::pi, dd);

    // Pointwise bound C'' A |ln A|^{d+1} with M = 2|ln A| / r_k; the tail is split by
    // Cauchy-Schwarz with \int G^2 e^{r|u|} <= sup G * \int G e^{r|u|}.
    auto pointwise_constant = [&](double lead, double rk, double l2) {
        const double kd = radial_tail_factor(d, rk);
        return (lead * vol * std::pow(2.0 / rk, dd + 1.0) +
                l2 * std::sqrt(omega * kd) * std::pow(2.0 / rk, 0.5 * (dd - 1.0)) * std::pow(rk, -0.5 * (dd + 3.0))) /
               two_pi_d;
    };
    const double l2_p = std::sqrt(s_p * cp);
    const double l2_0 = std::sqrt(2.0 * c0);
    const double cpp_p = pointwise_constant(2.0 * dd * circ_p, rp, l2_p);
    const double cpp_0 = pointwise_constant(2.0, r0, l2_0);
    const double L0 = std::max(r0, rp);
    const double e = 2.0 * dd + 1.0;
    const double poly_tail = std::pow(2.0 * pe / (r * std::numbers::e), pe);
    const double c3_p = vol * std::pow(2.0 / r, dd) * h * cpp_p + poly_tail * sharp / std::pow(L0, e);
    const double c3_0 = vol * std::pow(r, -dd) * cpp_0 + sharp / std::pow(L0, e);
    const double c4 = c3_p + (params.p_is_even() ? 1.0 : 3.0) * c3_0;

    led.c_circ[0] = 1.0;
    led.c_circ[pe] = circ_p;
    led.h_p = h;
    led.named["r_0"] = r0;
    led.named["c_0"] = c0;
    led.named["r_p"] = rp;
    led.named["c_p"] = cp;
    led.named["r"] = r;
    led.named["C_sharp"] = sharp;
    led.named["S_p"] = s_p;
    led.named["L2_p"] = l2_p;
    led.named["L2_0"] = l2_0;
    led.named["C2_p"] = cpp_p;
    led.named["C2_0"] = cpp_0;
    led.named["C3_p"] = c3_p;
    led.named["C3_0"] = c3_0;
    led.named["C4"] = c4;
    led.named["log_threshold"] = L0;

    if (A == 0.0) {
        cert.branch = "identical";
        cert.rhs = 0.0;
    } else if (A < std::exp(-L0)) {
        const double la = std::abs(std::log(A));
        cert.M = 2.0 * la / rp;
        cert.rhs = c4 * A * std::pow(la, e);
    } else {
        cert.branch = "constant";
        const double moments = family.pair_moment(params.p);
        led.named["pair_moment_p"] = moments;
        cert.rhs = (2.0 + moments) * std::max(A, 1.0);
    }
    finish(cert);
    return cert;
}

BoundCertificate certificate_lemma2(const GaussianMixture& a, const GaussianMixture& b, const BoundParams& params,
                                    double r) {
    const double A = one_dim_w(a, b, params.q);
    const double lhs = rho_p(a, b, params.p).value;
    return certificate_lemma2(params, A, lhs, LawFamily::of_pair(a, b), r);
}

}  // namespace wtv
