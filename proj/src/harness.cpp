#include "wtv/harness.hpp"

#include <cmath>
#include <future>
#include <sstream>

#include "wtv/errors.hpp"
#include "wtv/transport.hpp"

namespace wtv {

std::string to_string(Perturbation k) {
    switch (k) {
        case Perturbation::Translate: return "translate";
        case Perturbation::Scale: return "scale";
        case Perturbation::MixtureWeight: return "mixture-weight";
        case Perturbation::SmoothedSequence: return "smoothed-sequence";
    }
    return "unknown";
}

Perturbation perturbation_from_string(const std::string& s) {
    for (auto k : {Perturbation::Translate, Perturbation::Scale, Perturbation::MixtureWeight,
                   Perturbation::SmoothedSequence}) {
        if (to_string(k) == s) return k;
    }
    detail::fail_precondition("unknown perturbation kind '" + s + "'");
}

void Scenario::validate() const {
    detail::require(!name.empty(), "scenario name must not be empty");
    params.validate();
    detail::require(params.d == base.dim(), "scenario params.d differs from the base law's dimension");
    detail::require(base.dim() == 1, "sweeps need a closed-form W_q and are limited to d = 1");
    detail::require(!h.empty(), "scenario needs at least one h value");
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0.0) || !std::isfinite(h[i])) {
            std::ostringstream os;
            os << "scenario h values must be strictly positive (h[" << i << "] = " << h[i] << ")";
            detail::fail_precondition(os.str());
        }
        if (i > 0) detail::require(h[i] < h[i - 1], "scenario h values must be sorted strictly descending");
    }
    if (kind == Perturbation::MixtureWeight) {
        detail::require(base.size() >= 2, "mixture-weight scenarios need a base law with at least two components");
    }
    if (kind == Perturbation::MixtureWeight || kind == Perturbation::SmoothedSequence) {
        detail::require(h.front() < 1.0, "mixture weights h must lie below 1");
    }
    if (kind == Perturbation::SmoothedSequence) {
        detail::require(sigma > 0.0 && std::isfinite(sigma), "smoothing scale sigma must be positive");
        if (noise) detail::require(noise->dim() == base.dim(), "noise law has the wrong dimension");
    }
    detail::require(lemma2_r > 0.0, "lemma2 rate r must be positive");
    for (std::size_t j = 0; j < kMaxGridDim; ++j) {
        detail::require(alpha[j] >= 0 && (j < base.dim() || alpha[j] == 0), "invalid pointwise multi-index");
    }
}

std::pair<GaussianMixture, GaussianMixture> Scenario::pair_at(double hv) const {
    switch (kind) {
        case Perturbation::Translate: {
            std::vector<double> shift(base.dim(), 0.0);
            shift[0] = hv;
            return {base, translate(base, shift)};
        }
        case Perturbation::Scale: return {base, scale(base, 1.0 + hv)};
        case Perturbation::MixtureWeight: {
            auto comps = base.components();
            const double moved = hv * comps[0].weight;
            comps[0].weight -= moved;
            comps[1].weight += moved;
            return {base, GaussianMixture(base.dim(), std::move(comps))};
        }
        case Perturbation::SmoothedSequence: {
            const GaussianMixture nz = noise ? *noise : GaussianMixture::normal(0.0, 1.0);
            return {smooth(base, sigma), smooth(blend(base, nz, hv), sigma)};
        }
    }
    detail::fail_precondition("unknown perturbation");
}

std::size_t SweepReport::failed_rows() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.failed() ? 1 : 0;
    return n;
}

bool SweepReport::failed() const { return 5 * failed_rows() > rows.size(); }

bool SweepReport::certificates_hold() const {
    for (const auto& r : rows) {
        if (r.failed() || r.A > 1.0) continue;
        if (!(r.ok1 && r.ok2 && r.okp)) return false;
    }
    return true;
}

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
    detail::require(x.size() == y.size(), "fit_rate: x and y differ in length");
    detail::require(x.size() >= 3, "fit_rate needs at least 3 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        detail::require(x[i] > 0.0 && y[i] > 0.0, "fit_rate needs positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    detail::require(sxx > 0.0, "fit_rate needs at least two distinct x values");
    RateFit fit;
    fit.n = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double res = ly[i] - fit.intercept - fit.slope * lx[i];
        ssr += res * res;
    }
    fit.stderr_slope = std::sqrt(ssr / (n - 2.0) / sxx);
    return fit;
}

RateFit fit_rate(const std::vector<SweepRow>& rows) {
    std::vector<double> x, y;
    for (const auto& r : rows) {
        if (r.failed() || !(r.A > 0.0 && r.A <= 1.0) || !(r.rho_p > 0.0)) continue;
        x.push_back(r.A);
        y.push_back(r.rho_p);
    }
    return fit_rate(x, y);
}

SweepReport run_sweep(const Scenario& sc) {
    sc.validate();
    const auto& params = sc.params;

    // Every certificate in the sweep uses constants that hold uniformly over the family.
    std::vector<GaussianMixture> laws;
    laws.push_back(sc.pair_at(sc.h.front()).first);
    for (double hv : sc.h) laws.push_back(sc.pair_at(hv).second);
    Box box = auto_box(laws.front(), 1e-12);
    for (const auto& law : laws) {
        const Box b = auto_box(law, 1e-12);
        for (std::size_t j = 0; j < box.lo.size(); ++j) {
            box.lo[j] = std::min(box.lo[j], b.lo[j]);
            box.hi[j] = std::max(box.hi[j], b.hi[j]);
        }
    }
    const std::size_t n = sc.grid_n ? sc.grid_n : LawFamily::default_resolution(sc.base.dim());
    const LawFamily family(laws, grid_from_box(box, n));

    SweepReport report;
    report.scenario = sc.name;
    report.params = params;
    report.seed = sc.seed;
    report.grid_n = n;
    report.version = "wtv 0.1.0";

    auto compute_row = [&](double hv) {
        SweepRow row;
        row.h = hv;
        try {
            const auto [a, b] = sc.pair_at(hv);
            row.A = wasserstein_1d(a, b, params.q).value;
            row.rho_p = rho_p(a, b, params.p).value;
            row.tv = tv_mass(a, b).value;
            const auto c1 = certificate_lemma1(params, row.A, row.rho_p, family);
            const auto c2 = certificate_lemma2(params, row.A, row.rho_p, family, sc.lemma2_r);
            row.psup = pointwise_lhs(a, b, params.p, sc.alpha, family.grid());
            const auto cp = certificate_pointwise(params, sc.alpha, row.A, row.psup, family);
            row.rhs1 = c1.rhs;
            row.rhs2 = c2.rhs;
            row.prhs = cp.rhs;
            row.ok1 = c1.satisfied;
            row.ok2 = c2.satisfied;
            row.okp = cp.satisfied;
            row.lemma2_branch = c2.branch;
            if (sc.entropic_check) {
                // Cross-check only: a solver failure leaves the column empty.
                SinkhornOptions opts;
                opts.schedule = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
                try {
                    row.entropic = ot_entropic(quantile_atoms(a, 64), quantile_atoms(b, 64), params.q, opts).value;
                } catch (const NumericalError&) {
                    row.entropic.reset();
                }
            }
        } catch (const Error& e) {
            row = SweepRow{};
            row.h = hv;
            const double nan = std::nan("");
            row.A = row.rho_p = row.tv = row.rhs1 = row.rhs2 = row.psup = row.prhs = nan;
            row.error = e.what();
        }
        return row;
    };

    // Rows are independent; collecting the futures in h order keeps the report deterministic.
    std::vector<std::future<SweepRow>> pending;
    for (double hv : sc.h) pending.push_back(std::async(std::launch::async, compute_row, hv));
    for (auto& f : pending) report.rows.push_back(f.get());
    try {
        report.fit = fit_rate(report.rows);
    } catch (const PreconditionError&) {
        report.fit.reset();
    }
    return report;
}

}  // namespace wtv
