// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "brute_force_ot.hpp"
#include "wtv/bounds.hpp"
#include "wtv/errors.hpp"
#include "wtv/harness.hpp"
#include "wtv/serialization.hpp"
#include "wtv/spectral.hpp"
#include "wtv/transport.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

wtv::AtomSet random_atoms(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::uniform_real_distribution<double> loc(0.0, 1.0), mass(0.1, 1.0);
    std::vector<double> x(n * d), m(n);
    for (auto& v : x) v = loc(rng);
    for (auto& v : m) v = mass(rng);
    const double total = std::accumulate(m.begin(), m.end(), 0.0);
    for (auto& v : m) v /= total;
    return wtv::AtomSet(d, std::move(x), std::move(m));
}

std::vector<wtv::Scenario> load_scenarios() {
    std::vector<wtv::Scenario> out;
    for (const auto& j : wtv::read_json_file(std::string(WTV_EXAMPLES_DIR) + "/scenarios.json")) {
        out.push_back(wtv::scenario_from_json(j));
    }
    return out;
}

const std::vector<wtv::SweepReport>& sweeps() {
    static const std::vector<wtv::SweepReport> reports = [] {
        std::vector<wtv::SweepReport> r;
        for (const auto& sc : load_scenarios()) r.push_back(wtv::run_sweep(sc));
        return r;
    }();
    return reports;
}

Outcome closed_form_wq() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (double h : {0.5, 0.1, 0.01}) {
        const auto r = wtv::wasserstein_1d(wtv::GaussianMixture::normal(0.0, 1.0), wtv::GaussianMixture::normal(h, 1.0), 2.0);
        worst = std::max(worst, std::abs(r.value - h));
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-6 && t < 1.0, fmt("max |W2 - h| = %.3g, %.3f s", worst, t)};
}

Outcome closed_form_tv() {
    const boost::math::normal_distribution<double> z;
    const double expected = 2.0 * (2.0 * boost::math::cdf(z, 0.5) - 1.0);
    const double got = wtv::tv_mass(wtv::GaussianMixture::normal(0.0, 1.0), wtv::GaussianMixture::normal(1.0, 1.0)).value;
    return {std::abs(got - expected) <= 1e-4, fmt("tv = %.9f, oracle %.9f", got, expected)};
}

Outcome ot_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    int trials = 0;
    for (std::size_t d : {1u, 2u}) {
        for (double q : {1.0, 2.0}) {
            for (int k = 0; k < 25; ++k) {
                const auto a = random_atoms(rng, 4, d), b = random_atoms(rng, 4, d);
                const double exact = wtv::ot_exact(a, b, q).first.value;
                const double brute = wtv_test::brute_force_wq(a, b, q);
                worst = std::max(worst, std::abs(exact - brute));
                ++trials;
            }
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-9 && t < 10.0 && trials == 100, fmt("%.0f pairs, max diff %.3g, %.3f s", trials, worst, t)};
}

Outcome entropic_accuracy() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const std::size_t d = k % 2 == 0 ? 1 : 2;
        const auto a = random_atoms(rng, 64, d), b = random_atoms(rng, 64, d);
        const double exact = wtv::ot_exact(a, b, 2.0).first.value;
        const double ent = wtv::ot_entropic(a, b, 2.0).value;
        worst = std::max(worst, std::abs(ent - exact) / exact);
    }
    const double t = seconds_since(t0);
    return {worst <= 0.01 && t < 30.0, fmt("max relative gap %.3g, %.3f s", worst, t)};
}

Outcome fourier_reconstruction() {
    const auto t0 = Clock::now();
    const auto a = wtv::GaussianMixture::normal(0.0, 1.0), b = wtv::GaussianMixture::normal(0.5, 1.0);
    const auto spec = wtv::grid_from_box(wtv::auto_box(a, b, 1e-12), 4096);
    const auto rec = wtv::weighted_diff_reconstruct(a, b, spec, 2);
    double worst = 0.0;
    for (std::size_t k = 0; k < spec.n[0]; ++k) {
        const double x = spec.node(0, k);
        const double direct = (wtv::density_eval(a, {&x, 1}) - wtv::density_eval(b, {&x, 1})) * x * x;
        worst = std::max(worst, std::abs(rec.values[k] - direct));
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-3 && t < 2.0, fmt("sup error %.3g, %.3f s", worst, t)};
}

bool tables_close(const wtv::PolyEnvelopeTable& a, const wtv::PolyEnvelopeTable& b, double rel, double& worst) {
    bool ok = true;
    for (int k = 0; k <= a.K; ++k) {
        for (int l = 0; l <= a.L; ++l) {
            const double x = a.at(k, l), y = b.at(k, l);
            if (!std::isfinite(x) || !std::isfinite(y) || !(x > 0.0)) {
                ok = false;
                continue;
            }
            const double r = std::abs(x - y) / x;
            worst = std::max(worst, r);
            ok = ok && r <= rel;
        }
    }
    return ok;
}

Outcome envelope_consistency() {
    using wtv::GaussianMixture;
    std::vector<GaussianMixture> dists;
    dists.push_back(GaussianMixture::normal(0.0, 1.0));
    dists.push_back(wtv::blend(GaussianMixture::normal(-1.0, 0.5), GaussianMixture::normal(1.5, 0.8), 0.4));
    dists.push_back(wtv::blend(GaussianMixture::normal(0.0, 0.3), GaussianMixture::normal(0.0, 2.0), 0.5));
    dists.push_back(wtv::blend(wtv::blend(GaussianMixture::normal(-2.0, 1.0), GaussianMixture::normal(0.0, 0.4), 0.3),
                               GaussianMixture::normal(2.5, 0.6), 0.25));
    {
        Eigen::VectorXd m(2);
        m << 0.3, -0.2;
        dists.push_back(wtv::blend(GaussianMixture::isotropic(m, 0.7), GaussianMixture::isotropic(-m, 1.2), 0.5));
    }
    bool ok = true;
    double worst = 0.0;
    for (const auto& dist : dists) {
        const std::size_t d = dist.dim();
        // Padding the box refines the dual grid so the frequency-side suprema are resolved.
        const std::size_t n = d == 1 ? 4096 : 256;
        const double pad = d == 1 ? 4.0 : 2.0;
        auto box = wtv::auto_box(dist, 1e-14);
        for (std::size_t j = 0; j < d; ++j) {
            const double c = 0.5 * (box.lo[j] + box.hi[j]), half = 0.5 * pad * (box.hi[j] - box.lo[j]);
            box.lo[j] = c - half;
            box.hi[j] = c + half;
        }
        const auto spec = wtv::grid_from_box(box, n);
        // Density side: same box, twice the nodes.
        const auto d1 = wtv::poly_envelope(wtv::discretize(dist, spec), 4, 6);
        const auto d2 = wtv::poly_envelope(wtv::discretize(dist, spec.refined()), 4, 6);
        ok = tables_close(d1, d2, 0.05, worst) && ok;
        // Frequency side: box and node count doubled, so the dual spacing halves.
        wtv::GridSpec wide = spec;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = 0.5 * (spec.lo[j] + spec.hi[j]), half = spec.hi[j] - spec.lo[j];
            wide.lo[j] = c - half;
            wide.hi[j] = c + half;
            wide.n[j] = 2 * spec.n[j];
        }
        const auto f1 = wtv::poly_envelope(wtv::char_fn_grid(wtv::discretize(dist, spec)), 4, 6);
        const auto f2 = wtv::poly_envelope(wtv::char_fn_grid(wtv::discretize(dist, wide)), 4, 6);
        ok = tables_close(f1, f2, 0.05, worst) && ok;
    }
    return {ok, fmt("5 laws, max relative change under refinement %.3g", worst)};
}

Outcome exponent_formulas() {
    int checked = 0, bad = 0;
    for (int e = 1; e <= 19; ++e) {
        const double eps = 0.05 * e;
        for (double p : {2.0, 4.0, 6.0}) {
            for (std::size_t d : {1u, 2u, 3u}) {
                const int l = wtv::choose_l(eps, p, d);
                ++checked;
                if (!(wtv::theta(l, p, d) >= 1.0 - eps)) ++bad;
            }
        }
    }
    return {bad == 0 && checked == 171, fmt("%.0f combinations, %.0f below 1 - eps", checked, bad)};
}

Outcome lemma1_soundness() {
    const auto t0 = Clock::now();
    (void)sweeps();
    const double t = seconds_since(t0);
    int rows = 0, bad = 0;
    for (const auto& rep : sweeps()) {
        for (const auto& r : rep.rows) {
            ++rows;
            if (r.failed() || !r.ok1 || !r.okp || !(r.rho_p <= r.rhs1) || !(r.psup <= r.prhs)) ++bad;
        }
    }
    return {bad == 0 && rows == 20 && t < 120.0, fmt("%.0f rows, %.0f violations, %.1f s for all sweeps", rows, bad, t)};
}

Outcome lemma2_soundness() {
    int bad = 0;
    double spread = 0.0;
    auto ratio_spread = [&](const wtv::SweepReport& rep) {
        double lo = INFINITY, hi = 0.0;
        int rate_rows = 0;
        for (const auto& r : rep.rows) {
            if (r.failed() || !r.ok2 || !(r.rho_p <= r.rhs2)) ++bad;
            if (r.failed() || r.lemma2_branch != "rate") continue;
            const double la = std::abs(std::log(r.A));
            const double ratio = r.rhs2 / (r.A * la * la * la);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            ++rate_rows;
        }
        if (rate_rows < 2) {
            ++bad;
            return;
        }
        spread = std::max(spread, hi / lo - 1.0);
    };
    for (const auto& rep : sweeps()) ratio_spread(rep);

    // The same family over five decades of A.
    auto sc = load_scenarios().front();
    sc.name = "gaussian-translate-decades";
    sc.h = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    ratio_spread(wtv::run_sweep(sc));
    return {bad == 0 && spread <= 0.01, fmt("%.0f problems, max spread of rhs/(A|ln A|^3) %.3g", bad, spread)};
}

Outcome rate_recovery() {
    for (const auto& rep : sweeps()) {
        if (rep.scenario != "gaussian-translate") continue;
        if (!rep.fit) return {false, "no fit"};
        const double s = rep.fit->slope;
        return {s >= 0.95 && s <= 1.05 && s >= 0.9, fmt("slope %.5f +/- %.2g", s, rep.fit->stderr_slope)};
    }
    return {false, "gaussian-translate scenario missing"};
}

Outcome metric_axioms() {
    std::mt19937_64 rng(99);
    double asym = 0.0, slack = INFINITY;
    for (int k = 0; k < 20; ++k) {
        const auto a = random_atoms(rng, 16, 2), b = random_atoms(rng, 16, 2);
        asym = std::max(asym, std::abs(wtv::ot_exact(a, b, 2.0).first.value - wtv::ot_exact(b, a, 2.0).first.value));
    }
    for (int k = 0; k < 1000; ++k) {
        const std::size_t d = 1 + k % 2;
        const double q = k % 3 == 0 ? 1.0 : 2.0;
        const auto a = random_atoms(rng, 16, d), b = random_atoms(rng, 16, d), c = random_atoms(rng, 16, d);
        const double ab = wtv::ot_exact(a, b, q).first.value;
        const double bc = wtv::ot_exact(b, c, q).first.value;
        const double ac = wtv::ot_exact(a, c, q).first.value;
        slack = std::min(slack, ab + bc - ac);
    }
    return {asym <= 1e-10 && slack >= -1e-9, fmt("asymmetry %.3g, min triangle slack %.3g", asym, slack)};
}

Outcome reproducibility() {
    bool same = true;
    for (const auto& sc : load_scenarios()) {
        const auto r1 = wtv::run_sweep(sc), r2 = wtv::run_sweep(sc);
        same = same && wtv::report_csv(r1) == wtv::report_csv(r2) && wtv::to_json(r1).dump(2) == wtv::to_json(r2).dump(2);
    }
    return {same, same ? "CSV and JSON byte-identical across two runs" : "outputs differ"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"closed-form W_q", closed_form_wq},
        {"closed-form TV", closed_form_tv},
        {"OT oracle equivalence", ot_oracle},
        {"entropic accuracy", entropic_accuracy},
        {"Fourier reconstruction", fourier_reconstruction},
        {"envelope table consistency", envelope_consistency},
        {"exponent formulas", exponent_formulas},
        {"polynomial-regime certificate soundness", lemma1_soundness},
        {"exponential-regime certificate soundness and shape", lemma2_soundness},
        {"rate recovery", rate_recovery},
        {"metric axioms", metric_axioms},
        {"reproducibility", reproducibility},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
