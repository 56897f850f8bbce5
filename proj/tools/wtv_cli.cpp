#include <CLI11.hpp>

#include <iostream>
#include <set>

#include "wtv/bounds.hpp"
#include "wtv/distributions.hpp"
#include "wtv/errors.hpp"
#include "wtv/harness.hpp"
#include "wtv/serialization.hpp"
#include "wtv/spectral.hpp"
#include "wtv/transport.hpp"

namespace {

using wtv::json;

bool is_atoms(const json& j) { return j.is_object() && j.contains("atoms"); }

int run_dist(const std::string& a_path, const std::string& b_path, const std::string& metric, double p, double q) {
    const json ja = wtv::read_json_file(a_path), jb = wtv::read_json_file(b_path);
    wtv::DistanceResult r;
    if (is_atoms(ja) || is_atoms(jb)) {
        wtv::detail::require(is_atoms(ja) && is_atoms(jb), "both inputs must be atom sets or both mixtures");
        wtv::detail::require(metric == "wq", "atom sets support only --metric wq");
        r = wtv::ot_exact(wtv::atoms_from_json(ja), wtv::atoms_from_json(jb), q).first;
    } else {
        const auto a = wtv::mixture_from_json(ja), b = wtv::mixture_from_json(jb);
        if (metric == "rho_p") r = wtv::rho_p(a, b, p);
        else if (metric == "tv") r = wtv::tv_mass(a, b);
        else r = wtv::wasserstein_1d(a, b, q);
    }
    std::cout << wtv::to_json(r).dump(2) << '\n';
    return 0;
}

int run_envelope(const std::string& input, const std::string& side, int K, int L, std::size_t n, bool exp) {
    const auto dist = wtv::mixture_from_json(wtv::read_json_file(input));
    wtv::detail::require(K >= 0 && L >= 0, "K and L must be nonnegative");
    const std::size_t res = n ? n : wtv::LawFamily::default_resolution(dist.dim());
    const auto grid = wtv::grid_from_box(wtv::auto_box(dist, 1e-12), res);
    json out;
    if (side == "density") {
        out = wtv::to_json(wtv::poly_envelope(wtv::discretize(dist, grid), K, L));
    } else {
        const auto phi = wtv::char_fn_on_grid(dist, grid);
        out = wtv::to_json(wtv::poly_envelope(phi, K, L));
        if (exp) out["exp"] = wtv::to_json(wtv::exp_envelope(phi, K));
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

int run_certify(const std::string& a_path, const std::string& b_path, const wtv::BoundParams& params,
                const std::string& regime, double r) {
    const auto a = wtv::mixture_from_json(wtv::read_json_file(a_path));
    const auto b = wtv::mixture_from_json(wtv::read_json_file(b_path));
    wtv::BoundCertificate c;
    if (regime == "lemma1") c = wtv::certificate_lemma1(a, b, params);
    else if (regime == "lemma2") c = wtv::certificate_lemma2(a, b, params, r);
    else c = wtv::certificate_pointwise(a, b, params, wtv::MultiIndex{});
    std::cout << wtv::to_json(c).dump(2) << '\n';
    return 0;
}

int run_sweep_cmd(const std::string& scenario_path, const std::string& out_dir, const std::string& formats) {
    const json doc = wtv::read_json_file(scenario_path);
    std::vector<wtv::Scenario> scenarios;
    if (doc.is_array()) {
        for (const auto& j : doc) scenarios.push_back(wtv::scenario_from_json(j));
    } else {
        scenarios.push_back(wtv::scenario_from_json(doc));
    }
    std::set<std::string> names;
    for (const auto& sc : scenarios) {
        wtv::detail::require(names.insert(sc.name).second, "duplicate scenario name '" + sc.name + "'");
    }
    const auto fmts = wtv::parse_formats(formats);

    bool violated = false, failed = false;
    for (const auto& sc : scenarios) {
        const auto report = wtv::run_sweep(sc);
        for (const auto& path : wtv::emit_report(report, out_dir, fmts)) std::cerr << "wrote " << path.string() << '\n';
        for (const auto& row : report.rows) {
            if (row.failed()) std::cerr << sc.name << ": h=" << row.h << " failed: " << row.error << '\n';
        }
        if (report.fit) {
            std::cout << sc.name << ": slope " << report.fit->slope << " +/- " << report.fit->stderr_slope
                      << " over " << report.fit->n << " rows\n";
        } else {
            std::cout << sc.name << ": too few rows in the rate regime for a slope fit\n";
        }
        failed = failed || report.failed();
        violated = violated || !report.certificates_hold();
    }
    if (failed) return static_cast<int>(wtv::ExitCode::Numerical);
    if (violated) return static_cast<int>(wtv::ExitCode::CertificateViolated);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted total variation bounds from Wasserstein distances"};
    app.require_subcommand(1);

    std::string a_path, b_path, metric = "wq";
    double p = 2.0, q = 2.0;
    auto* dist = app.add_subcommand("dist", "One-off distance between two laws");
    dist->add_option("--a", a_path, "First law (mixture or atom-set JSON)")->required()->check(CLI::ExistingFile);
    dist->add_option("--b", b_path, "Second law")->required()->check(CLI::ExistingFile);
    dist->add_option("--metric", metric, "rho_p | tv | wq")->check(CLI::IsMember({"rho_p", "tv", "wq"}));
    dist->add_option("--p", p, "Weight power of rho_p");
    dist->add_option("--q", q, "Wasserstein order");

    std::string input, side = "density";
    int K = 4, L = 6;
    std::size_t n = 0;
    bool exp = false;
    auto* env = app.add_subcommand("envelope", "Decay envelope table of a mixture");
    env->add_option("--input", input, "Mixture JSON")->required()->check(CLI::ExistingFile);
    env->add_option("--side", side, "density | frequency")->check(CLI::IsMember({"density", "frequency"}));
    env->add_option("--K", K, "Largest derivative order");
    env->add_option("--L", L, "Largest polynomial weight");
    env->add_option("--n", n, "Grid nodes per axis (0 = default)");
    env->add_flag("--exp", exp, "Also fit the exponential envelope (frequency side)");

    wtv::BoundParams params;
    std::string regime = "lemma1";
    double r = 1.0;
    auto* cert = app.add_subcommand("certify", "Evaluate a bound certificate for a pair");
    cert->add_option("--a", a_path, "First law (mixture JSON)")->required()->check(CLI::ExistingFile);
    cert->add_option("--b", b_path, "Second law")->required()->check(CLI::ExistingFile);
    cert->add_option("--p", params.p, "Weight power");
    cert->add_option("--q", params.q, "Wasserstein order");
    cert->add_option("--eps", params.epsilon, "Rate loss epsilon");
    cert->add_option("--regime", regime, "lemma1 | lemma2 | pointwise")
        ->check(CLI::IsMember({"lemma1", "lemma2", "pointwise"}));
    cert->add_option("--r", r, "Exponential-moment rate (lemma2)");

    std::string scenario_path, out_dir = ".", formats = "csv,json,svg";
    auto* sweep = app.add_subcommand("sweep", "Run scenario sweeps and write reports");
    sweep->add_option("--scenario", scenario_path, "Scenario JSON (object or array)")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_option("--out", out_dir, "Output directory");
    sweep->add_option("--formats", formats, "Comma-separated subset of csv,json,svg");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(wtv::ExitCode::Precondition);
    }

    try {
        if (*dist) return run_dist(a_path, b_path, metric, p, q);
        if (*env) return run_envelope(input, side, K, L, n, exp);
        if (*cert) {
            return run_certify(a_path, b_path, params, regime, r);
        }
        return run_sweep_cmd(scenario_path, out_dir, formats);
    } catch (const wtv::PreconditionError& e) {
        std::cerr << "precondition violated: " << e.what() << '\n';
        return static_cast<int>(wtv::ExitCode::Precondition);
    } catch (const wtv::Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return static_cast<int>(wtv::ExitCode::Numerical);
    }
}
