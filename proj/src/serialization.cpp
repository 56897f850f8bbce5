#include "wtv/serialization.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "wtv/errors.hpp"

namespace wtv {

namespace {

// Runs a parser and turns library exceptions into PreconditionError.
template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        detail::fail_precondition(std::string("malformed ") + what + " document: " + e.what());
    }
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string side_name(EnvelopeSide s) { return s == EnvelopeSide::Density ? "density" : "frequency"; }

EnvelopeSide side_from(const std::string& s) {
    if (s == "density") return EnvelopeSide::Density;
    if (s == "frequency") return EnvelopeSide::Frequency;
    detail::fail_precondition("unknown envelope side '" + s + "'");
}

json pair_map(const std::map<std::pair<int, int>, double>& m) {
    json out = json::object();
    for (const auto& [k, v] : m) out[std::to_string(k.first) + "," + std::to_string(k.second)] = nullable(v);
    return out;
}

json int_map(const std::map<int, double>& m) {
    json out = json::object();
    for (const auto& [k, v] : m) out[std::to_string(k)] = nullable(v);
    return out;
}

}  // namespace

json to_json(const GaussianMixture& dist) {
    const std::size_t d = dist.dim();
    json comps = json::array();
    for (const auto& c : dist.components()) {
        json mean = json::array(), cov = json::array();
        for (std::size_t i = 0; i < d; ++i) {
            mean.push_back(c.mean(static_cast<Eigen::Index>(i)));
            json row = json::array();
            for (std::size_t k = 0; k < d; ++k) row.push_back(c.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
            cov.push_back(row);
        }
        comps.push_back({{"w", c.weight}, {"mean", mean}, {"cov", cov}});
    }
    return {{"d", d}, {"components", comps}};
}

GaussianMixture mixture_from_json(const json& j) {
    return guarded("mixture", [&] {
        const auto d = j.at("d").get<std::size_t>();
        detail::require(d >= 1 && d <= kMaxGridDim, "mixture dimension must be 1, 2 or 3");
        std::vector<MixtureComponent> comps;
        for (const auto& c : j.at("components")) {
            MixtureComponent mc;
            mc.weight = c.at("w").get<double>();
            const auto& mean = c.at("mean");
            const auto& cov = c.at("cov");
            mc.mean = Eigen::VectorXd(static_cast<Eigen::Index>(d));
            mc.cov = Eigen::MatrixXd(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
            if (d == 1 && mean.is_number()) {
                mc.mean(0) = mean.get<double>();
            } else {
                detail::require(mean.is_array() && mean.size() == d, "component mean has the wrong length");
                for (std::size_t i = 0; i < d; ++i) mc.mean(static_cast<Eigen::Index>(i)) = mean[i].get<double>();
            }
            if (d == 1 && cov.is_number()) {
                mc.cov(0, 0) = cov.get<double>();
            } else {
                detail::require(cov.is_array() && cov.size() == d, "component covariance has the wrong shape");
                for (std::size_t i = 0; i < d; ++i) {
                    detail::require(cov[i].is_array() && cov[i].size() == d, "component covariance has the wrong shape");
                    for (std::size_t k = 0; k < d; ++k) {
                        mc.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = cov[i][k].get<double>();
                    }
                }
            }
            comps.push_back(std::move(mc));
        }
        return GaussianMixture(d, std::move(comps));
    });
}

json to_json(const AtomSet& atoms) {
    json arr = json::array();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto x = atoms.location(i);
        arr.push_back({{"x", std::vector<double>(x.begin(), x.end())}, {"m", atoms.mass(i)}});
    }
    return {{"d", atoms.dim()}, {"atoms", arr}};
}

AtomSet atoms_from_json(const json& j) {
    return guarded("atom set", [&] {
        const auto d = j.at("d").get<std::size_t>();
        detail::require(d >= 1, "atom dimension must be positive");
        std::vector<double> locs, masses;
        for (const auto& a : j.at("atoms")) {
            const auto x = a.at("x").get<std::vector<double>>();
            detail::require(x.size() == d, "atom location has the wrong length");
            locs.insert(locs.end(), x.begin(), x.end());
            masses.push_back(a.at("m").get<double>());
        }
        return AtomSet(d, std::move(locs), std::move(masses));
    });
}

json to_json(const DistanceResult& r) {
    return {{"value", nullable(r.value)}, {"method", to_string(r.method)}, {"err", nullable(r.err)}};
}

DistanceResult distance_from_json(const json& j) {
    return guarded("distance", [&] {
        DistanceResult r;
        r.value = number_or_nan(j.at("value"));
        r.method = distance_method_from_string(j.at("method").get<std::string>());
        r.err = number_or_nan(j.at("err"));
        return r;
    });
}

json to_json(const PolyEnvelopeTable& t) {
    json entries = json::array();
    for (int k = 0; k <= t.K; ++k) {
        for (int l = 0; l <= t.L; ++l) entries.push_back({{"k", k}, {"l", l}, {"c", nullable(t.at(k, l))}});
    }
    return {{"side", side_name(t.side)}, {"entries", entries}, {"empirical", t.empirical}};
}

PolyEnvelopeTable poly_table_from_json(const json& j) {
    return guarded("envelope table", [&] {
        PolyEnvelopeTable t;
        t.side = side_from(j.at("side").get<std::string>());
        t.empirical = j.value("empirical", true);
        const auto& entries = j.at("entries");
        for (const auto& e : entries) {
            t.K = std::max(t.K, e.at("k").get<int>());
            t.L = std::max(t.L, e.at("l").get<int>());
        }
        const std::size_t cells = static_cast<std::size_t>(t.K + 1) * static_cast<std::size_t>(t.L + 1);
        detail::require(entries.size() == cells, "envelope table must list every (k, l) exactly once");
        t.values.assign(cells, std::numeric_limits<double>::quiet_NaN());
        for (const auto& e : entries) {
            const int k = e.at("k").get<int>(), l = e.at("l").get<int>();
            detail::require(k >= 0 && l >= 0, "envelope indices must be nonnegative");
            detail::require(std::isnan(t.at(k, l)), "duplicate envelope entry");
            t.at(k, l) = number_or_nan(e.at("c"));
        }
        return t;
    });
}

json to_json(const ExpEnvelopeTable& t) {
    json entries = json::array();
    for (std::size_t k = 0; k < t.entries.size(); ++k) {
        const auto& e = t.entries[k];
        entries.push_back({{"k", k},
                           {"r", nullable(e.r)},
                           {"c", nullable(e.c)},
                           {"u_resolved", nullable(e.u_resolved)},
                           {"slope", nullable(e.slope)},
                           {"intercept", nullable(e.intercept)}});
    }
    return {{"entries", entries}, {"empirical", t.empirical}};
}

ExpEnvelopeTable exp_table_from_json(const json& j) {
    return guarded("exp envelope table", [&] {
        ExpEnvelopeTable t;
        t.empirical = j.value("empirical", true);
        const auto& entries = j.at("entries");
        t.entries.resize(entries.size());
        std::vector<bool> seen(entries.size(), false);
        for (const auto& e : entries) {
            const auto k = e.at("k").get<std::size_t>();
            detail::require(k < entries.size() && !seen[k], "exp envelope entries must be numbered 0..K once each");
            seen[k] = true;
            auto& out = t.entries[k];
            out.r = number_or_nan(e.at("r"));
            out.c = number_or_nan(e.at("c"));
            if (e.contains("u_resolved")) out.u_resolved = number_or_nan(e["u_resolved"]);
            if (e.contains("slope")) out.slope = number_or_nan(e["slope"]);
            if (e.contains("intercept")) out.intercept = number_or_nan(e["intercept"]);
        }
        return t;
    });
}

json to_json(const BoundParams& p) { return {{"p", p.p}, {"q", p.q}, {"epsilon", p.epsilon}, {"d", p.d}}; }

BoundParams params_from_json(const json& j) {
    return guarded("params", [&] {
        BoundParams p;
        p.p = j.value("p", p.p);
        p.q = j.value("q", p.q);
        p.epsilon = j.value("epsilon", p.epsilon);
        p.d = j.value("d", p.d);
        p.validate();
        return p;
    });
}

json to_json(const BoundCertificate& c) {
    const auto& k = c.constants;
    json constants = {{"gamma", int_map(k.gamma)}, {"c_circ", int_map(k.c_circ)}, {"h_p", nullable(k.h_p)},
                      {"hat_C", pair_map(k.hat_C)}, {"bar_C", pair_map(k.bar_C)}, {"theta", pair_map(k.theta)},
                      {"a", int_map(k.a)}};
    for (const auto& [name, v] : k.named) constants[name] = nullable(v);
    return {{"regime", to_string(c.regime)},
            {"branch", c.branch},
            {"params", to_json(c.params)},
            {"l", c.l},
            {"M", nullable(c.M)},
            {"A", nullable(c.A)},
            {"alpha", std::vector<int>(c.alpha.begin(), c.alpha.begin() + static_cast<long>(c.params.d))},
            {"constants", constants},
            {"rhs", nullable(c.rhs)},
            {"lhs", nullable(c.lhs)},
            {"satisfied", c.satisfied},
            {"provenance", c.provenance}};
}

json to_json(const Scenario& sc) {
    json j = {{"name", sc.name},
              {"kind", to_string(sc.kind)},
              {"base", to_json(sc.base)},
              {"h", sc.h},
              {"params", to_json(sc.params)},
              {"sigma", sc.sigma},
              {"alpha", std::vector<int>(sc.alpha.begin(), sc.alpha.begin() + static_cast<long>(sc.base.dim()))},
              {"r", sc.lemma2_r},
              {"grid_n", sc.grid_n},
              {"seed", sc.seed},
              {"entropic_check", sc.entropic_check}};
    j["noise"] = sc.noise ? to_json(*sc.noise) : json(nullptr);
    return j;
}

Scenario scenario_from_json(const json& j) {
    return guarded("scenario", [&] {
        Scenario sc;
        sc.name = j.at("name").get<std::string>();
        sc.kind = perturbation_from_string(j.at("kind").get<std::string>());
        sc.base = mixture_from_json(j.at("base"));
        sc.h = j.at("h").get<std::vector<double>>();
        if (j.contains("params")) {
            sc.params = params_from_json(j["params"]);
        }
        sc.sigma = j.value("sigma", sc.sigma);
        if (j.contains("noise") && !j["noise"].is_null()) sc.noise = mixture_from_json(j["noise"]);
        if (j.contains("alpha")) {
            const auto a = j["alpha"].get<std::vector<int>>();
            detail::require(a.size() <= kMaxGridDim, "alpha has too many entries");
            for (std::size_t i = 0; i < a.size(); ++i) sc.alpha[i] = a[i];
        }
        sc.lemma2_r = j.value("r", sc.lemma2_r);
        sc.grid_n = j.value("grid_n", sc.grid_n);
        sc.seed = j.value("seed", sc.seed);
        sc.entropic_check = j.value("entropic_check", sc.entropic_check);
        sc.validate();
        return sc;
    });
}

json to_json(const SweepReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"h", nullable(row.h)},
                        {"A", nullable(row.A)},
                        {"rho_p", nullable(row.rho_p)},
                        {"tv", nullable(row.tv)},
                        {"rhs1", nullable(row.rhs1)},
                        {"rhs2", nullable(row.rhs2)},
                        {"psup", nullable(row.psup)},
                        {"prhs", nullable(row.prhs)},
                        {"ok1", row.ok1},
                        {"ok2", row.ok2},
                        {"okp", row.okp},
                        {"lemma2_branch", row.lemma2_branch},
                        {"entropic", row.entropic ? nullable(*row.entropic) : json(nullptr)},
                        {"error", row.error}});
    }
    json fit = nullptr;
    if (r.fit) {
        fit = {{"slope", nullable(r.fit->slope)},
               {"intercept", nullable(r.fit->intercept)},
               {"stderr", nullable(r.fit->stderr_slope)},
               {"n", r.fit->n}};
    }
    return {{"scenario", r.scenario},
            {"params", to_json(r.params)},
            {"rows", rows},
            {"fit", fit},
            {"metadata", {{"seed", r.seed}, {"grid_n", r.grid_n}, {"version", r.version}}}};
}

SweepReport report_from_json(const json& j) {
    return guarded("report", [&] {
        SweepReport r;
        r.scenario = j.at("scenario").get<std::string>();
        r.params = params_from_json(j.at("params"));
        for (const auto& row : j.at("rows")) {
            SweepRow s;
            s.h = number_or_nan(row.at("h"));
            s.A = number_or_nan(row.at("A"));
            s.rho_p = number_or_nan(row.at("rho_p"));
            s.tv = number_or_nan(row.at("tv"));
            s.rhs1 = number_or_nan(row.at("rhs1"));
            s.rhs2 = number_or_nan(row.at("rhs2"));
            s.psup = number_or_nan(row.at("psup"));
            s.prhs = number_or_nan(row.at("prhs"));
            s.ok1 = row.at("ok1").get<bool>();
            s.ok2 = row.at("ok2").get<bool>();
            s.okp = row.at("okp").get<bool>();
            s.lemma2_branch = row.at("lemma2_branch").get<std::string>();
            if (!row.at("entropic").is_null()) s.entropic = row["entropic"].get<double>();
            s.error = row.at("error").get<std::string>();
            r.rows.push_back(std::move(s));
        }
        const auto& fit = j.at("fit");
        if (!fit.is_null()) {
            RateFit f;
            f.slope = number_or_nan(fit.at("slope"));
            f.intercept = number_or_nan(fit.at("intercept"));
            f.stderr_slope = number_or_nan(fit.at("stderr"));
            f.n = fit.at("n").get<std::size_t>();
            r.fit = f;
        }
        const auto& meta = j.at("metadata");
        r.seed = meta.at("seed").get<std::uint64_t>();
        r.grid_n = meta.at("grid_n").get<std::size_t>();
        r.version = meta.at("version").get<std::string>();
        return r;
    });
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) detail::fail_precondition("cannot read '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        detail::fail_precondition("cannot parse '" + path.string() + "': " + e.what());
    }
}

}  // namespace wtv
