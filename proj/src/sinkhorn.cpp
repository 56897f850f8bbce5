#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wtv/errors.hpp"
#include "wtv/transport.hpp"

namespace wtv {

namespace {

double log_sum_exp(const double* v, std::size_t n) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) top = std::max(top, v[k]);
    if (!std::isfinite(top)) return top;
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += std::exp(v[k] - top);
    return top + std::log(s);
}

// Altschuler-Weed-Rigollet rounding onto the transport polytope.
void round_to_feasible(std::vector<double>& plan, std::span<const double> ra, std::span<const double> cb) {
    const std::size_t n = ra.size(), m = cb.size();
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) row += plan[i * m + j];
        const double s = row > ra[i] ? ra[i] / row : 1.0;
        for (std::size_t j = 0; j < m; ++j) plan[i * m + j] *= s;
    }
    std::vector<double> col(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) col[j] += plan[i * m + j];
    }
    for (std::size_t j = 0; j < m; ++j) {
        const double s = col[j] > cb[j] ? cb[j] / col[j] : 1.0;
        for (std::size_t i = 0; i < n; ++i) plan[i * m + j] *= s;
    }
    std::vector<double> err_r(n), err_c(m, 0.0);
    std::fill(col.begin(), col.end(), 0.0);
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            row += plan[i * m + j];
            col[j] += plan[i * m + j];
        }
        err_r[i] = std::max(0.0, ra[i] - row);
        mass += err_r[i];
    }
    for (std::size_t j = 0; j < m; ++j) err_c[j] = std::max(0.0, cb[j] - col[j]);
    if (mass <= 0.0) return;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) plan[i * m + j] += err_r[i] * err_c[j] / mass;
    }
}

}  // namespace

DistanceResult ot_entropic(const AtomSet& a, const AtomSet& b, double q, const SinkhornOptions& opts) {
    detail::require(a.dim() == b.dim(), "ot_entropic: atom sets have different dimensions");
    detail::require(q >= 1.0 && std::isfinite(q), "ot_entropic requires finite q >= 1");
    detail::require(!opts.schedule.empty(), "ot_entropic: empty regularization schedule");
    for (std::size_t s = 0; s < opts.schedule.size(); ++s) {
        detail::require(opts.schedule[s] > 0.0, "ot_entropic: regularization weights must be positive");
        if (s > 0) detail::require(opts.schedule[s] < opts.schedule[s - 1], "ot_entropic: schedule must decrease");
    }
    const std::size_t n = a.size(), m = b.size();
    detail::require(n * m <= kMaxExactCells, "ot_entropic: problem exceeds the dense cost-matrix limit");

    std::vector<double> cost(n * m);
    double cmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const auto x = a.location(i);
            const auto y = b.location(j);
            double s = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
            cost[i * m + j] = std::pow(std::sqrt(s), q);
            cmax = std::max(cmax, cost[i * m + j]);
        }
    }
    if (cmax == 0.0) return {0.0, DistanceMethod::EntropicOt, 0.0};

    auto b_mass = [&](std::size_t j) { return b.mass(j); };
    std::vector<double> log_a(n), log_b(m);
    for (std::size_t i = 0; i < n; ++i) log_a[i] = std::log(a.mass(i));
    for (std::size_t j = 0; j < m; ++j) log_b[j] = std::log(b.mass(j));

    // Potentials on the cost scaled to [0, 1]. Each block rebuilds the stabilized kernel
    // M = exp((f + g - c) / eps), runs plain scaling updates u, v on it and absorbs
    // eps log u, eps log v back into f, g, so no exponential is taken inside the block.
    constexpr std::size_t kBlock = 25;
    std::vector<double> f(n, 0.0), g(m, 0.0), buf(std::max(n, m)), kern(n * m), u(n), v(m);
    auto log_domain_sweep = [&](double eps) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) buf[j] = (g[j] - cost[i * m + j] / cmax) / eps + log_b[j];
            f[i] = -eps * log_sum_exp(buf.data(), m);
        }
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < n; ++i) buf[i] = (f[i] - cost[i * m + j] / cmax) / eps + log_a[i];
            g[j] = -eps * log_sum_exp(buf.data(), n);
        }
    };
    double eps = 0.0;
    bool converged = false;
    for (std::size_t lv = 0; lv < opts.schedule.size(); ++lv) {
        eps = opts.schedule[lv];
        // Intermediate levels only warm-start the next one.
        const double tol = lv + 1 == opts.schedule.size() ? opts.tol : 100.0 * opts.tol;
        converged = false;
        log_domain_sweep(eps);
        for (std::size_t it = 0; it < opts.max_iter; it += kBlock) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < m; ++j) kern[i * m + j] = std::exp((f[i] + g[j] - cost[i * m + j] / cmax) / eps);
            }
            std::fill(u.begin(), u.end(), 1.0);
            std::fill(v.begin(), v.end(), 1.0);
            bool stable = true;
            for (std::size_t blk = 0; blk < kBlock && stable; ++blk) {
                for (std::size_t i = 0; i < n; ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < m; ++j) s += kern[i * m + j] * v[j] * b_mass(j);
                    u[i] = 1.0 / s;
                    stable = stable && std::isfinite(u[i]) && u[i] < 1e100;
                }
                std::fill(buf.begin(), buf.begin() + static_cast<long>(m), 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    const double w = u[i] * a.mass(i);
                    for (std::size_t j = 0; j < m; ++j) buf[j] += kern[i * m + j] * w;
                }
                for (std::size_t j = 0; j < m; ++j) {
                    v[j] = 1.0 / buf[j];
                    stable = stable && std::isfinite(v[j]) && v[j] < 1e100;
                }
            }
            if (!stable) {
                // A kernel entry underflowed across a whole row or column; fall back to one exact sweep.
                log_domain_sweep(eps);
                continue;
            }
            for (std::size_t i = 0; i < n; ++i) f[i] += eps * std::log(u[i]);
            for (std::size_t j = 0; j < m; ++j) g[j] += eps * std::log(v[j]);
            // Columns are exact after the v update; measure the row violation.
            double viol = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j) s += kern[i * m + j] * v[j] * b_mass(j);
                viol += std::abs(a.mass(i) * u[i] * s - a.mass(i));
            }
            if (viol <= tol) {
                converged = true;
                break;
            }
        }
    }
    if (!converged) {
        std::ostringstream os;
        os << "Sinkhorn did not converge at regularization " << eps << " within " << opts.max_iter << " iterations";
        throw NumericalError(os.str());
    }

    std::vector<double> plan(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            plan[i * m + j] = std::exp((f[i] + g[j] - cost[i * m + j] / cmax) / eps + log_a[i] + log_b[j]);
        }
    }
    round_to_feasible(plan, a.masses(), b.masses());
    double primal = 0.0;
    for (std::size_t k = 0; k < plan.size(); ++k) primal += plan[k] * cost[k];

    // Dual bound: phi = cmax f, psi its c-transform; sum a phi + sum b psi <= OT cost.
    double dual = 0.0;
    for (std::size_t i = 0; i < n; ++i) dual += a.mass(i) * cmax * f[i];
    for (std::size_t j = 0; j < m; ++j) {
        double psi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) psi = std::min(psi, cost[i * m + j] - cmax * f[i]);
        dual += b.mass(j) * psi;
    }
    const double value = std::pow(primal, 1.0 / q);
    const double lower = std::pow(std::max(dual, 0.0), 1.0 / q);
    return {value, DistanceMethod::EntropicOt, std::max(0.0, value - lower)};
}

}  // namespace wtv
