#include "wtv/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

#include "wtv/errors.hpp"
#include "wtv/quadrature.hpp"

namespace wtv {

std::string to_string(DistanceMethod m) {
    switch (m) {
        case DistanceMethod::QuantileQuadrature: return "quantile-quadrature";
        case DistanceMethod::ExactOt: return "exact-ot";
        case DistanceMethod::EntropicOt: return "entropic-ot";
        case DistanceMethod::GridQuadrature: return "grid-quadrature";
    }
    return "unknown";
}

DistanceMethod distance_method_from_string(const std::string& s) {
    for (auto m : {DistanceMethod::QuantileQuadrature, DistanceMethod::ExactOt, DistanceMethod::EntropicOt,
                   DistanceMethod::GridQuadrature}) {
        if (to_string(m) == s) return m;
    }
    detail::fail_precondition("unknown distance method '" + s + "'");
}

namespace {

double weight_fn(double norm, double p) { return p > 0.0 ? 1.0 + std::pow(norm, p) : 1.0; }

struct Defaults {
    std::size_t start;
    std::size_t max;
};

Defaults grid_defaults(std::size_t d) {
    switch (d) {
        case 1: return {4096, 1u << 16};
        case 2: return {256, 1024};
        default: return {64, 256};
    }
}

// Riemann sum of V_p |f_a - f_b| over the box with n nodes per axis.
double weighted_sum(const GaussianMixture& a, const GaussianMixture& b, const Box& box, std::size_t n, double p) {
    GridSpec spec = grid_from_box(box, n);
    const std::size_t d = spec.dim();
    double acc = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto x = spec.point(i);
        const std::span<const double> xs{x.data(), d};
        double r = 0.0;
        for (std::size_t k = 0; k < d; ++k) r += x[k] * x[k];
        acc += weight_fn(std::sqrt(r), p) * std::abs(a.density(xs) - b.density(xs));
    }
    return acc * spec.cell_volume();
}

DistanceResult weighted_distance(const GaussianMixture& a, const GaussianMixture& b, double p,
                                 const QuadratureOptions& opts) {
    detail::require(a.dim() == b.dim(), "distance: distributions have different dimensions");
    detail::require(a.dim() <= kMaxGridDim, "grid quadrature is available for d <= 3");
    detail::require(p >= 0.0 && std::isfinite(p), "weight power p must be finite and nonnegative");
    detail::require(opts.tol > 0.0, "quadrature tolerance must be positive");
    const auto def = grid_defaults(a.dim());
    const std::size_t n_start = opts.n_start ? opts.n_start : def.start;
    const std::size_t n_max = opts.n_max ? opts.n_max : def.max;
    detail::require(n_start <= n_max, "quadrature start resolution exceeds the maximum");
    const Box box = auto_box(a, b, opts.box_delta);

    double prev = weighted_sum(a, b, box, n_start, p);
    for (std::size_t n = 2 * n_start; n <= n_max; n *= 2) {
        const double cur = weighted_sum(a, b, box, n, p);
        const double err = std::abs(cur - prev);
        if (err <= opts.tol * std::abs(cur) + 1e-15) return {cur, DistanceMethod::GridQuadrature, err};
        prev = cur;
    }
    std::ostringstream os;
    os << "weighted quadrature did not reach relative tolerance " << opts.tol << " by n = " << n_max;
    throw NumericalError(os.str());
}

// Full-grid sum and the sum over every other node per axis (cell volume scaled by 2^d).
DistanceResult weighted_distance(const GridDensity& a, const GridDensity& b, double p) {
    detail::require(a.spec() == b.spec(), "distance: grid densities live on different grids");
    detail::require(p >= 0.0 && std::isfinite(p), "weight power p must be finite and nonnegative");
    const auto& spec = a.spec();
    const std::size_t d = spec.dim();
    double full = 0.0;
    double half = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto x = spec.point(i);
        double r = 0.0;
        for (std::size_t k = 0; k < d; ++k) r += x[k] * x[k];
        const double term = weight_fn(std::sqrt(r), p) * std::abs(a.values()[i] - b.values()[i]);
        full += term;
        const auto idx = spec.unravel(i);
        bool even = true;
        for (std::size_t k = 0; k < d; ++k) even = even && idx[k] % 2 == 0;
        if (even) half += term;
    }
    const double vol = spec.cell_volume();
    full *= vol;
    half *= vol * std::ldexp(1.0, static_cast<int>(d));
    return {full, DistanceMethod::GridQuadrature, std::abs(full - half)};
}

double quantile_objective(const GaussianMixture& a, const GaussianMixture& b, double q, std::size_t order) {
    const auto& rule = gauss_hermite_rule(order);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double t = rule.nodes[i];
        const double diff = quantile_at_normal_score(a, t) - quantile_at_normal_score(b, t);
        acc += rule.weights[i] * std::pow(std::abs(diff), q);
    }
    return acc;
}

}  // namespace

DistanceResult rho_p(const GaussianMixture& a, const GaussianMixture& b, double p, const QuadratureOptions& opts) {
    return weighted_distance(a, b, p, opts);
}

DistanceResult rho_p(const GridDensity& a, const GridDensity& b, double p) { return weighted_distance(a, b, p); }

DistanceResult tv_mass(const GaussianMixture& a, const GaussianMixture& b, const QuadratureOptions& opts) {
    return weighted_distance(a, b, 0.0, opts);
}

DistanceResult tv_mass(const GridDensity& a, const GridDensity& b) { return weighted_distance(a, b, 0.0); }

namespace detail {
DistanceResult quantile_wasserstein(const GaussianMixture& a, const GaussianMixture& b, double q) {
    require(a.dim() == 1 && b.dim() == 1, "quantile Wasserstein distance requires one-dimensional laws");
    require(q >= 1.0 && std::isfinite(q), "Wasserstein order must be finite and >= 1");
    double prev = std::pow(quantile_objective(a, b, q, 64), 1.0 / q);
    double cur = prev;
    for (std::size_t order : {128, 256}) {
        prev = cur;
        cur = std::pow(quantile_objective(a, b, q, order), 1.0 / q);
    }
    return {cur, DistanceMethod::QuantileQuadrature, std::abs(cur - prev)};
}
}  // namespace detail

DistanceResult wasserstein_1d(const GaussianMixture& a, const GaussianMixture& b, double q) {
    if (!(q > 1.0)) {
        std::ostringstream os;
        os << "wasserstein_1d requires q > 1 (got " << q << ")";
        detail::fail_precondition(os.str());
    }
    return detail::quantile_wasserstein(a, b, q);
}

// ---------------------------------------------------------------------------
// Transportation simplex

namespace {

double cost_fn(const AtomSet& a, std::size_t i, const AtomSet& b, std::size_t j, double q) {
    const auto x = a.location(i);
    const auto y = b.location(j);
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return q == 2.0 ? s : std::pow(std::sqrt(s), q);
}

class TransportSimplex {
public:
    TransportSimplex(std::vector<double> supply, std::vector<double> demand, std::vector<double> cost)
        : n_(supply.size()), m_(demand.size()), supply_(std::move(supply)), demand_(std::move(demand)),
          cost_(std::move(cost)) {}

    std::vector<double> solve() {
        northwest_corner();
        double cmax = 0.0;
        for (double c : cost_) cmax = std::max(cmax, c);
        const double eps = 1e-12 * (1.0 + cmax);
        const std::size_t cap = 50 * (n_ + m_) * (n_ + m_) + 1000;
        std::size_t degenerate_streak = 0;
        for (std::size_t iter = 0; iter < cap; ++iter) {
            compute_potentials();
            const bool bland = degenerate_streak > 2 * (n_ + m_);
            std::size_t enter = npos;
            double best = -eps;
            for (std::size_t i = 0; i < n_ && !(bland && enter != npos); ++i) {
                for (std::size_t j = 0; j < m_; ++j) {
                    if (in_basis_[i * m_ + j]) continue;
                    const double rc = cost_[i * m_ + j] - u_[i] - v_[j];
                    if (rc < best) {
                        best = rc;
                        enter = i * m_ + j;
                        if (bland) break;
                    }
                }
            }
            if (enter == npos) return flow_;
            const double theta = pivot(enter, bland);
            degenerate_streak = theta > 0.0 ? 0 : degenerate_streak + 1;
        }
        throw NumericalError("transportation simplex exceeded its iteration cap");
    }

private:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    void northwest_corner() {
        flow_.assign(n_ * m_, 0.0);
        in_basis_.assign(n_ * m_, false);
        basis_.clear();
        std::vector<double> s = supply_;
        std::vector<double> t = demand_;
        std::size_t i = 0, j = 0;
        while (true) {
            const double x = (i + 1 == n_ && j + 1 == m_) ? std::max(0.0, std::min(s[i], t[j])) : std::min(s[i], t[j]);
            add_basic(i * m_ + j, std::max(0.0, x));
            s[i] -= x;
            t[j] -= x;
            if (i + 1 == n_ && j + 1 == m_) break;
            if (j + 1 == m_ || (i + 1 < n_ && s[i] <= t[j])) ++i;
            else ++j;
        }
    }

    void add_basic(std::size_t cell, double x) {
        flow_[cell] = x;
        in_basis_[cell] = true;
        basis_.push_back(cell);
    }

    // Tree adjacency: node r < n is row r, node n + c is column c.
    void build_adjacency() {
        adj_.assign(n_ + m_, {});
        for (std::size_t cell : basis_) {
            const std::size_t i = cell / m_, j = cell % m_;
            adj_[i].push_back(cell);
            adj_[n_ + j].push_back(cell);
        }
    }

    std::size_t other_end(std::size_t node, std::size_t cell) const {
        const std::size_t i = cell / m_, j = cell % m_;
        return node < n_ ? n_ + j : i;
    }

    void compute_potentials() {
        build_adjacency();
        u_.assign(n_, 0.0);
        v_.assign(m_, 0.0);
        std::vector<bool> seen(n_ + m_, false);
        std::deque<std::size_t> queue{0};
        seen[0] = true;
        while (!queue.empty()) {
            const std::size_t node = queue.front();
            queue.pop_front();
            for (std::size_t cell : adj_[node]) {
                const std::size_t nb = other_end(node, cell);
                if (seen[nb]) continue;
                seen[nb] = true;
                const std::size_t i = cell / m_, j = cell % m_;
                if (nb < n_) u_[i] = cost_[cell] - v_[j];
                else v_[j] = cost_[cell] - u_[i];
                queue.push_back(nb);
            }
        }
    }

    // Tree path of basic cells from column j to row i.
    std::vector<std::size_t> tree_path(std::size_t col, std::size_t row) const {
        const std::size_t start = n_ + col;
        std::vector<std::size_t> via(n_ + m_, npos);
        std::vector<bool> seen(n_ + m_, false);
        std::deque<std::size_t> queue{start};
        seen[start] = true;
        while (!queue.empty() && !seen[row]) {
            const std::size_t node = queue.front();
            queue.pop_front();
            for (std::size_t cell : adj_[node]) {
                const std::size_t nb = other_end(node, cell);
                if (seen[nb]) continue;
                seen[nb] = true;
                via[nb] = cell;
                queue.push_back(nb);
            }
        }
        if (!seen[row]) throw NumericalError("transportation simplex basis is not a spanning tree");
        std::vector<std::size_t> path;
        for (std::size_t node = row; node != start;) {
            const std::size_t cell = via[node];
            path.push_back(cell);
            node = other_end(node, cell);
        }
        std::reverse(path.begin(), path.end());
        return path;
    }

    double pivot(std::size_t enter, bool bland) {
        const std::size_t ei = enter / m_, ej = enter % m_;
        const auto path = tree_path(ej, ei);
        // Signs along the cycle: entering +, then path cells alternate starting with -.
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = npos;
        for (std::size_t k = 0; k < path.size(); k += 2) {
            const double x = flow_[path[k]];
            if (x < theta || (bland && x == theta && path[k] < leave)) {
                theta = x;
                leave = path[k];
            }
        }
        theta = std::max(0.0, theta);
        for (std::size_t k = 0; k < path.size(); ++k) flow_[path[k]] += (k % 2 == 0) ? -theta : theta;
        flow_[leave] = 0.0;
        flow_[enter] = theta;
        in_basis_[leave] = false;
        in_basis_[enter] = true;
        *std::find(basis_.begin(), basis_.end(), leave) = enter;
        return theta;
    }

    std::size_t n_, m_;
    std::vector<double> supply_, demand_, cost_;
    std::vector<double> flow_;
    std::vector<bool> in_basis_;
    std::vector<std::size_t> basis_;
    std::vector<std::vector<std::size_t>> adj_;
    std::vector<double> u_, v_;
};

std::vector<std::size_t> sort_order(const AtomSet& s) {
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (s.dim() == 1) {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t x, std::size_t y) { return s.location(x)[0] < s.location(y)[0]; });
    }
    return idx;
}

}  // namespace

std::pair<DistanceResult, TransportPlan> ot_exact(const AtomSet& a, const AtomSet& b, double q) {
    detail::require(a.dim() == b.dim(), "ot_exact: atom sets have different dimensions");
    detail::require(q >= 1.0 && std::isfinite(q), "ot_exact requires finite q >= 1");
    const std::size_t n = a.size(), m = b.size();
    if (n * m > kMaxExactCells) {
        std::ostringstream os;
        os << "ot_exact: " << n << " x " << m << " atoms exceeds the limit of " << kMaxExactCells << " cells";
        detail::fail_precondition(os.str());
    }
    // In 1-D the north-west corner rule on sorted atoms is already the monotone optimal plan.
    const auto ra = sort_order(a);
    const auto rb = sort_order(b);
    std::vector<double> supply(n), demand(m), cost(n * m);
    for (std::size_t i = 0; i < n; ++i) supply[i] = a.mass(ra[i]);
    for (std::size_t j = 0; j < m; ++j) demand[j] = b.mass(rb[j]);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = cost_fn(a, ra[i], b, rb[j], q);
    }
    const auto flow = TransportSimplex(supply, demand, cost).solve();

    TransportPlan plan{a, b, std::vector<double>(n * m, 0.0)};
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double x = flow[i * m + j];
            plan.masses[ra[i] * m + rb[j]] = x;
            total += x * cost[i * m + j];
        }
    }
    return {DistanceResult{std::pow(std::max(total, 0.0), 1.0 / q), DistanceMethod::ExactOt, 0.0}, std::move(plan)};
}

DistanceResult fm_upper(const GaussianMixture& a, const GaussianMixture& b) {
    auto w = detail::quantile_wasserstein(a, b, 1.0);
    w.value = std::min(2.0, w.value);
    return w;
}

DistanceResult fm_upper(const AtomSet& a, const AtomSet& b) {
    auto w = ot_exact(a, b, 1.0).first;
    w.value = std::min(2.0, w.value);
    return w;
}

}  // namespace wtv
