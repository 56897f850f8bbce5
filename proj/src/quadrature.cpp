#include "wtv/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "wtv/errors.hpp"

namespace wtv {

namespace {

// Symmetric Jacobi matrix with zero diagonal and the given off-diagonal entries.
GaussRule golub_welsch(std::size_t order, double total_weight, auto offdiag) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(order),
                                                   static_cast<Eigen::Index>(order));
    for (std::size_t k = 1; k < order; ++k) {
        const double b = offdiag(k);
        jacobi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = b;
        jacobi(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (std::size_t k = 0; k < order; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        rule.nodes[k] = solver.eigenvalues()(kk);
        const double v0 = solver.eigenvectors()(0, kk);
        rule.weights[k] = total_weight * v0 * v0;
    }
    // Exact symmetry about the origin.
    for (std::size_t k = 0; k < order / 2; ++k) {
        const std::size_t m = order - 1 - k;
        const double x = 0.5 * (rule.nodes[m] - rule.nodes[k]);
        const double w = 0.5 * (rule.weights[m] + rule.weights[k]);
        rule.nodes[k] = -x;
        rule.nodes[m] = x;
        rule.weights[k] = w;
        rule.weights[m] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

template <class Builder>
const GaussRule& cached(std::map<std::size_t, std::unique_ptr<GaussRule>>& cache, std::mutex& m,
                        std::size_t order, Builder build) {
    if (order == 0) detail::fail_precondition("quadrature order must be positive");
    std::lock_guard lock(m);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<GaussRule>(build(order));
    return *slot;
}

}  // namespace

const GaussRule& gauss_hermite_rule(std::size_t order) {
    static std::map<std::size_t, std::unique_ptr<GaussRule>> cache;
    static std::mutex m;
    return cached(cache, m, order, [](std::size_t n) {
        return golub_welsch(n, 1.0, [](std::size_t k) { return std::sqrt(static_cast<double>(k)); });
    });
}

const GaussRule& gauss_legendre_rule(std::size_t order) {
    static std::map<std::size_t, std::unique_ptr<GaussRule>> cache;
    static std::mutex m;
    return cached(cache, m, order, [](std::size_t n) {
        return golub_welsch(n, 2.0, [](std::size_t k) {
            const double kk = static_cast<double>(k);
            return kk / std::sqrt(4.0 * kk * kk - 1.0);
        });
    });
}

}  // namespace wtv
