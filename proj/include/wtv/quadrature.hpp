#pragma once

#include <cstddef>
#include <vector>

namespace wtv {

/// Nodes and weights of a rule for E[g(Z)], Z ~ N(0,1) (probabilists' Gauss-Hermite).
/// Weights sum to one.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch construction; results for a given order are cached and shared.
const GaussRule& gauss_hermite_rule(std::size_t order);

/// Gauss-Legendre rule on [-1, 1].
const GaussRule& gauss_legendre_rule(std::size_t order);

}  // namespace wtv
