#pragma once

// Exhaustive OT oracle for tiny problems: every vertex of the transportation polytope is a
// basic solution supported on a spanning tree of the bipartite graph, so the optimum is the
// cheapest feasible tree solution.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "wtv/distributions.hpp"

namespace wtv_test {

inline double brute_force_wq(const wtv::AtomSet& a, const wtv::AtomSet& b, double q) {
    const std::size_t n = a.size(), m = b.size(), cells = n * m, basis = n + m - 1;
    if (cells > 20) throw std::invalid_argument("brute_force_wq is meant for tiny problems");
    std::vector<double> cost(cells);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.dim(); ++k) {
                const double t = a.location(i)[k] - b.location(j)[k];
                s += t * t;
            }
            cost[i * m + j] = std::pow(std::sqrt(s), q);
        }
    }

    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> parent(n + m);
    std::vector<double> supply(n + m), flow(cells);
    std::vector<int> degree(n + m);
    for (std::uint32_t mask = 0; mask < (1u << cells); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != basis) continue;
        // Union-find: a cycle-free set of n+m-1 edges on n+m nodes is a spanning tree.
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        bool tree = true;
        for (std::size_t c = 0; c < cells && tree; ++c) {
            if (!(mask >> c & 1u)) continue;
            const std::size_t u = find(c / m), v = find(n + c % m);
            if (u == v) tree = false;
            else parent[u] = v;
        }
        if (!tree) continue;

        // Peel leaves: a leaf's only edge carries its whole remaining supply.
        for (std::size_t i = 0; i < n; ++i) supply[i] = a.mass(i);
        for (std::size_t j = 0; j < m; ++j) supply[n + j] = b.mass(j);
        std::fill(degree.begin(), degree.end(), 0);
        std::fill(flow.begin(), flow.end(), 0.0);
        std::uint32_t open = mask;
        for (std::size_t c = 0; c < cells; ++c) {
            if (mask >> c & 1u) {
                ++degree[c / m];
                ++degree[n + c % m];
            }
        }
        while (open) {
            bool progressed = false;
            for (std::size_t c = 0; c < cells; ++c) {
                if (!(open >> c & 1u)) continue;
                const std::size_t r = c / m, s = n + c % m;
                const std::size_t leaf = degree[r] == 1 ? r : (degree[s] == 1 ? s : n + m);
                if (leaf == n + m) continue;
                const double f = supply[leaf];
                flow[c] = f;
                supply[r] -= f;
                supply[s] -= f;
                --degree[r];
                --degree[s];
                open &= ~(1u << c);
                progressed = true;
            }
            if (!progressed) break;
        }
        bool feasible = true;
        double total = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            if (flow[c] < -1e-13) feasible = false;
            total += std::max(flow[c], 0.0) * cost[c];
        }
        if (feasible) best = std::min(best, total);
    }
    return std::pow(best, 1.0 / q);
}

}  // namespace wtv_test
