#pragma once

#include <cstddef>
#include <vector>

namespace dds {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

// E[f(W)] for W ~ N(0,1): nodes symmetric, weights summing to 1.
QuadratureRule gauss_hermite(std::size_t n);

// Integral over [a, b] with unit weight function.
QuadratureRule gauss_legendre(std::size_t n, double a, double b);

// Shared 127-node rule used by default in state evolution.
const QuadratureRule& default_gaussian_rule();

}  // namespace dds
