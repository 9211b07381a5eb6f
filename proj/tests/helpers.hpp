#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cleanet/matrix.hpp"

namespace testutil {

/// Central finite difference of eval() with respect to one scalar slot.
template <typename F>
double central_diff(double& slot, F&& eval, double h = 1e-5) {
    const double orig = slot;
    slot = orig + h;
    const double up = eval();
    slot = orig - h;
    const double down = eval();
    slot = orig;
    return (up - down) / (2.0 * h);
}

/// Relative agreement with an absolute floor so near-zero gradients do not
/// blow up the ratio.
inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline cleanet::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937& rng,
                                     double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    cleanet::Matrix m(rows, cols);
    for (double& v : m.data) v = dist(rng);
    return m;
}

} // namespace testutil
