#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pmwc/detail/matrix.hpp"
#include "pmwc/transfer_function.hpp"

namespace pmwc {

/// SISO state-space realization x' = Ax + Bu, y = Cx + Du.
struct StateSpace {
    detail::Mat A;  // n x n
    detail::Mat B;  // n x 1
    detail::Mat C;  // 1 x n
    double D = 0.0;

    int order() const { return A.rows(); }
};

/**
 * Controllable canonical realization of a proper transfer function.
 *
 * Biproper inputs are handled by extracting the feedthrough D as the
 * leading-coefficient ratio and realizing the strictly proper remainder.
 * The realized dimension is degree(den); a constant yields n = 0.
 */
inline StateSpace to_state_space(const TransferFunction& g) {
    if (!g.is_proper()) throw std::invalid_argument("to_state_space: improper transfer function");

    // Divide by the leading denominator coefficient so dc[0] is exactly 1.
    const double den_lead = g.den().leading();
    std::vector<double> nc = g.num().coeffs();
    std::vector<double> dc = g.den().coeffs();
    for (double& v : nc) v /= den_lead;
    for (double& v : dc) v /= den_lead;
    const int n = static_cast<int>(dc.size()) - 1;

    double feed = 0.0;
    if (static_cast<int>(nc.size()) == n + 1) {
        // Biproper: split off D and keep the strictly proper remainder.
        // The leading term cancels by construction, so drop it outright.
        feed = nc[0];
        std::vector<double> rem(static_cast<std::size_t>(n));
        for (int i = 1; i <= n; ++i)
            rem[static_cast<std::size_t>(i) - 1] =
                nc[static_cast<std::size_t>(i)] - feed * dc[static_cast<std::size_t>(i)];
        nc = std::move(rem);
    }

    StateSpace ss;
    ss.A = detail::Mat(n, n);
    ss.B = detail::Mat(n, 1);
    ss.C = detail::Mat(1, n);
    ss.D = feed;
    if (n == 0) return ss;

    for (int j = 0; j < n; ++j) ss.A(0, j) = -dc[static_cast<std::size_t>(j) + 1];
    for (int i = 1; i < n; ++i) ss.A(i, i - 1) = 1.0;
    ss.B(0, 0) = 1.0;

    // Numerator coefficients right-aligned into C: b_1 s^{n-1} + ... + b_n.
    const int blen = static_cast<int>(nc.size());
    for (int k = 0; k < blen; ++k) ss.C(0, n - blen + k) = nc[static_cast<std::size_t>(k)];
    return ss;
}

}  // namespace pmwc
