#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pmwc/state_space.hpp"
#include "pmwc/transfer_function.hpp"

namespace pmwc {

/// Uniform simulation grid. Defaults are the benchmark settings:
/// 20 s horizon, 10 ms steps.
struct SimGrid {
    double t_end = 20.0;
    double dt = 0.01;

    SimGrid() = default;
    SimGrid(double t_end_, double dt_) : t_end(t_end_), dt(dt_) { validate(); }

    int steps() const { return static_cast<int>(std::llround(t_end / dt)); }

    void validate() const {
        if (!(t_end > 0.0) || !(dt > 0.0))
            throw std::invalid_argument("SimGrid: t_end and dt must be positive");
        const double count = t_end / dt;
        if (std::abs(count - static_cast<double>(std::llround(count))) > 1e-9)
            throw std::invalid_argument("SimGrid: t_end must be an integer multiple of dt");
    }
};

/// Sampled unit-step response on a uniform grid starting at t = 0.
struct StepResponse {
    std::vector<double> t;
    std::vector<double> y;
};

/**
 * Exact zero-order-hold unit-step simulation.
 *
 * One matrix exponential of the augmented block [[A, B], [0, 0]]*dt gives
 * the discrete pair (Ad, Bd); the recursion x <- Ad x + Bd then reproduces
 * the continuous trajectory exactly at the grid points because the input
 * is constant. Output at t = 0 is D (biproper systems jump instantly).
 */
inline StepResponse step_response(const StateSpace& ss, const SimGrid& grid) {
    grid.validate();
    const int n = ss.order();

    detail::Mat aug(n + 1, n + 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) aug(i, j) = ss.A(i, j) * grid.dt;
        aug(i, n) = ss.B(i, 0) * grid.dt;
    }
    const detail::Mat disc = detail::expm(aug);

    const int steps = grid.steps();
    StepResponse out;
    out.t.reserve(static_cast<std::size_t>(steps) + 1);
    out.y.reserve(static_cast<std::size_t>(steps) + 1);

    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    std::vector<double> next(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k <= steps; ++k) {
        out.t.push_back(k * grid.dt);
        double y = ss.D;
        for (int i = 0; i < n; ++i) y += ss.C(0, i) * x[static_cast<std::size_t>(i)];
        out.y.push_back(y);
        if (k == steps) break;
        for (int i = 0; i < n; ++i) {
            double acc = disc(i, n);  // Bd * 1
            for (int j = 0; j < n; ++j) acc += disc(i, j) * x[static_cast<std::size_t>(j)];
            next[static_cast<std::size_t>(i)] = acc;
        }
        x.swap(next);
    }
    return out;
}

/// Trapezoidal integral of |1 - y| over the response grid. Non-finite
/// samples yield +infinity, which flags an unstable candidate to the
/// optimizer without throwing.
inline double iae(const StepResponse& resp) {
    if (resp.y.empty() || resp.y.size() != resp.t.size())
        throw std::invalid_argument("iae: empty or mismatched response");
    if (resp.y.size() == 1) return 0.0;
    const double dt = resp.t[1] - resp.t[0];
    const std::size_t last = resp.y.size() - 1;
    double acc = 0.0;
    for (std::size_t k = 0; k <= last; ++k) {
        const double e = std::abs(1.0 - resp.y[k]);
        if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
        acc += (k == 0 || k == last) ? 0.5 * e : e;
    }
    return acc * dt;
}

/// IAE of the closed unit-feedback loop formed by the PID law over the
/// plant. Improper closed loops and non-finite trajectories map to
/// +infinity so the optimizer's merit function stays total.
inline double iae_of_gains(const PidGains& g, const TransferFunction& plant, const SimGrid& grid) {
    try {
        const TransferFunction closed = feedback_unity(series(pid_tf(g), plant));
        if (!closed.is_proper()) return std::numeric_limits<double>::infinity();
        return iae(step_response(to_state_space(closed), grid));
    } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
    }
}

/// Transient summary of a step response against a known final value.
struct StepMetrics {
    double settling_time = 0.0;  // 2% band, last instant outside the band
    double overshoot_pct = 0.0;
    double peak = 0.0;
};

inline StepMetrics step_metrics(const StepResponse& resp, double y_final) {
    if (resp.y.empty()) throw std::invalid_argument("step_metrics: empty response");
    const double band = 0.02 * std::abs(y_final);
    StepMetrics m;
    m.peak = resp.y.front();
    for (std::size_t k = 0; k < resp.y.size(); ++k) {
        m.peak = std::max(m.peak, resp.y[k]);
        if (std::abs(resp.y[k] - y_final) > band) m.settling_time = resp.t[k];
    }
    if (y_final != 0.0) m.overshoot_pct = std::max(0.0, (m.peak - y_final) / std::abs(y_final) * 100.0);
    return m;
}

}  // namespace pmwc
