#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "pmwc/polynomial.hpp"

namespace pmwc {

/// Gains of the unfiltered PID law C(s) = kp + ki/s + kd*s.
struct PidGains {
    double kp = 0.0;
    double ki = 0.0;  // 1/s
    double kd = 0.0;  // s
};

/**
 * Ratio of two real polynomials in s.
 *
 * Stored trimmed. No pole-zero cancellation is ever performed, so a PID
 * loop keeps its explicit integrator. Immutable after construction.
 */
class TransferFunction {
public:
    /// The zero system 0/1.
    TransferFunction() : num_{}, den_{1.0} {}

    TransferFunction(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) throw std::invalid_argument("TransferFunction: zero denominator");
    }

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }

    bool is_proper() const { return num_.degree() <= den_.degree(); }
    bool is_strictly_proper() const { return num_.is_zero() || num_.degree() < den_.degree(); }

private:
    Polynomial num_;
    Polynomial den_;
};

/// C(s) = (kd s^2 + kp s + ki) / s. With kd = 0 this trims to a PI law.
inline TransferFunction pid_tf(const PidGains& g) {
    return {Polynomial{g.kd, g.kp, g.ki}, Polynomial{1.0, 0.0}};
}

/// Series connection a*b, no cancellation.
inline TransferFunction series(const TransferFunction& a, const TransferFunction& b) {
    return {a.num() * b.num(), a.den() * b.den()};
}

/// Unity negative feedback around l: T = num / (den + num).
inline TransferFunction feedback_unity(const TransferFunction& l) {
    Polynomial closed_den = l.den() + l.num();
    if (closed_den.is_zero())
        throw std::runtime_error("feedback_unity: 1 + L is identically zero (algebraic loop)");
    return {l.num(), std::move(closed_den)};
}

/// Steady-state gain num(0)/den(0).
inline double dcgain(const TransferFunction& g) {
    const double d0 = g.den()(0.0);
    if (d0 == 0.0) throw std::domain_error("dcgain: infinite or undefined DC gain (pole at s = 0)");
    return g.num()(0.0) / d0;
}

/// G(jw) for w > 0.
inline Complex freq_response(const TransferFunction& g, double w) {
    if (!(w > 0.0)) throw std::invalid_argument("freq_response: frequency must be positive");
    const Complex jw(0.0, w);
    const Complex dv = g.den()(jw);
    if (std::abs(dv) == 0.0)
        throw std::domain_error("freq_response: pole on the imaginary axis at the requested frequency");
    return g.num()(jw) / dv;
}

/// Denominator roots.
inline std::vector<Complex> poles(const TransferFunction& g) { return roots(g.den()); }

/// True iff every pole has real part below -1e-9. The margin absorbs
/// root-finder noise; marginally stable systems count as not stable.
inline bool is_stable(const TransferFunction& g) {
    if (g.den().degree() < 1) return true;  // no poles
    for (const Complex& p : poles(g))
        if (!(p.real() < -1e-9)) return false;
    return true;
}

}  // namespace pmwc
