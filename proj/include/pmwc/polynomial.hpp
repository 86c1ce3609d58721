#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pmwc {

using Complex = std::complex<double>;

/**
 * Real-coefficient polynomial in descending powers of s.
 *
 * Coefficients are stored leading-first and kept trimmed: the leading
 * coefficient is nonzero except for the zero polynomial, which is the
 * single coefficient 0. Values are immutable after construction.
 */
class Polynomial {
public:
    /// The zero polynomial.
    Polynomial() : coeffs_{0.0} {}

    Polynomial(std::initializer_list<double> coeffs) : Polynomial(std::vector<double>(coeffs)) {}

    explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) throw std::invalid_argument("Polynomial: empty coefficient list");
        for (double c : coeffs_)
            if (!std::isfinite(c)) throw std::invalid_argument("Polynomial: non-finite coefficient");
        trim();
    }

    const std::vector<double>& coeffs() const { return coeffs_; }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    double leading() const { return coeffs_.front(); }
    bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }

    /// Horner evaluation at a complex point.
    Complex operator()(Complex s) const {
        Complex acc(coeffs_[0], 0.0);
        for (std::size_t k = 1; k < coeffs_.size(); ++k) acc = acc * s + coeffs_[k];
        return acc;
    }

    /// Horner evaluation at a real point.
    double operator()(double s) const {
        double acc = coeffs_[0];
        for (std::size_t k = 1; k < coeffs_.size(); ++k) acc = acc * s + coeffs_[k];
        return acc;
    }

    Polynomial derivative() const {
        const int d = degree();
        if (d == 0) return Polynomial{};
        std::vector<double> out(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) out[k] = coeffs_[k] * static_cast<double>(d - k);
        return Polynomial(std::move(out));
    }

private:
    void trim() {
        std::size_t lead = 0;
        while (lead + 1 < coeffs_.size() && coeffs_[lead] == 0.0) ++lead;
        coeffs_.erase(coeffs_.begin(), coeffs_.begin() + static_cast<std::ptrdiff_t>(lead));
    }

    std::vector<double> coeffs_;
};

/// Coefficient-wise sum with degree alignment (constant terms line up).
inline Polynomial operator+(const Polynomial& p, const Polynomial& q) {
    const auto& a = p.coeffs();
    const auto& b = q.coeffs();
    const std::size_t n = std::max(a.size(), b.size());
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        if (k < a.size()) s += a[a.size() - 1 - k];
        if (k < b.size()) s += b[b.size() - 1 - k];
        out[n - 1 - k] = s;
    }
    return Polynomial(std::move(out));
}

inline Polynomial operator-(const Polynomial& p, const Polynomial& q) {
    const auto& a = p.coeffs();
    const auto& b = q.coeffs();
    const std::size_t n = std::max(a.size(), b.size());
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        if (k < a.size()) s += a[a.size() - 1 - k];
        if (k < b.size()) s -= b[b.size() - 1 - k];
        out[n - 1 - k] = s;
    }
    return Polynomial(std::move(out));
}

/// Convolution of coefficient sequences.
inline Polynomial operator*(const Polynomial& p, const Polynomial& q) {
    if (p.is_zero() || q.is_zero()) return Polynomial{};
    const auto& a = p.coeffs();
    const auto& b = q.coeffs();
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return Polynomial(std::move(out));
}

inline Polynomial operator*(const Polynomial& p, double s) {
    std::vector<double> out = p.coeffs();
    for (double& c : out) c *= s;
    return Polynomial(std::move(out));
}

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

namespace detail {

/// Enforce conjugate symmetry on the root set of a real polynomial:
/// near-real roots are snapped onto the axis and the remaining complex
/// roots are matched and symmetrized pairwise.
inline void pair_conjugates(std::vector<Complex>& r) {
    for (Complex& z : r)
        if (std::abs(z.imag()) <= 1e-9 * std::max(1.0, std::abs(z))) z = Complex(z.real(), 0.0);

    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < r.size(); ++i)
        if (r[i].imag() != 0.0) open.push_back(i);

    std::vector<bool> used(r.size(), false);
    for (std::size_t oi = 0; oi < open.size(); ++oi) {
        const std::size_t i = open[oi];
        if (used[i]) continue;
        const Complex want = std::conj(r[i]);
        std::size_t mate = r.size();
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t oj = oi + 1; oj < open.size(); ++oj) {
            const std::size_t j = open[oj];
            if (used[j]) continue;
            const double dist = std::abs(r[j] - want);
            if (dist < best) {
                best = dist;
                mate = j;
            }
        }
        if (mate == r.size()) {
            r[i] = Complex(r[i].real(), 0.0);  // unmatched leftover: treat as real
            used[i] = true;
            continue;
        }
        const double re = 0.5 * (r[i].real() + r[mate].real());
        const double im = 0.5 * (std::abs(r[i].imag()) + std::abs(r[mate].imag()));
        r[i] = Complex(re, r[i].imag() > 0.0 ? im : -im);
        r[mate] = std::conj(r[i]);
        used[i] = used[mate] = true;
    }
}

}  // namespace detail

/**
 * All complex roots of p, found by Aberth-Ehrlich simultaneous iteration
 * on the monic polynomial.
 *
 * Roots at the origin are split off exactly first. The remaining iterates
 * start on a circle of radius given by the Cauchy bound, run for at most
 * 200 sweeps with a per-root tolerance of 1e-12 on the Newton correction,
 * and are conjugate-paired afterwards so the root set of a real polynomial
 * is exactly closed under conjugation. Returned sorted by real part, then
 * imaginary part.
 *
 * Multiple roots converge as clusters; the contract is the residual bound
 * |p(r)| / (max|coeff| * max(1,|r|)^degree) <= 1e-8, not root separation.
 */
inline std::vector<Complex> roots(const Polynomial& p) {
    if (p.is_zero() || p.degree() < 1)
        throw std::invalid_argument("roots: polynomial must have degree >= 1");

    // Normalize to monic to bound conditioning.
    std::vector<double> a = p.coeffs();
    const double lead = a.front();
    for (double& c : a) c /= lead;

    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(p.degree()));

    // Exact roots at the origin.
    while (a.size() > 1 && a.back() == 0.0) {
        a.pop_back();
        out.emplace_back(0.0, 0.0);
    }

    const int d = static_cast<int>(a.size()) - 1;
    if (d >= 1) {
        double bound = 0.0;
        for (int k = 1; k <= d; ++k) bound = std::max(bound, std::abs(a[static_cast<std::size_t>(k)]));
        const double radius = 1.0 + bound;  // Cauchy bound for the monic polynomial

        std::vector<Complex> z(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            const double theta = 2.0 * std::numbers::pi * i / d + 0.4;  // offset breaks axis symmetry
            z[static_cast<std::size_t>(i)] = radius * Complex(std::cos(theta), std::sin(theta));
        }

        const auto eval_both = [&a, d](Complex s, Complex& val, Complex& der) {
            Complex v(a[0], 0.0);
            Complex dv(0.0, 0.0);
            for (int k = 1; k <= d; ++k) {
                dv = dv * s + v;
                v = v * s + a[static_cast<std::size_t>(k)];
            }
            val = v;
            der = dv;
        };

        std::vector<bool> done(static_cast<std::size_t>(d), false);
        for (int sweep = 0; sweep < 200; ++sweep) {
            bool all_done = true;
            for (int i = 0; i < d; ++i) {
                if (done[static_cast<std::size_t>(i)]) continue;
                Complex val, der;
                eval_both(z[static_cast<std::size_t>(i)], val, der);
                if (std::abs(val) == 0.0) {
                    done[static_cast<std::size_t>(i)] = true;
                    continue;
                }
                if (std::abs(der) == 0.0) {
                    z[static_cast<std::size_t>(i)] += 1e-6 * radius * Complex(1.0, 1.0);
                    all_done = false;
                    continue;
                }
                const Complex newton = val / der;
                Complex repulsion(0.0, 0.0);
                for (int j = 0; j < d; ++j) {
                    if (j == i) continue;
                    Complex diff = z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(j)];
                    if (std::abs(diff) == 0.0) diff = Complex(1e-12 * radius, 0.0);
                    repulsion += 1.0 / diff;
                }
                const Complex denom = 1.0 - newton * repulsion;
                const Complex step = (std::abs(denom) == 0.0) ? newton : newton / denom;
                z[static_cast<std::size_t>(i)] -= step;
                if (std::abs(newton) <= 1e-12 * std::max(1.0, std::abs(z[static_cast<std::size_t>(i)])))
                    done[static_cast<std::size_t>(i)] = true;
                else
                    all_done = false;
            }
            if (all_done) break;
        }
        out.insert(out.end(), z.begin(), z.end());
    }

    detail::pair_conjugates(out);
    std::sort(out.begin(), out.end(), [](const Complex& x, const Complex& y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    });
    return out;
}

}  // namespace pmwc
