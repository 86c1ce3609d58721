#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "pmwc/transfer_function.hpp"

namespace pmwc {

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Achieved margins of an open loop, measured from the frequency response.
struct MarginReport {
    double wc_achieved = 0.0;   // rad/s
    double pm_achieved = 0.0;   // degrees
    int crossing_count = 0;     // number of unity-gain crossings found
};

namespace detail_freq {

/// log10 |L(jw)|, or NaN where the response is zero or not finite.
inline double log_gain(const TransferFunction& l, double w) {
    const Complex jw(0.0, w);
    const double an = std::abs(l.num()(jw));
    const double ad = std::abs(l.den()(jw));
    if (!(an > 0.0) || !(ad > 0.0) || !std::isfinite(an) || !std::isfinite(ad))
        return std::numeric_limits<double>::quiet_NaN();
    return std::log10(an) - std::log10(ad);
}

}  // namespace detail_freq

/**
 * All frequencies in [w_min, w_max] where |L(jw)| = 1, ascending.
 *
 * A log-spaced grid (default 2000 points over the range) locates sign
 * changes of log|L|; each bracket is refined by bisection in log frequency
 * to a relative width of 1e-10. No crossing found returns an empty vector.
 */
inline std::vector<double> gain_crossovers(const TransferFunction& l, double w_min = 1e-3,
                                           double w_max = 1e3, int grid_points = 2000) {
    if (!(0.0 < w_min && w_min < w_max))
        throw std::invalid_argument("gain_crossovers: need 0 < w_min < w_max");
    grid_points = std::max(grid_points, 2);

    const double lmin = std::log10(w_min);
    const double lmax = std::log10(w_max);
    std::vector<double> ws, fs;
    ws.reserve(static_cast<std::size_t>(grid_points));
    fs.reserve(static_cast<std::size_t>(grid_points));
    for (int k = 0; k < grid_points; ++k) {
        const double w = (k == 0) ? w_min
                         : (k == grid_points - 1)
                             ? w_max
                             : std::pow(10.0, lmin + (lmax - lmin) * k / (grid_points - 1));
        const double f = detail_freq::log_gain(l, w);
        if (!std::isnan(f)) {
            ws.push_back(w);
            fs.push_back(f);
        }
    }

    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < ws.size(); ++i) {
        if (fs[i] == 0.0) {
            out.push_back(ws[i]);
            continue;
        }
        if (fs[i + 1] == 0.0) continue;  // recorded as its own sample next round
        if ((fs[i] < 0.0) == (fs[i + 1] < 0.0)) continue;

        double a = ws[i], b = ws[i + 1];
        double fa = fs[i];
        while (b - a > 1e-10 * b) {
            const double mid = std::sqrt(a * b);
            const double fm = detail_freq::log_gain(l, mid);
            if (std::isnan(fm)) break;
            if (fm == 0.0) {
                a = b = mid;
                break;
            }
            if ((fm < 0.0) == (fa < 0.0)) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        out.push_back(0.5 * (a + b));
    }
    if (!fs.empty() && fs.back() == 0.0) out.push_back(ws.back());
    return out;
}

/**
 * Phase margin 180 + angle(L(jwc)) in degrees, with the loop phase
 * continuously unwrapped along a log grid from w_min so multi-revolution
 * loops report the correct branch. The unwrap anchor is the principal
 * value at w_min.
 */
inline double phase_margin_at(const TransferFunction& l, double wc, double w_min = 1e-3) {
    if (!(wc > 0.0)) throw std::invalid_argument("phase_margin_at: wc must be positive");
    const Complex at_wc = freq_response(l, wc);  // throws on a pole at jwc
    if (std::abs(at_wc) == 0.0 || !std::isfinite(std::abs(at_wc)))
        throw std::domain_error("phase_margin_at: zero response at wc");

    const double start = std::min(w_min, wc);
    const double lmin = std::log10(start);
    const double lmax = std::log10(wc);
    const int n = std::max(2, static_cast<int>(std::ceil((lmax - lmin) * 200.0)) + 1);

    double prev = 0.0;
    double turns = 0.0;
    bool have_prev = false;
    for (int k = 0; k < n; ++k) {
        Complex v;
        if (k == n - 1) {
            v = at_wc;
        } else {
            const double w = (k == 0) ? start : std::pow(10.0, lmin + (lmax - lmin) * k / (n - 1));
            const Complex jw(0.0, w);
            const Complex dv = l.den()(jw);
            if (std::abs(dv) == 0.0) continue;
            v = l.num()(jw) / dv;
            if (std::abs(v) == 0.0 || !std::isfinite(std::abs(v))) continue;
        }
        const double principal = rad_to_deg(std::arg(v));
        if (!have_prev) {
            prev = principal;
            have_prev = true;
            continue;
        }
        double unwrapped = principal + 360.0 * turns;
        while (unwrapped - prev > 180.0) {
            turns -= 1.0;
            unwrapped -= 360.0;
        }
        while (unwrapped - prev < -180.0) {
            turns += 1.0;
            unwrapped += 360.0;
        }
        prev = unwrapped;
    }
    return 180.0 + prev;
}

/// Margins at the lowest-frequency unity-gain crossing. The crossing count
/// is surfaced so callers can flag conditionally stable loops where more
/// than one crossing exists.
inline MarginReport verify_margins(const TransferFunction& l, double w_min = 1e-3,
                                   double w_max = 1e3) {
    const std::vector<double> crossings = gain_crossovers(l, w_min, w_max);
    if (crossings.empty())
        throw std::runtime_error("verify_margins: no gain crossover in scan range");
    MarginReport report;
    report.wc_achieved = crossings.front();
    report.pm_achieved = phase_margin_at(l, crossings.front(), w_min);
    report.crossing_count = static_cast<int>(crossings.size());
    return report;
}

/// One Bode sample: frequency, gain in dB, continuously unwrapped phase.
struct BodePoint {
    double w = 0.0;
    double mag_db = 0.0;
    double phase_deg = 0.0;
};

/// Log-spaced frequency response samples with phase unwrapped from w_min.
inline std::vector<BodePoint> bode_grid(const TransferFunction& l, double w_min, double w_max,
                                        int points_per_decade) {
    if (!(0.0 < w_min && w_min <= w_max))
        throw std::invalid_argument("bode_grid: need 0 < w_min <= w_max");
    if (points_per_decade < 1) throw std::invalid_argument("bode_grid: points_per_decade must be >= 1");

    const double lmin = std::log10(w_min);
    const double lmax = std::log10(w_max);
    const int n = (w_min == w_max)
                      ? 1
                      : std::max(2, static_cast<int>(std::lround((lmax - lmin) * points_per_decade)) + 1);

    std::vector<BodePoint> out;
    out.reserve(static_cast<std::size_t>(n));
    double prev = 0.0;
    double turns = 0.0;
    bool have_prev = false;
    for (int k = 0; k < n; ++k) {
        const double w = (k == 0) ? w_min
                         : (k == n - 1) ? w_max
                                        : std::pow(10.0, lmin + (lmax - lmin) * k / (n - 1));
        const Complex jw(0.0, w);
        const Complex dv = l.den()(jw);
        BodePoint pt;
        pt.w = w;
        const double ad = std::abs(dv);
        if (!(ad > 0.0)) {
            pt.mag_db = std::numeric_limits<double>::infinity();
            pt.phase_deg = prev;
            out.push_back(pt);
            continue;
        }
        const Complex v = l.num()(jw) / dv;
        const double mag = std::abs(v);
        if (!(mag > 0.0)) {
            pt.mag_db = -std::numeric_limits<double>::infinity();
            pt.phase_deg = prev;
            out.push_back(pt);
            continue;
        }
        pt.mag_db = 20.0 * std::log10(mag);
        const double principal = rad_to_deg(std::arg(v));
        if (!have_prev) {
            prev = principal;
            have_prev = true;
        } else {
            double unwrapped = principal + 360.0 * turns;
            while (unwrapped - prev > 180.0) {
                turns -= 1.0;
                unwrapped -= 360.0;
            }
            while (unwrapped - prev < -180.0) {
                turns += 1.0;
                unwrapped += 360.0;
            }
            prev = unwrapped;
        }
        pt.phase_deg = prev;
        out.push_back(pt);
    }
    return out;
}

}  // namespace pmwc
