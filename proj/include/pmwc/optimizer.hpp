#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pmwc/detail/matrix.hpp"

namespace pmwc {

/// Equality-constrained program with optional lower bounds:
/// minimize f(x) subject to c(x) = 0 and x >= lower_bounds.
/// The objective may return +infinity to mark infeasible points; the
/// constraints must be finite on the feasible box.
struct NlpProblem {
    int dim = 0;
    int eq_count = 0;
    std::function<double(const std::vector<double>&)> objective;
    std::function<std::vector<double>(const std::vector<double>&)> eq_constraints;
    /// Optional analytic eq_count x dim Jacobian; forward differences otherwise.
    std::function<detail::Mat(const std::vector<double>&)> eq_jacobian;
    /// Optional analytic gradient; forward differences otherwise.
    std::function<std::vector<double>(const std::vector<double>&)> objective_gradient;
    /// Lower bounds per coordinate; empty means unbounded below.
    std::vector<double> lower_bounds;
};

struct SolveOptions {
    double function_tolerance = 1e-6;    // |f_{k+1} - f_k| threshold
    double constraint_tolerance = 1e-8;  // infinity norm of c(x)
    int max_iterations = 500;
    double backtrack_factor = 0.5;
    double min_step = 1e-12;
};

struct SolveReport {
    std::vector<double> x_star;
    double objective_value = 0.0;
    double constraint_residual_inf_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    /// True iff the damped-BFGS Hessian approximation passed a Cholesky
    /// check after every accepted update.
    bool hessian_positive_definite = true;
};

/**
 * Forward-difference gradient with step 1e-6 * max(1, |x_i|) per
 * coordinate. A coordinate whose forward probe returns +infinity falls
 * back to a backward difference; both probes non-finite is an error.
 */
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       const std::vector<double>& x) {
    const double fx = f(x);
    if (!std::isfinite(fx)) throw std::invalid_argument("fd_gradient: objective not finite at x");
    std::vector<double> g(x.size(), 0.0);
    std::vector<double> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
        probe[i] = x[i] + h;
        const double forward = f(probe);
        if (std::isfinite(forward)) {
            g[i] = (forward - fx) / h;
        } else {
            probe[i] = x[i] - h;
            const double backward = f(probe);
            if (!std::isfinite(backward))
                throw std::runtime_error("fd_gradient: non-finite objective in both probe directions");
            g[i] = (fx - backward) / h;
        }
        probe[i] = x[i];
    }
    return g;
}

namespace detail {

struct QpSolution {
    std::vector<double> d;
    std::vector<double> lambda;
    std::vector<int> active;  // bound indices held at their limit
    bool ok = false;
};

/// Direct dense KKT solve for one working set of bound constraints.
/// Rows: Hd + J'lambda - E'mu = -g, Jd = -c, d_W = dlo_W.
inline bool solve_kkt(const Mat& hess, const std::vector<double>& grad, const Mat& jac,
                      const std::vector<double>& cons, const std::vector<double>& dlo,
                      const std::vector<int>& active, QpSolution& out) {
    const int n = hess.rows();
    const int m = jac.rows();
    const int a = static_cast<int>(active.size());
    const int total = n + m + a;

    Mat kkt(total, total);
    std::vector<double> rhs(static_cast<std::size_t>(total), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) kkt(i, j) = hess(i, j);
        rhs[static_cast<std::size_t>(i)] = -grad[static_cast<std::size_t>(i)];
    }
    for (int r = 0; r < m; ++r) {
        for (int j = 0; j < n; ++j) {
            kkt(n + r, j) = jac(r, j);
            kkt(j, n + r) = jac(r, j);
        }
        rhs[static_cast<std::size_t>(n + r)] = -cons[static_cast<std::size_t>(r)];
    }
    for (int t = 0; t < a; ++t) {
        const int i = active[static_cast<std::size_t>(t)];
        kkt(n + m + t, i) = 1.0;
        kkt(i, n + m + t) = -1.0;  // -E' mu keeps mu >= 0 at an optimal working set
        rhs[static_cast<std::size_t>(n + m + t)] = dlo[static_cast<std::size_t>(i)];
    }

    std::vector<double> sol;
    try {
        sol = lu_solve(kkt, rhs);
    } catch (const std::exception&) {
        return false;
    }
    out.d.assign(sol.begin(), sol.begin() + n);
    out.lambda.assign(sol.begin() + n, sol.begin() + n + m);
    out.active = active;
    // Bound rows hold exactly by construction.
    for (int t = 0; t < a; ++t)
        out.d[static_cast<std::size_t>(active[static_cast<std::size_t>(t)])] =
            dlo[static_cast<std::size_t>(active[static_cast<std::size_t>(t)])];
    out.ok = true;
    return true;
}

/// Convex QP with equality constraints and lower bounds on the step:
/// min 1/2 d'Hd + g'd  s.t.  Jd = -c,  d >= dlo.
/// An add/drop active-set loop handles the bounds; if it fails to settle
/// (possible only in degenerate cases at this scale), every working set is
/// enumerated as a fallback, which is exact for a convex problem.
inline QpSolution solve_eq_bound_qp(const Mat& hess, const std::vector<double>& grad,
                                    const Mat& jac, const std::vector<double>& cons,
                                    const std::vector<double>& dlo) {
    const int n = hess.rows();
    const int m = jac.rows();
    constexpr double feas_tol = 1e-12;

    std::vector<int> bounded;
    for (int i = 0; i < n; ++i)
        if (std::isfinite(dlo[static_cast<std::size_t>(i)])) bounded.push_back(i);

    const auto mu_of = [&](const QpSolution& s) {
        // Recover bound multipliers from stationarity: mu = Hd + g + J'lambda on W.
        std::vector<double> mu(s.active.size(), 0.0);
        for (std::size_t t = 0; t < s.active.size(); ++t) {
            const int i = s.active[t];
            double v = grad[static_cast<std::size_t>(i)];
            for (int j = 0; j < n; ++j) v += hess(i, j) * s.d[static_cast<std::size_t>(j)];
            for (int r = 0; r < m; ++r) v += jac(r, i) * s.lambda[static_cast<std::size_t>(r)];
            mu[t] = v;
        }
        return mu;
    };

    std::vector<int> working;
    QpSolution sol;
    for (int pass = 0; pass < 4 * (n + 1); ++pass) {
        if (!solve_kkt(hess, grad, jac, cons, dlo, working, sol)) break;

        int worst_idx = -1;
        double worst = feas_tol;
        for (int i : bounded) {
            if (std::find(working.begin(), working.end(), i) != working.end()) continue;
            const double violation = dlo[static_cast<std::size_t>(i)] - sol.d[static_cast<std::size_t>(i)];
            if (violation > worst) {
                worst = violation;
                worst_idx = i;
            }
        }
        if (worst_idx >= 0) {
            if (static_cast<int>(working.size()) + m >= n) break;  // cannot pin more; enumerate
            working.push_back(worst_idx);
            continue;
        }

        const std::vector<double> mu = mu_of(sol);
        int drop = -1;
        double most_negative = -feas_tol;
        for (std::size_t t = 0; t < mu.size(); ++t)
            if (mu[t] < most_negative) {
                most_negative = mu[t];
                drop = static_cast<int>(t);
            }
        if (drop >= 0) {
            working.erase(working.begin() + drop);
            continue;
        }
        return sol;
    }

    // Enumeration fallback over all working sets, smallest first.
    const int nb = static_cast<int>(bounded.size());
    for (int size = 0; size <= std::min(nb, n - m); ++size) {
        for (unsigned mask = 0; mask < (1u << nb); ++mask) {
            if (__builtin_popcount(mask) != size) continue;
            std::vector<int> candidate;
            for (int b = 0; b < nb; ++b)
                if (mask & (1u << b)) candidate.push_back(bounded[static_cast<std::size_t>(b)]);
            QpSolution trial;
            if (!solve_kkt(hess, grad, jac, cons, dlo, candidate, trial)) continue;
            bool primal_ok = true;
            for (int i : bounded)
                if (trial.d[static_cast<std::size_t>(i)] < dlo[static_cast<std::size_t>(i)] - feas_tol) {
                    primal_ok = false;
                    break;
                }
            if (!primal_ok) continue;
            bool dual_ok = true;
            for (double v : mu_of(trial))
                if (v < -1e-9) {
                    dual_ok = false;
                    break;
                }
            if (!dual_ok) continue;
            return trial;
        }
    }
    QpSolution failed;
    failed.ok = false;
    return failed;
}

inline double linf(const std::vector<double>& v) {
    double best = 0.0;
    for (double x : v) best = std::max(best, std::abs(x));
    return best;
}

inline double l1(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += std::abs(x);
    return acc;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace detail

/**
 * Small dense SQP for equality constraints plus lower bounds.
 *
 * Each iteration solves the QP model with a damped-BFGS Lagrangian Hessian
 * and linearized constraints, handles the bounds with the active-set QP
 * above, and globalizes with a backtracking line search on the l1 merit
 * function whose penalty is kept above twice the multiplier norm.
 * Termination: |f_{k+1} - f_k| <= function_tolerance with the constraint
 * residual within tolerance, or a vanishing QP step at a feasible point,
 * or the iteration cap (reported as converged = false).
 *
 * The algorithm is deterministic: repeated runs from the same start
 * produce bitwise-identical reports.
 */
inline SolveReport solve_sqp(const NlpProblem& problem, std::vector<double> x,
                             const SolveOptions& opts = {}) {
    const int n = problem.dim;
    const int m = problem.eq_count;
    if (n < 1) throw std::invalid_argument("solve_sqp: dim must be >= 1");
    if (static_cast<int>(x.size()) != n) throw std::invalid_argument("solve_sqp: x0 has wrong length");
    if (!problem.objective) throw std::invalid_argument("solve_sqp: missing objective");
    if (m > 0 && !problem.eq_constraints)
        throw std::invalid_argument("solve_sqp: missing equality constraints");
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("solve_sqp: non-finite start point");

    std::vector<double> lb(static_cast<std::size_t>(n), -std::numeric_limits<double>::infinity());
    if (!problem.lower_bounds.empty()) {
        if (static_cast<int>(problem.lower_bounds.size()) != n)
            throw std::invalid_argument("solve_sqp: lower_bounds has wrong length");
        lb = problem.lower_bounds;
    }
    for (int i = 0; i < n; ++i)
        x[static_cast<std::size_t>(i)] = std::max(x[static_cast<std::size_t>(i)], lb[static_cast<std::size_t>(i)]);

    const auto eval_constraints = [&](const std::vector<double>& xx) -> std::vector<double> {
        if (m == 0) return {};
        std::vector<double> c = problem.eq_constraints(xx);
        if (static_cast<int>(c.size()) != m)
            throw std::runtime_error("solve_sqp: constraint callback returned wrong length");
        return c;
    };
    const auto eval_gradient = [&](const std::vector<double>& xx) {
        return problem.objective_gradient ? problem.objective_gradient(xx)
                                          : fd_gradient(problem.objective, xx);
    };
    const auto eval_jacobian = [&](const std::vector<double>& xx,
                                   const std::vector<double>& cx) -> detail::Mat {
        if (m == 0) return detail::Mat(0, n);
        if (problem.eq_jacobian) return problem.eq_jacobian(xx);
        detail::Mat jac(m, n);
        std::vector<double> probe = xx;
        for (int i = 0; i < n; ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(xx[static_cast<std::size_t>(i)]));
            probe[static_cast<std::size_t>(i)] = xx[static_cast<std::size_t>(i)] + h;
            const std::vector<double> cp = eval_constraints(probe);
            probe[static_cast<std::size_t>(i)] = xx[static_cast<std::size_t>(i)];
            for (int r = 0; r < m; ++r)
                jac(r, i) = (cp[static_cast<std::size_t>(r)] - cx[static_cast<std::size_t>(r)]) / h;
        }
        return jac;
    };

    double f = problem.objective(x);
    if (!std::isfinite(f))
        throw std::runtime_error("solve_sqp: infeasible start (objective not finite at x0)");
    std::vector<double> c = eval_constraints(x);
    std::vector<double> g = eval_gradient(x);
    detail::Mat jac = eval_jacobian(x, c);

    detail::Mat hess = detail::Mat::identity(n);
    double penalty = 1.0;

    SolveReport report;
    bool converged = false;
    int iterations = 0;
    int quiet_steps = 0;  // consecutive steps with |delta f| within tolerance

    while (iterations < opts.max_iterations) {
        std::vector<double> dlo(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            dlo[static_cast<std::size_t>(i)] = lb[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)];
        detail::QpSolution qp = detail::solve_eq_bound_qp(hess, g, jac, c, dlo);
        if (!qp.ok) break;  // QP infeasible or singular: stop with best iterate

        double scale = 1.0;
        for (double v : x) scale = std::max(scale, std::abs(v));
        if (detail::linf(qp.d) <= 1e-12 * scale && detail::linf(c) <= opts.constraint_tolerance) {
            converged = true;  // KKT point of the QP model at a feasible x
            break;
        }
        ++iterations;

        penalty = std::max(penalty, 2.0 * detail::linf(qp.lambda));
        const double merit0 = f + penalty * detail::l1(c);
        const double descent = detail::dot(g, qp.d) - penalty * detail::l1(c);

        const auto trial_point = [&](double alpha) {
            std::vector<double> xt(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                double v = x[static_cast<std::size_t>(i)] + alpha * qp.d[static_cast<std::size_t>(i)];
                v = std::max(v, lb[static_cast<std::size_t>(i)]);
                xt[static_cast<std::size_t>(i)] = v;
            }
            if (alpha == 1.0)  // land exactly on bounds active in the QP
                for (int i : qp.active) xt[static_cast<std::size_t>(i)] = lb[static_cast<std::size_t>(i)];
            return xt;
        };

        double alpha = 1.0;
        bool accepted = false;
        std::vector<double> x_next, c_next;
        double f_next = 0.0;
        while (alpha >= opts.min_step) {
            std::vector<double> xt = trial_point(alpha);
            const double ft = problem.objective(xt);
            if (std::isfinite(ft)) {
                std::vector<double> ct = eval_constraints(xt);
                const double merit = ft + penalty * detail::l1(ct);
                if (merit <= merit0 + 1e-4 * alpha * std::min(descent, 0.0)) {
                    accepted = true;
                    x_next = std::move(xt);
                    c_next = std::move(ct);
                    f_next = ft;
                    break;
                }
            }
            alpha *= opts.backtrack_factor;
        }
        if (!accepted) {
            // No merit progress along the QP direction; accept the iterate
            // as converged only if it is already feasible.
            converged = detail::linf(c) <= opts.constraint_tolerance;
            break;
        }

        std::vector<double> g_next = eval_gradient(x_next);
        detail::Mat jac_next = eval_jacobian(x_next, c_next);

        // Damped BFGS on the Lagrangian gradient difference.
        std::vector<double> s(static_cast<std::size_t>(n)), yv(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            s[static_cast<std::size_t>(i)] =
                x_next[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)];
            double yi = g_next[static_cast<std::size_t>(i)] - g[static_cast<std::size_t>(i)];
            for (int r = 0; r < m; ++r)
                yi += (jac_next(r, i) - jac(r, i)) * qp.lambda[static_cast<std::size_t>(r)];
            yv[static_cast<std::size_t>(i)] = yi;
        }
        if (detail::linf(s) > 1e-14 * scale) {
            std::vector<double> hs(static_cast<std::size_t>(n), 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    hs[static_cast<std::size_t>(i)] += hess(i, j) * s[static_cast<std::size_t>(j)];
            const double s_hs = detail::dot(s, hs);
            double s_y = detail::dot(s, yv);
            if (s_y < 0.2 * s_hs && s_hs > 0.0) {
                const double theta = 0.8 * s_hs / (s_hs - s_y);
                for (int i = 0; i < n; ++i)
                    yv[static_cast<std::size_t>(i)] = theta * yv[static_cast<std::size_t>(i)] +
                                                      (1.0 - theta) * hs[static_cast<std::size_t>(i)];
                s_y = detail::dot(s, yv);
            }
            if (s_y > 1e-14 * s_hs && s_hs > 0.0) {
                detail::Mat updated = hess;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        updated(i, j) += yv[static_cast<std::size_t>(i)] * yv[static_cast<std::size_t>(j)] / s_y -
                                         hs[static_cast<std::size_t>(i)] * hs[static_cast<std::size_t>(j)] / s_hs;
                if (detail::is_positive_definite(updated))
                    hess = updated;
                else
                    report.hessian_positive_definite = false;  // update rejected, previous H kept
            }
        }

        const double delta_f = std::abs(f_next - f);
        x = std::move(x_next);
        f = f_next;
        c = std::move(c_next);
        g = std::move(g_next);
        jac = jac_next;
        // Two consecutive quiet steps guard against stopping mid-descent in
        // a flat basin on the first |delta f| dip.
        quiet_steps = (delta_f <= opts.function_tolerance) ? quiet_steps + 1 : 0;
        if (quiet_steps >= 2 && detail::linf(c) <= opts.constraint_tolerance) {
            converged = true;
            break;
        }
    }

    // Coordinates resting against a bound are reported exactly on it.
    bool snapped = false;
    for (int i = 0; i < n; ++i) {
        const double gap = x[static_cast<std::size_t>(i)] - lb[static_cast<std::size_t>(i)];
        if (std::isfinite(lb[static_cast<std::size_t>(i)]) && gap != 0.0 &&
            gap <= 1e-10 * std::max(1.0, std::abs(x[static_cast<std::size_t>(i)]))) {
            x[static_cast<std::size_t>(i)] = lb[static_cast<std::size_t>(i)];
            snapped = true;
        }
    }
    if (snapped) {
        f = problem.objective(x);
        c = eval_constraints(x);
    }

    report.x_star = std::move(x);
    report.objective_value = f;
    report.constraint_residual_inf_norm = detail::linf(c);
    report.iterations = iterations;
    report.converged = converged && report.constraint_residual_inf_norm <= opts.constraint_tolerance;
    return report;
}

}  // namespace pmwc
