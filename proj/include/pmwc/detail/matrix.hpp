#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pmwc::detail {

/// Minimal dense row-major matrix. Every system in this library is tiny
/// (n <= 10), so plain loops and partial-pivot LU cover all the linear
/// algebra the solvers need.
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols)
        : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Mat: negative dimension");
    }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return v_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return v_[static_cast<std::size_t>(i) * cols_ + j]; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> v_;
};

inline Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("Mat: size mismatch in product");
    Mat out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

inline Mat operator*(double s, const Mat& a) {
    Mat out(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(i, j) = s * a(i, j);
    return out;
}

inline Mat operator+(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("Mat: size mismatch in sum");
    Mat out(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) + b(i, j);
    return out;
}

inline Mat operator-(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("Mat: size mismatch in difference");
    Mat out(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) - b(i, j);
    return out;
}

/// Maximum absolute row sum.
inline double inf_norm(const Mat& a) {
    double best = 0.0;
    for (int i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        for (int j = 0; j < a.cols(); ++j) row += std::abs(a(i, j));
        best = std::max(best, row);
    }
    return best;
}

/// Solve a x = b by LU with partial pivoting. Throws on singular input.
inline std::vector<double> lu_solve(Mat a, std::vector<double> b) {
    const int n = a.rows();
    if (a.cols() != n || static_cast<int>(b.size()) != n)
        throw std::invalid_argument("lu_solve: dimension mismatch");
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (!(std::abs(a(piv, col)) > 0.0) || !std::isfinite(a(piv, col)))
            throw std::runtime_error("lu_solve: singular matrix");
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
            std::swap(b[piv], b[col]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            a(r, col) = 0.0;
            for (int j = col + 1; j < n; ++j) a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double acc = b[i];
        for (int j = i + 1; j < n; ++j) acc -= a(i, j) * b[j];
        b[i] = acc / a(i, i);
    }
    return b;
}

/// Multi-right-hand-side variant of lu_solve.
inline Mat lu_solve(Mat a, Mat b) {
    const int n = a.rows();
    if (a.cols() != n || b.rows() != n) throw std::invalid_argument("lu_solve: dimension mismatch");
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (!(std::abs(a(piv, col)) > 0.0) || !std::isfinite(a(piv, col)))
            throw std::runtime_error("lu_solve: singular matrix");
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
            for (int j = 0; j < b.cols(); ++j) std::swap(b(piv, j), b(col, j));
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            a(r, col) = 0.0;
            for (int j = col + 1; j < n; ++j) a(r, j) -= f * a(col, j);
            for (int j = 0; j < b.cols(); ++j) b(r, j) -= f * b(col, j);
        }
    }
    for (int j = 0; j < b.cols(); ++j)
        for (int i = n - 1; i >= 0; --i) {
            double acc = b(i, j);
            for (int k = i + 1; k < n; ++k) acc -= a(i, k) * b(k, j);
            b(i, j) = acc / a(i, i);
        }
    return b;
}

/// Cholesky feasibility test: true iff the (symmetric) matrix factors with
/// strictly positive pivots.
inline bool is_positive_definite(Mat a) {
    const int n = a.rows();
    if (a.cols() != n) return false;
    for (int j = 0; j < n; ++j) {
        double d = a(j, j);
        for (int k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        const double root = std::sqrt(d);
        a(j, j) = root;
        for (int i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / root;
        }
    }
    return true;
}

/// Matrix exponential by degree-6 diagonal Pade with scaling and squaring.
/// The squaring count comes from the infinity norm: the argument is scaled
/// until its norm is at most 0.5, where the [6/6] approximant is accurate
/// to well below double round-off.
inline Mat expm(const Mat& x0) {
    const int n = x0.rows();
    if (x0.cols() != n) throw std::invalid_argument("expm: matrix must be square");
    if (n == 0) return Mat(0, 0);

    Mat x = x0;
    int squarings = 0;
    const double norm = inf_norm(x);
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
        x = std::ldexp(1.0, -squarings) * x;
    }

    // exp(x) ~= q(x)^-1 p(x) with p(x) = sum c_k x^k and q(x) = p(-x)
    static const double coef[7] = {1.0,        1.0 / 2.0,     5.0 / 44.0,    1.0 / 66.0,
                                   1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0};
    Mat power = Mat::identity(n);
    Mat p = Mat::identity(n);
    Mat q = Mat::identity(n);
    for (int k = 1; k <= 6; ++k) {
        power = power * x;
        const Mat term = coef[k] * power;
        p = p + term;
        q = (k % 2 == 0) ? q + term : q - term;
    }
    Mat e = lu_solve(q, p);
    for (int s = 0; s < squarings; ++s) e = e * e;
    return e;
}

}  // namespace pmwc::detail
