#include "funnelkit/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

namespace funnelkit {

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InvalidArgument(std::string("matrix shape mismatch in ") + op);
    }
}

} // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        throw InvalidArgument("matrix entry count does not match its dimensions");
    }
    if (!all_finite()) {
        throw InvalidArgument("matrix entries must be finite");
    }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw InvalidArgument("ragged matrix literal");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
    if (!all_finite()) {
        throw InvalidArgument("matrix entries must be finite");
    }
}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Mat Mat::diagonal(std::span<const double> d) {
    Mat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        m(i, i) = d[i];
    }
    return m;
}

Mat Mat::column(std::span<const double> v) {
    return Mat(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

Mat Mat::row(std::span<const double> v) {
    return Mat(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            t(j, i) = (*this)(i, j);
        }
    }
    return t;
}

Mat Mat::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) {
        throw InvalidArgument("matrix block out of range");
    }
    Mat b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i) {
        for (std::size_t j = 0; j < nc; ++j) {
            b(i, j) = (*this)(r0 + i, c0 + j);
        }
    }
    return b;
}

void Mat::set_block(std::size_t r0, std::size_t c0, const Mat& b) {
    if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) {
        throw InvalidArgument("matrix block out of range");
    }
    for (std::size_t i = 0; i < b.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            (*this)(r0 + i, c0 + j) = b(i, j);
        }
    }
}

double Mat::frobenius_norm() const noexcept {
    return std::sqrt(norm_sq(data_));
}

double Mat::max_abs() const noexcept {
    double m = 0.0;
    for (double x : data_) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

bool Mat::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Mat& Mat::operator+=(const Mat& o) {
    require_same_shape(*this, o, "+");
    for (std::size_t k = 0; k < data_.size(); ++k) {
        data_[k] += o.data_[k];
    }
    return *this;
}

Mat& Mat::operator-=(const Mat& o) {
    require_same_shape(*this, o, "-");
    for (std::size_t k = 0; k < data_.size(); ++k) {
        data_[k] -= o.data_[k];
    }
    return *this;
}

Mat& Mat::operator*=(double s) noexcept {
    for (double& x : data_) {
        x *= s;
    }
    return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) {
        throw InvalidArgument("matrix product dimension mismatch");
    }
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < b.cols(); ++j) {
                c(i, j) += aik * b(k, j);
            }
        }
    }
    return c;
}

Vec operator*(const Mat& a, std::span<const double> x) {
    if (a.cols() != x.size()) {
        throw InvalidArgument("matrix-vector dimension mismatch");
    }
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        y[i] = dot(a.row_span(i), x);
    }
    return y;
}

Mat kron(const Mat& k, const Mat& l) {
    Mat out(k.rows() * l.rows(), k.cols() * l.cols());
    for (std::size_t i = 0; i < k.rows(); ++i) {
        for (std::size_t j = 0; j < k.cols(); ++j) {
            const double kij = k(i, j);
            for (std::size_t p = 0; p < l.rows(); ++p) {
                for (std::size_t q = 0; q < l.cols(); ++q) {
                    out(i * l.rows() + p, j * l.cols() + q) = kij * l(p, q);
                }
            }
        }
    }
    return out;
}

Mat solve(const Mat& a, const Mat& b) {
    if (!a.square() || a.rows() != b.rows()) {
        throw InvalidArgument("solve: dimension mismatch");
    }
    const std::size_t n = a.rows();
    const std::size_t nrhs = b.cols();
    Mat lu = a;
    Mat x = b;
    const double scale = std::max(a.max_abs(), 1e-300);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < n; ++i) {
            if (std::abs(lu(i, col)) > std::abs(lu(piv, col))) {
                piv = i;
            }
        }
        if (std::abs(lu(piv, col)) <= 1e-14 * scale) {
            throw LinAlgError("singular matrix");
        }
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(lu(col, j), lu(piv, j));
            }
            for (std::size_t j = 0; j < nrhs; ++j) {
                std::swap(x(col, j), x(piv, j));
            }
        }
        const double d = lu(col, col);
        for (std::size_t i = col + 1; i < n; ++i) {
            const double f = lu(i, col) / d;
            if (f == 0.0) {
                continue;
            }
            lu(i, col) = 0.0;
            for (std::size_t j = col + 1; j < n; ++j) {
                lu(i, j) -= f * lu(col, j);
            }
            for (std::size_t j = 0; j < nrhs; ++j) {
                x(i, j) -= f * x(col, j);
            }
        }
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = 0; j < nrhs; ++j) {
            double s = x(ii, j);
            for (std::size_t k = ii + 1; k < n; ++k) {
                s -= lu(ii, k) * x(k, j);
            }
            x(ii, j) = s / lu(ii, ii);
        }
    }
    return x;
}

Vec solve(const Mat& a, std::span<const double> b) {
    Mat x = solve(a, Mat::column(b));
    return {x.data().begin(), x.data().end()};
}

Mat inverse(const Mat& a) {
    return solve(a, Mat::identity(a.rows()));
}

Mat solve_lyapunov(const Mat& a, const Mat& q) {
    if (!a.square() || !q.square() || a.rows() != q.rows()) {
        throw InvalidArgument("Lyapunov equation needs square A and Q of equal size");
    }
    const std::size_t n = a.rows();
    const Mat at = a.transpose();
    const Mat eye = Mat::identity(n);
    // Column-major vec: vec(AᵀP) = (I⊗Aᵀ)vec(P), vec(PA) = (Aᵀ⊗I)vec(P).
    const Mat k = kron(eye, at) + kron(at, eye);
    Vec rhs(n * n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            rhs[j * n + i] = -q(i, j);
        }
    }
    Vec vp;
    try {
        vp = solve(k, rhs);
    } catch (const LinAlgError&) {
        throw LinAlgError("Lyapunov equation not uniquely solvable");
    }
    Mat p(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            p(i, j) = vp[j * n + i];
        }
    }
    return 0.5 * (p + p.transpose());
}

bool is_symmetric(const Mat& m, double rel_tol) {
    if (!m.square()) {
        return false;
    }
    return (m - m.transpose()).frobenius_norm() <= rel_tol * m.frobenius_norm();
}

SymEig sym_eig(const Mat& m) {
    if (!m.square()) {
        throw InvalidArgument("symmetric eigensolver requires symmetric matrix");
    }
    if (!is_symmetric(m, 1e-12)) {
        throw InvalidArgument("symmetric eigensolver requires symmetric matrix");
    }
    const std::size_t n = m.rows();
    Mat a = 0.5 * (m + m.transpose());
    Mat v = Mat::identity(n);

    const double total = std::max(a.frobenius_norm(), 1e-300);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                off += a(p, q) * a(p, q);
            }
        }
        if (std::sqrt(off) <= 1e-17 * total) {
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
    SymEig out{Vec(n), Mat(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) {
            out.vectors(i, k) = v(i, order[k]);
        }
    }
    return out;
}

Vec sym_eigenvalues(const Mat& m) {
    return sym_eig(m).values;
}

double spectral_norm(const Mat& m) {
    if (m.empty()) {
        return 0.0;
    }
    Mat mtm = m.transpose() * m;
    mtm = 0.5 * (mtm + mtm.transpose());
    const Vec ev = sym_eigenvalues(mtm);
    return std::sqrt(std::max(ev.back(), 0.0));
}

namespace {

template <typename F>
Mat sym_apply(const Mat& m, F f) {
    const SymEig e = sym_eig(m);
    const std::size_t n = m.rows();
    Mat out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double fk = f(e.values[k]);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                out(i, j) += e.vectors(i, k) * fk * e.vectors(j, k);
            }
        }
    }
    return 0.5 * (out + out.transpose());
}

} // namespace

Mat sym_sqrt(const Mat& m) {
    return sym_apply(m, [](double l) {
        if (l < 0.0) {
            throw LinAlgError("square root of a matrix with negative eigenvalue");
        }
        return std::sqrt(l);
    });
}

Mat sym_inv_sqrt(const Mat& m) {
    return sym_apply(m, [](double l) {
        if (l <= 0.0) {
            throw LinAlgError("inverse square root of a matrix that is not positive definite");
        }
        return 1.0 / std::sqrt(l);
    });
}

bool is_spd(const Mat& m) {
    if (!is_symmetric(m, 1e-12)) {
        return false;
    }
    const Vec ev = sym_eigenvalues(m);
    return !ev.empty() && ev.front() > 0.0;
}

Vec characteristic_polynomial(const Mat& m) {
    if (!m.square()) {
        throw InvalidArgument("characteristic polynomial needs a square matrix");
    }
    const std::size_t n = m.rows();
    Vec c(n + 1, 0.0);
    c[0] = 1.0;
    Mat mk = Mat::identity(n);
    for (std::size_t k = 1; k <= n; ++k) {
        if (k > 1) {
            mk = m * mk;
            for (std::size_t i = 0; i < n; ++i) {
                mk(i, i) += c[k - 1];
            }
        }
        const Mat amk = m * mk;
        double tr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            tr += amk(i, i);
        }
        c[k] = -tr / static_cast<double>(k);
    }
    return c;
}

HurwitzTest routh_hurwitz(std::span<const double> c) {
    if (c.empty() || c[0] != 1.0) {
        throw InvalidArgument("Routh–Hurwitz test expects a monic polynomial");
    }
    const std::size_t n = c.size() - 1;
    if (n == 0) {
        return {true, false};
    }
    constexpr double pivot_floor = 1e-12;
    const std::size_t width = n / 2 + 1;
    Vec prev(width, 0.0);
    Vec cur(width, 0.0);
    for (std::size_t j = 0; 2 * j <= n; ++j) {
        prev[j] = c[2 * j];
    }
    for (std::size_t j = 0; 2 * j + 1 <= n; ++j) {
        cur[j] = c[2 * j + 1];
    }
    // Rows s^n and s^{n-1}; then n-1 more rows down to s^0.
    for (std::size_t row = 1; row <= n; ++row) {
        if (std::abs(cur[0]) < pivot_floor) {
            return {false, true};
        }
        if (cur[0] < 0.0) {
            return {false, false};
        }
        if (row == n) {
            break;
        }
        Vec next(width, 0.0);
        for (std::size_t j = 0; j + 1 < width; ++j) {
            next[j] = (cur[0] * prev[j + 1] - prev[0] * cur[j + 1]) / cur[0];
        }
        prev = std::move(cur);
        cur = std::move(next);
    }
    return {true, false};
}

HurwitzTest hurwitz_test(const Mat& m) {
    const Vec c = characteristic_polynomial(m);
    return routh_hurwitz(c);
}

bool is_hurwitz(const Mat& m) {
    return hurwitz_test(m).hurwitz;
}

namespace {

struct Rref {
    Mat r;
    std::vector<std::size_t> pivots;
};

Rref rref(const Mat& m, double rel_tol) {
    Rref out{m, {}};
    Mat& a = out.r;
    const double tol = rel_tol * std::max(m.max_abs(), 1e-300);
    std::size_t row = 0;
    for (std::size_t col = 0; col < a.cols() && row < a.rows(); ++col) {
        std::size_t piv = row;
        for (std::size_t i = row + 1; i < a.rows(); ++i) {
            if (std::abs(a(i, col)) > std::abs(a(piv, col))) {
                piv = i;
            }
        }
        if (std::abs(a(piv, col)) <= tol) {
            for (std::size_t i = row; i < a.rows(); ++i) {
                a(i, col) = 0.0;
            }
            continue;
        }
        for (std::size_t j = 0; j < a.cols(); ++j) {
            std::swap(a(row, j), a(piv, j));
        }
        const double d = a(row, col);
        for (std::size_t j = 0; j < a.cols(); ++j) {
            a(row, j) /= d;
        }
        for (std::size_t i = 0; i < a.rows(); ++i) {
            if (i == row) {
                continue;
            }
            const double f = a(i, col);
            if (f == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < a.cols(); ++j) {
                a(i, j) -= f * a(row, j);
            }
        }
        out.pivots.push_back(col);
        ++row;
    }
    return out;
}

} // namespace

Mat null_space(const Mat& m, double rel_tol) {
    const Rref e = rref(m, rel_tol);
    const std::size_t n = m.cols();
    std::vector<bool> is_pivot(n, false);
    for (std::size_t p : e.pivots) {
        is_pivot[p] = true;
    }
    std::vector<std::size_t> free_cols;
    for (std::size_t j = 0; j < n; ++j) {
        if (!is_pivot[j]) {
            free_cols.push_back(j);
        }
    }
    Mat basis(n, free_cols.size());
    for (std::size_t k = 0; k < free_cols.size(); ++k) {
        const std::size_t f = free_cols[k];
        basis(f, k) = 1.0;
        for (std::size_t r = 0; r < e.pivots.size(); ++r) {
            basis(e.pivots[r], k) = -e.r(r, f);
        }
    }
    return basis;
}

std::size_t rank(const Mat& m, double rel_tol) {
    return rref(m, rel_tol).pivots.size();
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm_sq(std::span<const double> a) {
    return dot(a, a);
}

double norm(std::span<const double> a) {
    return std::sqrt(norm_sq(a));
}

} // namespace funnelkit
