#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "funnelkit/error.hpp"

namespace funnelkit {

using Vec = std::vector<double>;

/// Small dense real matrix, row-major.
///
/// Sized for the problems in this library (a few dozen rows at most); every
/// operation allocates and returns by value.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
    /// Row-major entries; throws if the count does not match or an entry is not finite.
    Mat(std::size_t rows, std::size_t cols, std::vector<double> entries);
    Mat(std::initializer_list<std::initializer_list<double>> rows);

    static Mat identity(std::size_t n);
    static Mat diagonal(std::span<const double> d);
    static Mat column(std::span<const double> v);
    static Mat row(std::span<const double> v);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }
    [[nodiscard]] bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> row_span(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    [[nodiscard]] Mat transpose() const;
    [[nodiscard]] Mat block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    void set_block(std::size_t r0, std::size_t c0, const Mat& b);

    [[nodiscard]] double frobenius_norm() const noexcept;
    [[nodiscard]] double max_abs() const noexcept;
    [[nodiscard]] bool all_finite() const noexcept;

    Mat& operator+=(const Mat& o);
    Mat& operator-=(const Mat& o);
    Mat& operator*=(double s) noexcept;

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);
Mat operator*(const Mat& a, const Mat& b);
Vec operator*(const Mat& a, std::span<const double> x);

/// K ⊗ L: block (i,j) of the result is k_ij·L.
Mat kron(const Mat& k, const Mat& l);

/// Solves A·X = B by Gaussian elimination with partial pivoting.
/// Throws LinAlgError when a pivot falls below 1e-14 relative to the column scale.
Mat solve(const Mat& a, const Mat& b);
Vec solve(const Mat& a, std::span<const double> b);
Mat inverse(const Mat& a);

/// Solves AᵀP + PA + Q = 0 through the vectorized system (I⊗Aᵀ + Aᵀ⊗I)vec(P) = -vec(Q);
/// the result is symmetrized.
Mat solve_lyapunov(const Mat& a, const Mat& q);

struct SymEig {
    Vec values;  // ascending
    Mat vectors; // column k pairs with values[k]
};

/// Cyclic Jacobi eigensolver for symmetric matrices.
SymEig sym_eig(const Mat& m);
Vec sym_eigenvalues(const Mat& m);

/// Largest singular value, via the largest eigenvalue of MᵀM.
double spectral_norm(const Mat& m);

/// Symmetric matrix function f(M) = V·diag(f(λ))·Vᵀ for the two uses we need.
Mat sym_sqrt(const Mat& m);
Mat sym_inv_sqrt(const Mat& m);

bool is_symmetric(const Mat& m, double rel_tol = 1e-12);
bool is_spd(const Mat& m);

/// Characteristic polynomial det(sI - M) = s^n + c[1] s^{n-1} + ... + c[n], with c[0] = 1
/// (Faddeev–LeVerrier).
Vec characteristic_polynomial(const Mat& m);

struct HurwitzTest {
    bool hurwitz = false;
    bool marginal = false; // a Routh pivot fell below 1e-12
};

/// Routh–Hurwitz on a monic polynomial (coefficients as returned by characteristic_polynomial).
HurwitzTest routh_hurwitz(std::span<const double> monic_coeffs);
HurwitzTest hurwitz_test(const Mat& m);
bool is_hurwitz(const Mat& m);

/// Basis of ker(M) (columns), from the reduced row echelon form with relative pivot threshold.
Mat null_space(const Mat& m, double rel_tol = 1e-10);
std::size_t rank(const Mat& m, double rel_tol = 1e-10);

// Vector helpers.
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double norm_sq(std::span<const double> a);

} // namespace funnelkit
