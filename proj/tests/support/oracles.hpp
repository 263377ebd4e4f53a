#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>

#include "funnelkit/design.hpp"
#include "funnelkit/matrix.hpp"

namespace oracle {

using funnelkit::Mat;
using funnelkit::Vec;

inline Eigen::MatrixXd to_eigen(const Mat& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
        }
    }
    return e;
}

inline Mat from_eigen(const Eigen::MatrixXd& e) {
    Mat m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
        for (Eigen::Index j = 0; j < e.cols(); ++j) {
            m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = e(i, j);
        }
    }
    return m;
}

/// Second-order central difference.
inline double central_diff(const std::function<double(double)>& f, double t, double h) {
    return (f(t + h) - f(t - h)) / (2.0 * h);
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) {
        s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    }
    return s * h / 3.0;
}

inline Mat random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> U(lo, hi);
    Mat m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            m(i, j) = U(rng);
        }
    }
    return m;
}

/// Random SPD matrix with eigenvalues in [lo, hi].
inline Mat random_spd(std::mt19937_64& rng, std::size_t n, double lo = 0.5, double hi = 2.0) {
    const Eigen::MatrixXd X = to_eigen(random_matrix(rng, n, n));
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    const Eigen::MatrixXd Qm = qr.householderQ();
    std::uniform_real_distribution<double> U(lo, hi);
    Eigen::VectorXd d(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        d(i) = U(rng);
    }
    Eigen::MatrixXd S = Qm * d.asDiagonal() * Qm.transpose();
    S = 0.5 * (S + S.transpose()).eval();
    return from_eigen(S);
}

/// T·diag(λ)·T⁻¹ with λ drawn from [-hi, -lo].
inline Mat random_hurwitz(std::mt19937_64& rng, std::size_t n, double lo = 1.0, double hi = 5.0) {
    std::uniform_real_distribution<double> U(lo, hi);
    Eigen::MatrixXd T = to_eigen(random_matrix(rng, n, n)) + 2.0 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd d(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        d(i) = -U(rng);
    }
    return from_eigen(T * d.asDiagonal() * T.inverse());
}

/// ‖AᵀP + PA + Q‖_F, the residual the Lyapunov solver is judged by.
inline double lyapunov_residual(const Mat& A, const Mat& P, const Mat& Q) {
    const Eigen::MatrixXd a = to_eigen(A);
    const Eigen::MatrixXd p = to_eigen(P);
    return (a.transpose() * p + p * a + to_eigen(Q)).norm();
}

} // namespace oracle
