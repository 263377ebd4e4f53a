#include "funnelkit/plants.hpp"

#include <cmath>

namespace funnelkit {

Vec Plant::chain_state(std::span<const double> x, int j) const {
    if (j < 1 || j > r()) {
        throw InvalidArgument("chain index out of range");
    }
    const std::size_t mm = m();
    const auto off = static_cast<std::size_t>(j - 1) * mm;
    return Vec(x.begin() + static_cast<std::ptrdiff_t>(off), x.begin() + static_cast<std::ptrdiff_t>(off + mm));
}

Vec Plant::internal_state(std::span<const double> x) const {
    const std::size_t off = m() * static_cast<std::size_t>(r());
    return Vec(x.begin() + static_cast<std::ptrdiff_t>(off), x.end());
}

namespace {

bool sign_definite(const Mat& g) {
    if (!is_symmetric(g)) {
        return false;
    }
    const Vec ev = sym_eigenvalues(g);
    return ev.front() > 0.0 || ev.back() < 0.0;
}

} // namespace

BifPlant::BifPlant(std::vector<Mat> R, Mat S, Mat Q_int, Mat P_int, Mat Gamma, VectorSignal d_r, VectorSignal d_eta)
    : R_(std::move(R)), S_(std::move(S)), Q_(std::move(Q_int)), P_(std::move(P_int)), gamma_(std::move(Gamma)),
      d_r_(std::move(d_r)), d_eta_(std::move(d_eta)) {
    if (R_.empty()) {
        throw InvalidArgument("plant needs relative degree >= 1");
    }
    const std::size_t mm = gamma_.rows();
    if (mm == 0 || !gamma_.square()) {
        throw InvalidArgument("Γ must be a non-empty square matrix");
    }
    for (const auto& Ri : R_) {
        if (Ri.rows() != mm || Ri.cols() != mm) {
            throw InvalidArgument("each R_i must be m×m");
        }
    }
    const std::size_t ne = Q_.rows();
    if (Q_.cols() != ne || S_.rows() != mm || S_.cols() != ne || P_.rows() != ne || P_.cols() != mm) {
        throw InvalidArgument("internal-dynamics matrices have inconsistent dimensions");
    }
    if (ne > 0 && !is_hurwitz(Q_)) {
        throw InvalidArgument("system not minimum phase (internal dynamics not Hurwitz)");
    }
    if (!sign_definite(gamma_)) {
        throw InvalidArgument("Γ must be symmetric and sign definite");
    }
    if (d_r_.dim() == 0) {
        d_r_ = VectorSignal::zero(mm);
    }
    if (d_eta_.dim() == 0) {
        d_eta_ = VectorSignal::zero(ne);
    }
    if (d_r_.dim() != mm || d_eta_.dim() != ne) {
        throw InvalidArgument("disturbance dimensions do not match the plant");
    }
}

BifPlant BifPlant::integrator_chain(int r, const Mat& Gamma) {
    const std::size_t mm = Gamma.rows();
    return BifPlant(std::vector<Mat>(static_cast<std::size_t>(r), Mat(mm, mm)), Mat(mm, 0), Mat(0, 0), Mat(0, mm),
                    Gamma);
}

void BifPlant::rhs(double t, std::span<const double> x, std::span<const double> u, std::span<double> dx) const {
    const std::size_t mm = m();
    const auto rr = static_cast<std::size_t>(r());
    const std::size_t ne = internal_dim();
    if (x.size() != state_dim() || dx.size() != state_dim() || u.size() != mm) {
        throw InvalidArgument("plant rhs: dimension mismatch");
    }
    for (std::size_t i = 0; i + mm < rr * mm; ++i) {
        dx[i] = x[i + mm];
    }
    const auto top = dx.subspan((rr - 1) * mm, mm);
    const auto eta = x.subspan(rr * mm, ne);
    const Vec dr = d_r_.value(t);
    for (std::size_t a = 0; a < mm; ++a) {
        double s = dr[a];
        for (std::size_t j = 0; j < rr; ++j) {
            for (std::size_t b = 0; b < mm; ++b) {
                s += R_[j](a, b) * x[j * mm + b];
            }
        }
        for (std::size_t b = 0; b < ne; ++b) {
            s += S_(a, b) * eta[b];
        }
        for (std::size_t b = 0; b < mm; ++b) {
            s += gamma_(a, b) * u[b];
        }
        top[a] = s;
    }
    const Vec de = d_eta_.value(t);
    for (std::size_t a = 0; a < ne; ++a) {
        double s = de[a];
        for (std::size_t b = 0; b < ne; ++b) {
            s += Q_(a, b) * eta[b];
        }
        for (std::size_t b = 0; b < mm; ++b) {
            s += P_(a, b) * x[b];
        }
        dx[rr * mm + a] = s;
    }
}

VectorSignal Example2Plant::default_disturbance() {
    ScalarSignal d1{{SignalTerm::sine(5.0, 0.2), SignalTerm::cosine(7.0, 0.2)}};
    ScalarSignal d2{{SignalTerm::sine(9.0, 0.25), SignalTerm::cosine(3.0, 0.2)}};
    return VectorSignal({d1, d2});
}

Example2Plant::Example2Plant()
    : R_{Mat{{-1.0, 0.0}, {0.0, 0.0}}, Mat{{1.0, -1.0}, {0.0, 0.0}}, Mat{{1.0, 1.0}, {0.0, -1.0}}},
      gamma_{{2.0, 0.2}, {0.2, 2.0}}, d_(default_disturbance()) {}

void Example2Plant::rhs(double t, std::span<const double> x, std::span<const double> u, std::span<double> dx) const {
    if (x.size() != 7 || dx.size() != 7 || u.size() != 2) {
        throw InvalidArgument("plant rhs: dimension mismatch");
    }
    const double x11 = x[0], x12 = x[1], x21 = x[2], x22 = x[3], x31 = x[4], x32 = x[5], eta = x[6];
    const Vec d = d_.value(t);
    const double T1 = x11 * x11 + std::exp(x11 - std::abs(x21));
    const double T2 = x12 * x12 * x12 - std::sin(x22);
    const double f1 = d[0] + T1 + eta * eta * eta;
    const double f2 = d[1] + T2 - eta;

    for (int i = 0; i < 4; ++i) {
        dx[i] = x[i + 2];
    }
    for (std::size_t a = 0; a < 2; ++a) {
        double s = (a == 0 ? f1 : f2);
        for (std::size_t j = 0; j < 3; ++j) {
            s += R_[j](a, 0) * x[2 * j] + R_[j](a, 1) * x[2 * j + 1];
        }
        s += gamma_(a, 0) * u[0] + gamma_(a, 1) * u[1];
        dx[4 + a] = s;
    }
    const double n1 = x11 * x11 + x12 * x12;
    const double n3 = x31 * x31 + x32 * x32;
    dx[6] = -eta + n1 * std::tanh(n3);
}

LinearBif linear_to_bif(const Mat& A, const Mat& B, const Mat& C, std::optional<int> declared_r) {
    const std::size_t n = A.rows();
    if (!A.square() || B.rows() != n || C.cols() != n || n == 0) {
        throw InvalidArgument("linear system matrices have inconsistent dimensions");
    }
    const std::size_t mm = B.cols();
    if (C.rows() != mm) {
        throw InvalidArgument("linear system must have as many outputs as inputs");
    }
    if (rank(B) != mm || rank(C) != mm) {
        throw InvalidArgument("B and C must have full rank m");
    }

    // Least k with C A^{k-1} B != 0.
    const double nA = std::max(A.frobenius_norm(), 1.0);
    const double scale = C.frobenius_norm() * B.frobenius_norm();
    Mat Ak = Mat::identity(n);
    int r = 0;
    Mat Gamma;
    for (std::size_t k = 1; k <= n; ++k) {
        const Mat cab = C * Ak * B;
        const double tol = 1e-10 * scale * std::pow(nA, static_cast<double>(k - 1));
        if (cab.max_abs() > tol) {
            r = static_cast<int>(k);
            Gamma = cab;
            break;
        }
        Ak = Ak * A;
    }
    if (r == 0 || (declared_r && *declared_r != r)) {
        throw InvalidArgument("no well-defined relative degree");
    }
    if (rank(Gamma) < mm) {
        throw InvalidArgument("Γ singular");
    }
    const auto rr = static_cast<std::size_t>(r);
    if (rr * mm > n) {
        throw InvalidArgument("no well-defined relative degree");
    }

    Mat calB(n, rr * mm);
    Mat calC(rr * mm, n);
    Mat Ab = B;
    Mat CA = C;
    for (std::size_t k = 0; k < rr; ++k) {
        calB.set_block(0, k * mm, Ab);
        calC.set_block(k * mm, 0, CA);
        Ab = A * Ab;
        CA = CA * A;
    }
    // After the loop: Ab = A^r B, CA = C A^r.
    const std::size_t ne = n - rr * mm;
    Mat V = ne > 0 ? null_space(calC) : Mat(n, 0);
    if (V.cols() != ne) {
        throw InvalidArgument("no well-defined relative degree");
    }
    Mat N(0, n);
    if (ne > 0) {
        const Mat Vt = V.transpose();
        const Mat Vdag = solve(Vt * V, Vt);
        const Mat proj = Mat::identity(n) - calB * solve(calC * calB, calC);
        N = Vdag * proj;
    }
    Mat U(n, n);
    U.set_block(0, 0, calC);
    if (ne > 0) {
        U.set_block(rr * mm, 0, N);
    }
    Mat Uinv;
    try {
        Uinv = inverse(U);
    } catch (const LinAlgError&) {
        throw InvalidArgument("coordinate transformation U is singular");
    }
    const Mat row = CA * Uinv;
    std::vector<Mat> R;
    for (std::size_t k = 0; k < rr; ++k) {
        R.push_back(row.block(0, k * mm, mm, mm));
    }
    Mat S = row.block(0, rr * mm, mm, ne);
    Mat Q_int(ne, ne);
    Mat P_int(ne, mm);
    if (ne > 0) {
        Q_int = N * A * V;
        P_int = N * Ab * inverse(Gamma);
        if (!is_hurwitz(Q_int)) {
            throw InvalidArgument("system not minimum phase (internal dynamics not Hurwitz)");
        }
    }
    BifPlant plant(std::move(R), std::move(S), std::move(Q_int), std::move(P_int), Gamma);
    return LinearBif{std::move(plant), r, std::move(U), std::move(V), std::move(N)};
}

} // namespace funnelkit
