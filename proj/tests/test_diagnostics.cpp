#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "funnelkit/diagnostics.hpp"
#include "funnelkit/scenario.hpp"
#include "support/designs.hpp"
#include "support/expect_throw.hpp"

using namespace funnelkit;

namespace {

Eigen::MatrixXd eigen_kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
        }
    }
    return K;
}

Eigen::MatrixXd eigen_inv_sqrt(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    return es.operatorInverseSqrt();
}

} // namespace

TEST(KroneckerKit, MatchesIndependentLift) {
    const DesignParams d = designs::example2();
    const Mat gamma{{2, 0.2}, {0.2, 2}};
    const KroneckerKit k = KroneckerKit::build(d, gamma);
    const Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);
    EXPECT_LT((oracle::to_eigen(k.A_hat) - eigen_kron(oracle::to_eigen(d.A), I2)).norm(), 1e-15);
    EXPECT_LT((oracle::to_eigen(k.P_hat) - eigen_kron(oracle::to_eigen(d.P), I2)).norm(), 1e-15);
    EXPECT_LT((oracle::to_eigen(k.Q_hat) - eigen_kron(oracle::to_eigen(d.Q), I2)).norm(), 1e-15);
    ASSERT_TRUE(k.P_hat1 && k.Q_hat1 && k.M);
    const Eigen::MatrixXd M = oracle::to_eigen(gamma) * oracle::to_eigen(d.gamma_tilde).inverse();
    EXPECT_LT((oracle::to_eigen(*k.M) - M).norm(), 1e-15);
    const Eigen::MatrixXd T = eigen_kron(Eigen::MatrixXd::Identity(3, 3), eigen_inv_sqrt(M));
    const Eigen::MatrixXd P1 = T * eigen_kron(oracle::to_eigen(d.P), I2) * T;
    EXPECT_LT((oracle::to_eigen(*k.P_hat1) - P1).norm(), 1e-12 * P1.norm());
    EXPECT_EQ(k.P_bar.rows(), 6u);
    EXPECT_EQ(k.P_bar.cols(), 2u);
}

TEST(KronIdentities, ExampleOneWithoutGamma) {
    const KronIdentityReport rep = kron_identities(designs::example1(1.0));
    EXPECT_LT(rep.lyapunov_residual, 1e-10);
    EXPECT_LT(rep.pbar_residual, 1e-10);
    EXPECT_FALSE(rep.gamma_supplied);
    EXPECT_FALSE(rep.a3_holds);
    EXPECT_NE(rep.message.find("Γ not supplied"), std::string::npos);
}

TEST(KronIdentities, ExampleTwoLiftIsPositiveDefinite) {
    const KronIdentityReport rep = kron_identities(designs::example2(), Mat{{2, 0.2}, {0.2, 2}});
    EXPECT_LT(rep.lyapunov_residual, 1e-10);
    EXPECT_LT(rep.pbar_residual, 1e-10);
    EXPECT_TRUE(rep.a3_holds);
    EXPECT_LT(rep.lyapunov1_residual, 1e-10);
    EXPECT_LT(rep.pbar1_residual, 1e-10);
    EXPECT_TRUE(rep.q1_spd);
    EXPECT_GT(rep.q1_min_eig, 0.0);
}

TEST(KronIdentities, RandomDesigns) {
    std::mt19937_64 rng(103);
    for (int trial = 0; trial < 50; ++trial) {
        const auto rd = designs::random_design(rng);
        ASSERT_TRUE(rd.report.ok()) << rd.report.to_text();
        const KronIdentityReport rep = kron_identities(rd.d, rd.gamma);
        EXPECT_LT(rep.lyapunov_residual, 1e-12 * rep.scale) << "trial " << trial;
        EXPECT_LT(rep.pbar_residual, 1e-12 * rep.scale) << "trial " << trial;
        ASSERT_TRUE(rep.a3_holds);
        EXPECT_TRUE(rep.q1_spd) << "trial " << trial;
        EXPECT_LT(rep.lyapunov1_residual, 1e-12 * rep.scale) << "trial " << trial;
    }
}

TEST(KronIdentities, RefusesLiftWhenGainRatioIsNotSymmetric) {
    const KronIdentityReport rep = kron_identities(designs::example2(), Mat{{2, 1}, {0, 2}});
    EXPECT_TRUE(rep.gamma_supplied);
    EXPECT_FALSE(rep.a3_holds);
    EXPECT_NE(rep.message.find("(A.3) violated"), std::string::npos);
    EXPECT_NE(rep.message.find("refused"), std::string::npos);
    EXPECT_FALSE(KroneckerKit::build(designs::example2(), Mat{{2, 1}, {0, 2}}).P_hat1.has_value());
}

TEST(ErrorCoordinates, ExampleTwoProofQuantities) {
    const Scenario sc = example2_scenario();
    const SimResult sim = run(sc);
    ASSERT_TRUE(sim.completed);
    const ErrorCoordinates ec = error_coordinates(sc, sim);
    ASSERT_EQ(ec.t.size(), sim.rows.size());
    for (std::size_t s = 0; s < ec.t.size(); ++s) {
        EXPECT_LT(ec.identity_residual[s], 1e-8);
        ASSERT_TRUE(std::isfinite(ec.V[s]));
        EXPECT_GE(ec.V[s], ec.V_lower[s] - 1e-12 * std::max(1.0, ec.V[s]));
        EXPECT_GE(ec.V_lower[s], 0.0);
    }
    ASSERT_EQ(ec.kappa.size(), 2u);
    EXPECT_GT(ec.kappa[0], 0.0);
    EXPECT_GT(ec.kappa[1], 0.0);
    const MarginReport mr = margin_report(ec, sim);
    EXPECT_TRUE(mr.all_margins_positive);
    EXPECT_EQ(mr.sup_h.size(), 2u);
    EXPECT_EQ(mr.sup_h[0], sim.summary.at("sup_h_1"));
    EXPECT_GE(mr.min_V_gap, -1e-10);
    EXPECT_LT(mr.max_identity_residual, 1e-8);
}

TEST(ErrorCoordinates, OpenLoopFirstCoordinateIsTheFirstError) {
    Scenario sc = example1_scenario(3.0);
    sc.t1 = 4.0;
    const SimResult sim = run(sc);
    const ErrorCoordinates ec = error_coordinates(sc, sim);
    for (double v : ec.wbar_residual) {
        EXPECT_EQ(v, 0.0);
    }
    for (std::size_t s = 0; s < ec.t.size(); ++s) {
        const double e11 = sim.rows[s][sim.column("y_1")] - sim.rows[s][sim.column("z_1_1_1")];
        EXPECT_NEAR(ec.x_norm[s][0], std::abs(e11), 1e-15);
    }
}

TEST(ErrorCoordinates, EquilibriumGivesZeroCoordinates) {
    Scenario sc = example1_scenario(2.0);
    sc.y_signal = VectorSignal::zero(1);
    sc.u_signal = VectorSignal::zero(1);
    sc.t1 = 1.0;
    const SimResult sim = run(sc);
    const ErrorCoordinates ec = error_coordinates(sc, sim);
    for (const Vec& w : ec.w) {
        for (double v : w) {
            EXPECT_EQ(v, 0.0);
        }
    }
    for (double v : ec.V) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(ErrorCoordinates, NeedsWhiteBoxPlantStates) {
    const Scenario sc = example2_scenario();
    Scenario shortened = sc;
    shortened.t1 = 0.1;
    SimResult sim = run(shortened);
    sim.plant_states.clear();
    EXPECT_THROW_MSG(error_coordinates(shortened, sim), InvalidArgument,
                     "white-box diagnostics require integrator-chain states");
    sim.cascade_states.clear();
    EXPECT_THROW_MSG(error_coordinates(shortened, sim), InvalidArgument, "no cascade states");
}
