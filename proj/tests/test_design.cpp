#include <gtest/gtest.h>

#include <cmath>

#include "funnelkit/design.hpp"
#include "support/expect_throw.hpp"
#include "support/oracles.hpp"

using namespace funnelkit;

namespace {

const FunnelParams kEx1Funnel{FunnelFamily::ExpBoundary, 0.05, 1.0, 2.0};
const FunnelParams kEx2Funnel{FunnelFamily::ExpBoundary, 0.05, 1.0, 3.0};

/// Independent p: solve P₄x = -P₂ᵀ with Eigen.
Vec eigen_p(const Mat& P) {
    const Eigen::MatrixXd E = oracle::to_eigen(P);
    const Eigen::Index n = E.rows();
    const Eigen::VectorXd x = E.bottomRightCorner(n - 1, n - 1).ldlt().solve(-E.block(1, 0, n - 1, 1));
    Vec p{1.0};
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        p.push_back(x(i));
    }
    return p;
}

DesignRequest ex2_request() {
    DesignRequest req;
    req.r = 3;
    req.m = 2;
    req.s0 = 7.0;
    req.rho = 1.1;
    req.gamma_tilde = 2.0 * Mat::identity(2);
    req.funnel = kEx2Funnel;
    req.gamma = Mat{{2, 0.2}, {0.2, 2}};
    return req;
}

} // namespace

TEST(HurwitzCoefficients, Examples) {
    EXPECT_EQ(hurwitz_coefficients(3, 1.0), (Vec{3, 3, 1}));
    EXPECT_EQ(hurwitz_coefficients(3, 7.0), (Vec{21, 147, 343}));
    EXPECT_EQ(hurwitz_coefficients(2, 2.5), (Vec{5, 6.25}));
    EXPECT_THROW_MSG(hurwitz_coefficients(3, 0.0), InvalidArgument, "root must lie in the open left half-plane");
    EXPECT_THROW_MSG(hurwitz_coefficients(3, -1.0), InvalidArgument, "open left half-plane");
}

TEST(CompanionMatrix, Examples) {
    EXPECT_EQ(companion_matrix(Vec{3, 3, 1}), (Mat{{-3, 1, 0}, {-3, 0, 1}, {-1, 0, 0}}));
    EXPECT_EQ(companion_matrix(Vec{15, 75, 125}), (Mat{{-15, 1, 0}, {-75, 0, 1}, {-125, 0, 0}}));
    EXPECT_EQ(companion_matrix(Vec{4}), (Mat{{-4}}));
}

TEST(CompanionMatrix, CharacteristicPolynomialIsTheBinomial) {
    for (int r = 1; r <= 6; ++r) {
        const Vec a = hurwitz_coefficients(r, 1.5);
        const Vec c = characteristic_polynomial(companion_matrix(a));
        for (int i = 1; i <= r; ++i) {
            EXPECT_NEAR(c[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(i - 1)], 1e-10 * a.back());
        }
    }
}

TEST(DeriveP, ExampleOneGolden) {
    const Mat PA{{1, -0.5, -1}, {-0.5, 1, -0.5}, {-1, -0.5, 4}};
    const PVector pv = derive_p(PA);
    EXPECT_EQ(pv.p[0], 1.0);
    EXPECT_NEAR(pv.p[1], 2.0 / 3.0, 1e-9);
    EXPECT_NEAR(pv.p[2], 1.0 / 3.0, 1e-9);
    EXPECT_NEAR(pv.p_tilde, 1.0 / 3.0, 1e-12);
}

TEST(DeriveP, ExampleTwoAgainstRoundedFractions) {
    const Mat P = solve_lyapunov(companion_matrix(Vec{21, 147, 343}), Mat::identity(3));
    const PVector pv = derive_p(P);
    EXPECT_NEAR(pv.p[1] / (1180.0 / 241.0), 1.0, 1e-2);
    EXPECT_NEAR(pv.p[2] / (1742.0 / 135.0), 1.0, 1e-2);
    const Vec ref = eigen_p(P);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(pv.p[i], ref[i], 1e-10 * std::abs(ref[i]));
    }
}

TEST(DeriveP, ScalarCase) {
    const PVector pv = derive_p(Mat{{2.5}});
    EXPECT_EQ(pv.p, Vec{1.0});
    EXPECT_EQ(pv.p_tilde, 2.5);
}

TEST(DeriveP, RejectsIndefinite) {
    EXPECT_THROW_MSG(derive_p(Mat{{1, 2}, {2, 1}}), InvalidArgument, "Lyapunov solution must be positive definite");
}

TEST(DeriveP, StructureAcrossGrid) {
    for (int r = 2; r <= 6; ++r) {
        for (double s0 : {0.5, 1.0, 3.0, 5.0, 7.0}) {
            const Mat P = solve_lyapunov(companion_matrix(hurwitz_coefficients(r, s0)), Mat::identity(r));
            const PVector pv = derive_p(P);
            EXPECT_EQ(pv.p[0], 1.0);
            EXPECT_GT(pv.p_tilde, 0.0);
            const Vec Pp = P * pv.p;
            const double tol = 1e-10 * std::max(1.0, P.max_abs());
            EXPECT_NEAR(Pp[0], pv.p_tilde, tol) << "r=" << r << " s0=" << s0;
            for (std::size_t i = 1; i < Pp.size(); ++i) {
                EXPECT_NEAR(Pp[i], 0.0, tol) << "r=" << r << " s0=" << s0;
            }
        }
    }
}

TEST(GainMismatchBound, HandValues) {
    EXPECT_NEAR(gain_mismatch_bound(1.5, 3), 1.5 / 21.5, 1e-15);
    EXPECT_NEAR(gain_mismatch_bound(1.5, 2), 0.1875, 1e-15);
    // (ρ-1)/(r-2) with ρ = 1.1 rounds to 0.1 + 9·2⁻⁵⁷·…; a few ulp of 0.1.
    EXPECT_NEAR(gain_mismatch_bound(1.1, 3), 0.1, 4 * std::numeric_limits<double>::epsilon() * 0.1);
    const double second = 1.1 / (4 * 1.21 * 2.1 - 1);
    EXPECT_NEAR(second, 0.12004, 1e-5);
}

TEST(GainMismatchBound, DecreasesInRTowardZero) {
    for (double rho : {1.1, 1.5, 2.0, 4.0}) {
        double prev = gain_mismatch_bound(rho, 2);
        for (int r = 3; r <= 8; ++r) {
            const double b = gain_mismatch_bound(rho, r);
            EXPECT_LT(b, prev);
            prev = b;
        }
        EXPECT_LT(gain_mismatch_bound(rho, 30), 1e-3);
    }
}

TEST(Design, ExampleOneCaseA) {
    DesignRequest req;
    req.r = 3;
    req.m = 1;
    req.s0 = 1.0;
    req.rho = 1.5;
    req.gamma_tilde = Mat::identity(1);
    req.funnel = kEx1Funnel;
    const auto [d, rep] = design(req);
    EXPECT_TRUE(rep.ok()) << rep.to_text();
    EXPECT_EQ(d.a, (Vec{3, 3, 1}));
    EXPECT_NEAR(d.P(2, 2), 4.0, 1e-12);
    EXPECT_NEAR(d.p[1], 2.0 / 3.0, 1e-12);
    EXPECT_EQ(rep.condition_status("A.4"), CheckStatus::Skipped);
}

TEST(Design, ExampleTwoReportsBoundary) {
    const auto [d, rep] = design(ex2_request());
    EXPECT_TRUE(rep.ok()) << rep.to_text();
    EXPECT_TRUE(rep.has_boundary());
    EXPECT_EQ(rep.condition_status("A.3"), CheckStatus::Pass);
    const ConditionCheck* g = rep.find("gain mismatch");
    ASSERT_NE(g, nullptr);
    EXPECT_EQ(g->status, CheckStatus::Boundary);
    EXPECT_NEAR(g->measured, 0.1, 1e-12);
    EXPECT_EQ(d.a, (Vec{21, 147, 343}));
}

TEST(Design, GrossMismatchFailsA4) {
    DesignRequest req = ex2_request();
    req.gamma = 10.0 * req.gamma_tilde;
    const auto [d, rep] = design(req);
    const ConditionCheck* g = rep.find("gain mismatch");
    ASSERT_NE(g, nullptr);
    EXPECT_EQ(g->status, CheckStatus::Fail);
    EXPECT_NEAR(g->measured, 9.0, 1e-12);
    EXPECT_FALSE(rep.ok());
}

TEST(Design, AsymmetricGammaTildeFailsA3) {
    auto [d, rep0] = design(ex2_request());
    d.gamma_tilde = Mat{{2, 0.5}, {0, 2}};
    const ValidationReport rep = validate_design(d, Mat{{2, 0.2}, {0.2, 2}});
    EXPECT_EQ(rep.condition_status("A.3"), CheckStatus::Fail);
    EXPECT_FALSE(rep.ok());
}

TEST(Design, RelativeDegreeTwo) {
    DesignRequest req;
    req.r = 2;
    req.m = 1;
    req.s0 = 1.0;
    req.rho = 1.5;
    req.gamma_tilde = Mat::identity(1);
    req.funnel = kEx1Funnel;
    req.gamma = Mat{{1.1}};
    const auto [d, rep] = design(req);
    EXPECT_TRUE(rep.ok()) << rep.to_text();
    ASSERT_EQ(d.p.size(), 2u);
    EXPECT_EQ(rep.find("gain mismatch")->bound, 0.1875);
}

TEST(Design, PreconditionErrors) {
    DesignRequest req = ex2_request();
    req.rho = 0.9;
    EXPECT_THROW_MSG(design(req), InvalidArgument, "(A.2) requires ρ > 1");
    req = ex2_request();
    req.r = 1;
    EXPECT_THROW_MSG(design(req), InvalidArgument, "relative degree");
    req = ex2_request();
    req.gamma_tilde = Mat{{1, 0}, {0, -1}};
    EXPECT_THROW_MSG(design(req), InvalidArgument, "gamma_tilde");
    req = ex2_request();
    req.s0 = -2.0;
    EXPECT_THROW_MSG(design(req), InvalidArgument, "open left half-plane");
}

TEST(Design, ExplicitCoefficientsAndCustomQ) {
    DesignRequest req = ex2_request();
    req.s0.reset();
    req.a = Vec{6, 11, 6}; // (s+1)(s+2)(s+3)
    req.Q = Mat::diagonal(Vec{1, 2, 3});
    const auto [d, rep] = design(req);
    EXPECT_EQ(rep.condition_status("A.1"), CheckStatus::Pass) << rep.to_text();
    EXPECT_LE(oracle::lyapunov_residual(d.A, d.P, d.Q), 1e-10);
    req.a = Vec{1, -1, 1};
    EXPECT_THROW_MSG(design(req), InvalidArgument, "Hurwitz");
}

TEST(Design, DeterministicBitwise) {
    const auto [d1, r1] = design(ex2_request());
    const auto [d2, r2] = design(ex2_request());
    EXPECT_EQ(d1.P, d2.P);
    EXPECT_EQ(d1.p, d2.p);
    EXPECT_EQ(d1.p_tilde, d2.p_tilde);
    EXPECT_EQ(r1.to_text(), r2.to_text());
}

TEST(Design, PhiOverPhi1IsRho) {
    const auto [d, rep] = design(ex2_request());
    for (int k = 0; k <= 100; ++k) {
        const double t = 0.1 * k;
        EXPECT_NEAR(d.phi.value(t) / d.phi1.value(t), d.rho, 1e-14);
    }
}
