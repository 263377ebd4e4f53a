#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "funnelkit/combinatorics.hpp"
#include "funnelkit/funnel.hpp"
#include "support/expect_throw.hpp"
#include "support/oracles.hpp"

using namespace funnelkit;

namespace {

const FunnelParams kEx1{FunnelFamily::ExpBoundary, 0.05, 1.0, 2.0};

std::vector<FunnelSpec> sample_specs() {
    return {FunnelSpec::make(kEx1),
            FunnelSpec::make({FunnelFamily::ExpBoundary, 0.05, 1.0, 3.0}),
            FunnelSpec::make({FunnelFamily::ExpBoundary, 0.05, 2.0, 1.0}),
            FunnelSpec::make({FunnelFamily::ExpBoundary, 1.0, 0.0, 1.0}),
            FunnelSpec::make({FunnelFamily::RationalPole, 0.1, 0.5, 1.0}),
            FunnelSpec::make(kEx1).scaled(1.0 / 1.5)};
}

} // namespace

TEST(Funnel, ExampleOneValues) {
    const FunnelSpec f = FunnelSpec::make(kEx1);
    EXPECT_NEAR(f.value(0.0), 1.0 / 1.05, 1e-15);
    EXPECT_NEAR(f.value(50.0), 20.0, 1e-12);
    EXPECT_NEAR(f.asymptotic_boundary(), 0.05, 0.0);
    EXPECT_NEAR(f.boundary(1.0), std::exp(-2.0) + 0.05, 1e-15);
}

TEST(Funnel, ConstantFunnel) {
    const FunnelSpec f = FunnelSpec::make({FunnelFamily::ExpBoundary, 1.0, 0.0, 1.0});
    for (double t : {0.0, 0.3, 7.0}) {
        const Vec d = f.derivs(t, 4);
        EXPECT_EQ(d[0], 1.0);
        for (int k = 1; k <= 4; ++k) {
            EXPECT_EQ(d[static_cast<std::size_t>(k)], 0.0);
        }
    }
}

TEST(Funnel, ParameterValidation) {
    EXPECT_THROW_MSG(FunnelSpec::make({FunnelFamily::ExpBoundary, -1.0, 1.0, 1.0}), InvalidArgument,
                     "boundary floor must be positive");
    EXPECT_THROW_MSG(FunnelSpec::make({FunnelFamily::ExpBoundary, 0.1, 1.0, 0.0}), InvalidArgument,
                     "decay rate must be positive");
    EXPECT_THROW_MSG(FunnelSpec::make({FunnelFamily::RationalPole, 0.1, 0.0, 1.0}), InvalidArgument, "c_amp");
    EXPECT_THROW_MSG(funnel_family_from_string("cosh"), InvalidArgument, "unknown funnel family");
    EXPECT_EQ(funnel_family_from_string(to_string(FunnelFamily::RationalPole)), FunnelFamily::RationalPole);
}

TEST(Funnel, OrderBudgetEnforced) {
    const FunnelSpec f = FunnelSpec::make(kEx1, 3);
    EXPECT_NO_THROW((void)f.derivs(1.0, 3));
    EXPECT_THROW_MSG((void)f.derivs(1.0, 4), InvalidArgument, "derivative order exceeds funnel smoothness budget");
}

TEST(Funnel, FirstDerivativeMatchesCentralDifference) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> T(0.05, 10.0);
    for (const auto& f : sample_specs()) {
        for (int k = 0; k < 100; ++k) {
            const double t = T(rng);
            const double fd = oracle::central_diff([&](double s) { return f.value(s); }, t, 1e-6);
            const double d1 = f.derivs(t, 1)[1];
            EXPECT_NEAR(d1, fd, 1e-6 * std::max(1.0, std::abs(d1))) << "t=" << t;
        }
    }
}

TEST(Funnel, HigherDerivativesMatchDifferencesOfLowerOnes) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> T(0.05, 6.0);
    for (const auto& f : sample_specs()) {
        for (int trial = 0; trial < 30; ++trial) {
            const double t = T(rng);
            const Vec d = f.derivs(t, 6);
            for (std::size_t k = 1; k <= 6; ++k) {
                const double fd = oracle::central_diff([&](double s) { return f.derivs(s, 6)[k - 1]; }, t, 1e-5);
                EXPECT_NEAR(d[k], fd, 1e-5 * std::max(1.0, std::abs(d[k]))) << "k=" << k << " t=" << t;
            }
        }
    }
}

TEST(Funnel, ReciprocalLeibnizIdentity) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> T(0.01, 10.0);
    for (const auto& f : sample_specs()) {
        const int K = f.max_order();
        for (int trial = 0; trial < 100; ++trial) {
            const double t = T(rng);
            const Vec phi = f.derivs(t, K);
            const Vec psi = f.boundary_derivs(t, K);
            EXPECT_NEAR(phi[0] * psi[0] / f.scale(), 1.0, 1e-12);
            for (int k = 1; k <= K; ++k) {
                double s = 0.0;
                double mag = 0.0;
                for (int l = 0; l <= k; ++l) {
                    const double term = binomial(k, l) * phi[static_cast<std::size_t>(l)] * psi[static_cast<std::size_t>(k - l)];
                    s += term;
                    mag += std::abs(term);
                }
                EXPECT_LE(std::abs(s), 1e-10 * std::max(1.0, mag)) << "k=" << k << " t=" << t;
            }
        }
    }
}

TEST(Funnel, ScaledSharesShapeExactly) {
    const FunnelSpec phi = FunnelSpec::make(kEx1);
    const FunnelSpec phi1 = phi.scaled(1.0 / 1.5);
    for (int k = 0; k <= 200; ++k) {
        const double t = 0.05 * k;
        EXPECT_NEAR(phi.value(t) / phi1.value(t), 1.5, 1e-15 * 1.5 * 4);
    }
}

TEST(Funnel, RationalPoleVanishesAtZero) {
    const FunnelSpec f = FunnelSpec::make({FunnelFamily::RationalPole, 0.1, 0.5, 1.0});
    EXPECT_EQ(f.value(0.0), 0.0);
    EXPECT_TRUE(std::isinf(f.boundary(0.0)));
    EXPECT_NEAR(f.derivs(0.0, 1)[1], 2.0, 1e-15);
    EXPECT_NEAR(f.asymptotic_boundary(), 0.1, 1e-15);
}

TEST(ControllerFunnel, SampledConstantForExampleTwo) {
    const FunnelSpec f = FunnelSpec::make({FunnelFamily::ExpBoundary, 0.05, 2.0, 1.0});
    const double c = validate_controller_funnel(f, 10.0);
    EXPECT_GT(c, 0.0);
    EXPECT_TRUE(std::isfinite(c));
    for (int k = 0; k <= 1000; ++k) {
        const Vec d = f.derivs(0.01 * k, 1);
        EXPECT_LE(std::abs(d[1]), c * (1.0 + d[0]) * (1.0 + 1e-12));
    }
}
