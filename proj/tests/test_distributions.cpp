#include <gtest/gtest.h>

#include "intervalrisk/distributions.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace intervalrisk;

TEST(TDist, CenterAndKnownQuantiles) {
    EXPECT_DOUBLE_EQ(t_cdf(0.0, 5), 0.5);
    EXPECT_LT(two_sided_t_p(11.890, 524), 0.001);
    EXPECT_NEAR(two_sided_t_p(1.9647, 524), 0.05, 5e-4);
}

TEST(TDist, MatchesQuadrature) {
    for (long df : {3L, 10L, 50L, 413L, 524L})
        for (double t : {0.1, 0.7, 1.5, 2.2, 3.1, 4.0}) {
            EXPECT_NEAR(two_sided_t_p(t, df), oracle::t_two_sided_quadrature(t, static_cast<double>(df)), 1e-7)
                << "t=" << t << " df=" << df;
        }
}

TEST(TDist, SymmetryAndMonotonicity) {
    for (long df : {1L, 4L, 30L, 500L}) {
        double prev = 1.0;
        for (double t = 0.0; t < 8.0; t += 0.25) {
            EXPECT_NEAR(t_cdf(t, df) + t_cdf(-t, df), 1.0, 1e-14);
            EXPECT_DOUBLE_EQ(two_sided_t_p(t, df), two_sided_t_p(-t, df));
            const double p = two_sided_t_p(t, df);
            EXPECT_LE(p, prev);
            prev = p;
        }
    }
}

TEST(TDist, LargeDfApproachesNormal) {
    for (double t : {0.5, 1.0, 1.96, 3.0}) {
        const double normal = std::erfc(t / std::sqrt(2.0));
        EXPECT_NEAR(two_sided_t_p(t, 1'000'000), normal, 1e-5);
    }
}

TEST(Chi2, KnownValuesAndQuadrature) {
    EXPECT_NEAR(chi2_sf(3.841, 1), 0.05, 1e-3);
    EXPECT_DOUBLE_EQ(chi2_sf(0.0, 3), 1.0);
    for (long df : {2L, 4L, 6L, 8L})
        for (double x : {0.5, 2.0, 6.0, 12.0})
            EXPECT_NEAR(chi2_sf(x, df), oracle::chi2_sf_quadrature(x, static_cast<double>(df)), 1e-7);
}

TEST(Distributions, ArgumentErrors) {
    EXPECT_ERROR_CODE(t_cdf(1.0, 0), ErrorCode::InvalidDF);
    EXPECT_ERROR_CODE(two_sided_t_p(1.0, -2), ErrorCode::InvalidDF);
    EXPECT_ERROR_CODE(chi2_sf(1.0, 0), ErrorCode::InvalidDF);
    EXPECT_ERROR_CODE(chi2_sf(-0.1, 1), ErrorCode::NegativeStat);
}
