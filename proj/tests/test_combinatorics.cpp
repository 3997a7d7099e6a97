#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tilre/combinatorics.hpp"

using namespace tilre;

TEST(Totient, SmallValues) {
    EXPECT_EQ(totient(1), 1);
    EXPECT_EQ(totient(12), 4);
    EXPECT_EQ(totient(7), 6);
    EXPECT_THROW(totient(0), DomainError);
}

TEST(Totient, MatchesCoprimeCount) {
    for (std::uint64_t k = 1; k <= 300; ++k) EXPECT_EQ(totient(k), oracle::coprime_count(k)) << k;
}

TEST(Factorize, ProductRestoresInput) {
    for (std::uint64_t k = 1; k <= 2000; ++k) {
        std::uint64_t prod = 1;
        for (auto [p, e] : factorize(k))
            for (unsigned i = 0; i < e; ++i) prod *= p;
        EXPECT_EQ(prod, k);
    }
}

TEST(Necklace, Examples) {
    for (std::uint64_t q = 2; q <= 5; ++q) EXPECT_EQ(necklace_count(1, q), q);
    EXPECT_EQ(necklace_count(4, 2), 6);
    EXPECT_EQ(necklace_count(6, 2), 14);
    EXPECT_EQ(necklace_count(7, 2), 20);
    EXPECT_THROW(necklace_count(0, 2), DomainError);
    EXPECT_THROW(necklace_count(3, 1), DomainError);
}

TEST(Necklace, MatchesOrbitEnumeration) {
    for (int q : {2, 3})
        for (int n = 1; n <= (q == 2 ? 12 : 9); ++n)
            EXPECT_EQ(necklace_count(n, q), oracle::orbit_count(n, q)) << "n=" << n << " q=" << q;
}

TEST(Necklace, AtLeastFullDimensionOverN) {
    for (std::uint64_t q = 2; q <= 4; ++q)
        for (std::uint64_t n = 1; n <= 40; ++n) EXPECT_GE(necklace_count(n, q) * n, big_pow(q, n));
}

TEST(Binomial, MatchesPascal) {
    const auto t = oracle::pascal(120);
    for (int n = 0; n <= 120; ++n)
        for (int k = 0; k <= n; ++k) ASSERT_EQ(binomial(n, k), t[n][k]);
    EXPECT_EQ(binomial(5, 7), 0);
}

TEST(Binomial, LogMatchesExact) {
    for (std::uint64_t n : {10u, 97u, 500u, 2000u})
        for (std::uint64_t k : {0u, 1u, 3u, 50u})
            if (k <= n) {
                const double exact = log_big(binomial(n, k));
                EXPECT_NEAR(log_binomial(n, k), exact, 1e-12 * std::max(1.0, exact));
            }
}

TEST(Hpoly, Examples) {
    const auto t = oracle::pascal(100);
    for (std::uint64_t v = 1; v <= 10; ++v) EXPECT_EQ(hpoly_dim(0, v), 1);
    EXPECT_EQ(hpoly_dim(3, 2), t[4][3]);
    EXPECT_EQ(hpoly_dim(3, 2), 4);
    EXPECT_EQ(hpoly_dim(2, 96), t[97][2]);
    EXPECT_EQ(hpoly_dim(2, 96), 4656);
    EXPECT_THROW(hpoly_dim(3, 0), DomainError);
}

TEST(Hpoly, MatchesExponentVectorCount) {
    for (int n = 0; n <= 6; ++n)
        for (int v = 1; v <= 6; ++v) EXPECT_EQ(hpoly_dim(n, v), oracle::exponent_vectors(n, v)) << n << " " << v;
}

TEST(MpsBound, Examples) {
    const auto t = oracle::pascal(20);
    for (std::uint64_t n = 1; n <= 15; ++n) EXPECT_EQ(mps_dim_bound(n, 2, 1), t[n + 1][n]);
    EXPECT_EQ(mps_dim_bound(1, 3, 2), 12);
    EXPECT_EQ(mps_dim_bound(4, 2, 2), 330);
    EXPECT_EQ(mps_dim_bound(4, 2, 2), t[11][4]);
}

TEST(BlockSplit, RemainderConvention) {
    for (std::uint64_t d = 0; d <= 4; ++d)
        for (std::uint64_t n = 2 * d + 2; n <= 60; ++n) {
            const BlockSplit s = block_split(n, d);
            EXPECT_EQ(s.block, 2 * d + 1);
            EXPECT_EQ(s.m * s.block + s.r, n);
            EXPECT_GE(s.r, 1u);
            EXPECT_LE(s.r, 2 * d + 1);
            EXPECT_GE(s.m, 1u);
        }
    const BlockSplit six = block_split(6, 1);
    EXPECT_EQ(six.m, 1u);
    EXPECT_EQ(six.r, 3u);
    EXPECT_THROW(block_split(3, 1), DomainError);
}

TEST(SreBound, Examples) {
    const auto t = oracle::pascal(100);
    EXPECT_EQ(sre_dim_bound(7, 1, 2), 96 * t[97][2]);
    EXPECT_EQ(sre_dim_bound(7, 1, 2), 446976);
    EXPECT_EQ(sre_dim_bound(6, 1, 2), 9216);
    for (std::uint64_t d = 1; d <= 3; ++d)
        for (std::uint64_t q = 2; q <= 3; ++q) {
            const std::uint64_t b = block_variables(d, q);
            EXPECT_EQ(b, 2 * d * (2 * d + 1) * q * q * q * q);
            EXPECT_EQ(sre_dim_bound(2 * d + 2, d, q), BigCount(b) * hpoly_dim(1, b));
        }
    EXPECT_THROW(sre_dim_bound(5, 2, 2), DomainError);
    EXPECT_THROW(sre_dim_bound(4, 0, 2), DomainError);
}

TEST(SreBound, LogTwin) {
    for (std::uint64_t n : {8u, 60u, 200u, 512u}) {
        const LogBound lb = sre_dim_bound_log(n, 2, 2);
        ASSERT_TRUE(lb.exact_flag);
        EXPECT_NEAR(lb.log_value, log_big(*lb.exact), 1e-12 * lb.log_value);
    }
    const LogBound big = sre_dim_bound_log(100000, 3, 2);
    EXPECT_FALSE(big.exact_flag);
    EXPECT_TRUE(std::isfinite(big.log_value));
}

TEST(SreBound, EvaluationOrderIndependent) {
    // hpoly via the symmetric binomial and via a product of ratios
    for (std::uint64_t n = 6; n <= 40; ++n) {
        const BlockSplit s = block_split(n, 1);
        const std::uint64_t b = block_variables(1, 2);
        BigCount prod = 1;
        for (std::uint64_t i = 1; i <= s.m; ++i) prod = prod * (b - 1 + i) / i;
        EXPECT_EQ(sre_dim_bound(n, 1, 2), BigCount(b) * prod);
        EXPECT_EQ(hpoly_dim(s.m, b), binomial(b - 1 + s.m, b - 1));
    }
}

TEST(OverlapRatio, Example) {
    const OverlapRatio r = overlap_bound_exact(7, 1, 2);
    EXPECT_EQ(r.numerator, 446976);
    EXPECT_EQ(r.denominator, 20);
    EXPECT_EQ(r.clamped(), 1.0);
    const OverlapRatio small = overlap_bound_exact(200, 1, 2);
    EXPECT_LT(small.clamped(), 1.0);
    EXPECT_NEAR(std::log(small.clamped()), small.log_value(), 1e-9);
}

TEST(OverlapLog, DominatesRelaxedRatio) {
    const double gamma = gamma_exponent(2, 3);
    for (std::uint64_t d = 1; d <= 3; ++d)
        for (std::uint64_t n = 2 * d + 2; n <= 60; ++n) {
            const BigCount num = BigCount(n) * sre_dim_bound(n, d, 2);
            const double exact = log_big(num) - static_cast<double>(n) * std::log(2.0);
            EXPECT_GE(overlap_bound_log(n, d, 2, gamma).log_value, exact) << n << " " << d;
        }
}

TEST(OverlapLog, MonotoneInDepthAndLargeN) {
    const double gamma = gamma_exponent(2, 5);
    for (std::uint64_t n : {20u, 100u, 1000u, 1000000u}) {
        double prev = -INFINITY;
        for (std::uint64_t d = 1; d <= 5 && n >= 2 * d + 2; ++d) {
            const double v = overlap_bound_log(n, d, 2, gamma).log_value;
            EXPECT_TRUE(std::isfinite(v));
            EXPECT_GE(v, prev);
            prev = v;
        }
    }
    EXPECT_THROW(overlap_bound_log(1, 1, 2, gamma), DomainError);
    EXPECT_THROW(overlap_bound_log(10, 1, 2, 1.0), DomainError);
    EXPECT_THROW(overlap_bound_log(10, 1, 2, 2.0), DomainError);
}

TEST(Gamma, SatisfiesInequalityAndIsMaximal) {
    for (std::uint64_t q : {2u, 3u})
        for (std::uint64_t dmax : {1u, 3u, 8u}) {
            const double g = gamma_exponent(q, dmax);
            EXPECT_GT(g, 1.0);
            EXPECT_LT(g, 2.0);
            for (std::uint64_t d = 1; d <= dmax; ++d) {
                const BigCount a = BigCount(block_variables(d, q)) - 1;
                EXPECT_GE(log_big(BigCount(2 * d + 1) * a), g * log_big(a));
            }
            EXPECT_FALSE(gamma_inequality_holds(q, dmax, g + 1e-8));
        }
}

TEST(Gamma, NonincreasingInDmax) {
    double prev = 2.0;
    for (std::uint64_t dmax = 1; dmax <= 20; ++dmax) {
        const double g = gamma_exponent(2, dmax);
        EXPECT_LE(g, prev + 1e-12);
        prev = g;
    }
}

TEST(MinDepth, NondecreasingInN) {
    std::uint64_t prev = 0;
    for (int e = 6; e <= 14; ++e) {
        const std::uint64_t d = min_depth_for_overlap(std::uint64_t{1} << e, 2, 0.5);
        EXPECT_GE(d, prev);
        prev = d;
    }
}

TEST(MinDepth, IsSmallestFeasibleDepth) {
    for (std::uint64_t n : {256u, 4096u, 65536u}) {
        const double gamma = gamma_exponent(2, default_depth_ceiling(n));
        const std::uint64_t d = min_depth_for_overlap(n, 2, 0.5);
        const double lhs = std::log(0.5) + n * std::log(2.0);
        EXPECT_LT(lhs, implicit_bound_log(n, d, 2, gamma));
        if (d > 1) {
            EXPECT_GE(lhs, implicit_bound_log(n, d - 1, 2, gamma));
        }
    }
}

TEST(MinDepth, SquareRootScalingRatioStaysBounded) {
    std::vector<double> ratio;
    for (int e = 8; e <= 16; ++e) {
        const double n = std::ldexp(1.0, e);
        const double d = static_cast<double>(min_depth_for_overlap(static_cast<std::uint64_t>(n), 2, 0.5));
        ratio.push_back(d * d / (n / std::log(n)));
    }
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    EXPECT_LT(*hi / *lo, 4.0);
}

TEST(MinDepth, EtaDependenceIsMild) {
    for (int e = 6; e <= 14; ++e) {
        const std::uint64_t n = std::uint64_t{1} << e;
        const auto near_one = min_depth_for_overlap(n, 2, 1.0);
        const auto tiny = min_depth_for_overlap(n, 2, 1.0 / n);
        EXPECT_LE(near_one, tiny);
        EXPECT_LE(tiny - near_one, static_cast<std::uint64_t>(std::ceil(std::log(n) * std::log(n))));
    }
}

TEST(MinDepth, Errors) {
    EXPECT_THROW(min_depth_for_overlap(100, 2, 0.0), DomainError);
    EXPECT_THROW(min_depth_for_overlap(100, 2, 1.5), DomainError);
    EXPECT_THROW(min_depth_for_overlap(100, 1, 0.5), DomainError);
    EXPECT_THROW(min_depth_for_overlap(1 << 16, 2, 0.5, 3), CeilingReached);
}

TEST(DepthModel, MonotoneAndValidated) {
    DepthModel m;
    for (std::uint64_t n : {16u, 256u}) {
        std::uint64_t prev = 0;
        for (double tau = 0.01; tau < 50; tau *= 1.3) {
            EXPECT_GE(m.depth(tau, n, 0.5), prev);
            prev = m.depth(tau, n, 0.5);
            EXPECT_GE(m.depth(tau, 2 * n, 0.5), m.depth(tau, n, 0.5));
        }
    }
    DepthModel bad;
    bad.c = 0;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = {};
    bad.p = 0.5;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = {};
    bad.epsilon = 1.5;
    EXPECT_THROW(bad.validate(), DomainError);
}

TEST(MinTime, ReachesTargetAndIsTight) {
    DepthModel m;
    for (std::uint64_t n : {256u, 4096u}) {
        const TimeEstimate t = min_time_estimate(n, 2, 0.5, m);
        EXPECT_EQ(t.target_depth, min_depth_for_overlap(n, 2, 0.5));
        EXPECT_GE(m.depth(t.tau, n, t.epsilon), t.target_depth);
        EXPECT_LT(m.depth(t.tau * (1 - 1e-9), n, t.epsilon), t.target_depth);
        EXPECT_NEAR(t.epsilon, std::sqrt(0.5), 1e-15);
    }
}

TEST(MinTime, DoublingCRoughlyHalvesTau) {
    DepthModel one, two;
    two.c = 2.0;
    const std::uint64_t n = 65536;
    const double t1 = min_time_estimate(n, 2, 0.5, one).tau;
    const double t2 = min_time_estimate(n, 2, 0.5, two).tau;
    EXPECT_GT(t2 / t1, 0.4);
    EXPECT_LT(t2 / t1, 0.6);
}

TEST(MinTime, NondecreasingWheneverTargetDepthGrows) {
    TimeEstimate prev{};
    for (int e = 8; e <= 16; ++e) {
        const TimeEstimate t = min_time_estimate(std::uint64_t{1} << e, 2, 0.5, DepthModel{});
        if (t.target_depth > prev.target_depth) {
            EXPECT_GE(t.tau, prev.tau) << e;
        }
        prev = t;
    }
}

TEST(MinTime, DipsOnTargetDepthPlateau) {
    // n = 256 and 512 share target depth 2; the model depth grows with n at
    // fixed tau, so the larger ring needs a shorter time.
    const TimeEstimate a = min_time_estimate(256, 2, 0.5, DepthModel{});
    const TimeEstimate b = min_time_estimate(512, 2, 0.5, DepthModel{});
    ASSERT_EQ(a.target_depth, b.target_depth);
    EXPECT_LT(b.tau, a.tau);
}
