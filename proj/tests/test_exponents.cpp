#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "henon/exponents.hpp"
#include "oracle.hpp"

using namespace henon;

TEST(Sobolev, ClosedForm) {
    EXPECT_DOUBLE_EQ(p_sobolev(3, 0.0).value(), 5.0);
    EXPECT_NEAR(p_sobolev(20, 1.5).value(), 25.0 / 18.0, 1e-15);
    EXPECT_TRUE(p_sobolev(2, 1.0).is_infinite());
    EXPECT_TRUE(p_sobolev(1, 0.0).is_infinite());
    EXPECT_THROW(p_sobolev(5, -2.0), DomainError);
}

TEST(JosephLundgren, KnownValues) {
    EXPECT_NEAR(p_joseph_lundgren(20, 1.5).value(), 3.55, 0.01);
    EXPECT_NEAR(p_joseph_lundgren(40, 1.5).value(), 1.39, 0.01);
    EXPECT_NEAR(p_joseph_lundgren(10, -0.6).value(), 2.68, 0.01);
    // Quoted with one decimal.
    EXPECT_DOUBLE_EQ(std::round(p_joseph_lundgren(8, -0.6).value() * 10.0) / 10.0, 11.4);
    EXPECT_TRUE(p_joseph_lundgren(12, 1.0).is_infinite());
    EXPECT_TRUE(p_joseph_lundgren(10, 0.0).is_infinite());
    EXPECT_THROW(p_joseph_lundgren(2, 0.0), DomainError);
}

TEST(JosephLundgren, FormsAgreeOnGrid) {
    int n = 0;
    for (int N = 12; N <= 60; ++N)
        for (int i = 0; i <= 22; ++i) {
            const double s = -1.5 + 0.25 * i;
            const auto r = p_joseph_lundgren_forms(N, s);
            if (!(N > 10 + 4 * s)) {
                EXPECT_TRUE(r.value.is_infinite());
                continue;
            }
            EXPECT_LE(r.relative_disagreement(), 1e-10) << N << " " << s;
            ++n;
        }
    EXPECT_GT(n, 500);
}

TEST(JosephLundgren, IsTheDiscriminantRoot) {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> dN(12, 80);
    std::uniform_real_distribution<double> ds(-1.9, 4.0);
    for (int k = 0; k < 200; ++k) {
        const int N = dN(rng);
        const double s = ds(rng);
        if (!(N > 10 + 4 * s + 0.5)) continue;
        const double got = p_joseph_lundgren(N, s).value();
        EXPECT_NEAR(got, oracle::p_jl_root(N, s), 1e-9 * got) << N << " " << s;
    }
}

TEST(JosephLundgren, ReducesAtZeroWeight) {
    for (int N = 11; N <= 40; ++N)
        EXPECT_NEAR(p_joseph_lundgren(N, 0.0).value(), 1.0 + 4.0 / (N - 4.0 - 2.0 * std::sqrt(N - 1.0)), 1e-12);
}

TEST(Lepin, KnownValues) {
    EXPECT_NEAR(p_lepin(40, 1.5).value(), 6.25, 1e-12);
    EXPECT_NEAR(p_lepin(10, -0.6).value(), 5.55, 0.01);
    EXPECT_NEAR(p_lepin(16, 0.0).value(), 2.0, 1e-14);
    EXPECT_TRUE(p_lepin(20, 1.5).is_infinite());
    EXPECT_TRUE(p_lepin(8, -0.6).is_infinite());
    EXPECT_THROW(p_lepin(20, -2.5), DomainError);
    EXPECT_THROW(p_lepin(20, 1.0, 2), DomainError);
    EXPECT_THROW(p_lepin(20, 1.0, 0), DomainError);
}

TEST(Lepin, ZeroWeightIsClassical) {
    for (int N = 11; N <= 60; ++N) EXPECT_NEAR(p_lepin(N, 0.0).value(), 1.0 + 6.0 / (N - 10.0), 1e-12);
    EXPECT_TRUE(p_lepin(10, 0.0).is_infinite());
}

// p_L is where the gap A - sqrt(A^2 - 4B) equals 8 (sigma >= 0) or 4 (sigma < 0),
// i.e. B = 4A - 16 or B = 2A - 4.
TEST(Lepin, MatchesGapThreshold) {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> dN(20, 200);
    std::uniform_real_distribution<double> ds(-1.5, 1.9);
    int checked = 0;
    for (int k = 0; k < 300; ++k) {
        const int N = dN(rng);
        const double s = ds(rng);
        const ExtReal pl = p_lepin(N, s);
        if (pl.is_infinite()) continue;
        const double m = s >= 0.0 ? 4.0 : 2.0, c = s >= 0.0 ? 16.0 : 4.0;
        auto h = [&](double q) {
            const double p = 1.0 + 1.0 / q;
            return oracle::coef_B(N, s, p) - m * oracle::coef_A(N, s, p) + c;
        };
        const double pjl = oracle::p_jl_root(N, s);
        const double q = oracle::bisect(h, 1e-9, 1.0 / (pjl - 1.0));
        EXPECT_NEAR(pl.value(), 1.0 + 1.0 / q, 1e-8 * pl.value()) << N << " " << s;
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(Lepin, OrderingOfExponents) {
    for (int N = 12; N <= 80; ++N)
        for (double s : {-1.2, -0.6, -0.2, 0.3, 0.8, 1.5}) {
            const ExtReal pl = p_lepin(N, s);
            if (pl.is_infinite() || !(N > 10 + 4 * s)) continue;
            EXPECT_LT(p_sobolev(N, s), p_joseph_lundgren(N, s));
            EXPECT_LT(p_joseph_lundgren(N, s), pl) << N << " " << s;
        }
}

TEST(Lepin, HigherLevelsBelowSobolev) {
    for (int N = 5; N <= 60; N += 5)
        for (double s : {2.0, 3.0, 6.0, 10.0}) {
            EXPECT_LT(p_lepin(N, s), p_sobolev(N, s));
            const double d = s - 2.0;
            if (d > 0.0 && s * (N - 2.0) != 2.0 * (N - 10.0)) {
                EXPECT_NEAR(p_lepin(N, s).value(), d * (N + s - 4.0) / (s * (N - 2.0) - 2.0 * (N - 10.0)), 1e-12);
            }
        }
    EXPECT_TRUE(p_lepin(40, 6.0, 2).is_finite());
}

TEST(ExtendedReal, Ordering) {
    const ExtReal inf = ExtReal::infinity(), one = ExtReal::finite(1.0);
    EXPECT_TRUE(one < inf);
    EXPECT_FALSE(inf < inf);
    EXPECT_TRUE(inf == inf);
    EXPECT_TRUE(ExtReal::finite(2.0) > 1.5);
    EXPECT_EQ(inf.str(), "inf");
    EXPECT_THROW(inf.value(), DomainError);
    EXPECT_THROW(ExtReal::finite(NAN), DomainError);
}

TEST(Params, Validation) {
    EXPECT_THROW(RegimeParams(2, 0.0, 3.0), DomainError);
    EXPECT_THROW(RegimeParams(5, -2.0, 3.0), DomainError);
    EXPECT_THROW(RegimeParams(5, 0.0, 1.0), DomainError);
    EXPECT_TRUE(RegimeParams(20, 1.5, 10).supercritical_regime());
    EXPECT_FALSE(RegimeParams(20, 1.5, 3).supercritical_regime());
    EXPECT_FALSE(RegimeParams(12, 1.0, 30).supercritical_regime());
}

TEST(Constants, KnownValues) {
    const DerivedConstants c = profile_constants(RegimeParams(20, 1.5, 10));
    const auto o = oracle::consts(20, 1.5, 10);
    EXPECT_NEAR(c.alpha, 0.194444, 1e-6);
    EXPECT_NEAR(c.Z0, 6.84877, 1e-5);
    EXPECT_NEAR(c.C_sigma, o.C, 1e-13);
    EXPECT_NEAR(c.C_sigma, 1.23843, 1e-4);
    EXPECT_NEAR(c.A, 17.22222, 1e-5);
    EXPECT_NEAR(c.B, 61.63889, 1e-5);

    const DerivedConstants d = profile_constants(RegimeParams(11, 0.0, 2));
    EXPECT_NEAR(d.A, 5.0, 1e-14);
    EXPECT_NEAR(d.B, 14.0, 1e-14);
    EXPECT_THROW(profile_constants(RegimeParams(10, 0.0, 1.2)), DomainError);
}

TEST(Constants, AgreeWithOracle) {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> dN(3, 100);
    std::uniform_real_distribution<double> ds(-1.9, 8.0), dp(0.01, 40.0);
    for (int k = 0; k < 500; ++k) {
        const int N = dN(rng);
        const double s = ds(rng);
        const double p = p_sobolev(N, s).value() + dp(rng);
        const DerivedConstants c = profile_constants(RegimeParams(N, s, p));
        const auto o = oracle::consts(N, s, p);
        EXPECT_GT(c.alpha, 0.0);
        EXPECT_NEAR(c.alpha, o.alpha, 1e-14 * o.alpha);
        EXPECT_NEAR(c.Z0, o.Z0, 1e-12 * o.Z0);
        EXPECT_NEAR(c.A, o.A, 1e-12 * std::max(1.0, std::abs(o.A)));
        EXPECT_NEAR(c.B, o.B, 1e-12 * std::max(1.0, std::abs(o.B)));
        EXPECT_NEAR(std::pow(c.C_sigma, p - 1.0), c.Z0, 1e-12 * c.Z0);
    }
}

TEST(Prediction, GapAndZeroCount) {
    const auto t1 = lepin_gap(RegimeParams(20, 1.5, 10));
    ASSERT_TRUE(t1.lepin_gap);
    EXPECT_NEAR(*t1.lepin_gap, 10.148, 1e-3);
    EXPECT_NEAR(*t1.lepin_gap, oracle::gap(20, 1.5, 10), 1e-12);
    EXPECT_EQ(*t1.zero_count, 3);
    EXPECT_TRUE(t1.existence);

    const auto t2 = lepin_gap(RegimeParams(40, 1.5, 10));
    EXPECT_NEAR(*t2.lepin_gap, 7.915, 1e-3);
    EXPECT_EQ(*t2.zero_count, 2);
    EXPECT_FALSE(t2.existence);
    EXPECT_TRUE(t2.conjectured_nonexistence);
    EXPECT_FALSE(t1.conjectured_nonexistence);

    const double pjl = p_joseph_lundgren(30, 1.0).value();
    const auto t3 = lepin_gap(RegimeParams(30, 1.0, pjl));
    const auto c3 = profile_constants(RegimeParams(30, 1.0, pjl));
    ASSERT_TRUE(t3.lepin_gap);
    EXPECT_NEAR(*t3.lepin_gap, c3.A, 1e-5 * c3.A);

    const auto t4 = lepin_gap(RegimeParams(30, 1.0, 0.5 * (pjl + p_sobolev(30, 1.0).value())));
    EXPECT_TRUE(t4.discriminant_negative);
    EXPECT_FALSE(t4.lepin_gap);
}

TEST(Prediction, ZeroCountBracket) {
    EXPECT_EQ(zero_count_from_gap(3.0), 1);
    EXPECT_EQ(zero_count_from_gap(4.0), 1);
    EXPECT_EQ(zero_count_from_gap(4.5), 2);
    EXPECT_EQ(zero_count_from_gap(8.0), 2);
    EXPECT_EQ(zero_count_from_gap(8.01), 3);
    EXPECT_EQ(zero_count_from_gap(12.0), 3);
    EXPECT_EQ(zero_count_from_gap(12.5), 4);
}

TEST(Prediction, Multiplicity) {
    EXPECT_EQ(predicted_multiplicity(RegimeParams(36, 6, 15)), 2);
    EXPECT_EQ(predicted_multiplicity(RegimeParams(20, 1.5, 10)), 1);
    EXPECT_EQ(predicted_multiplicity(RegimeParams(40, 1.5, 10)), 0);
    EXPECT_EQ(predicted_multiplicity(RegimeParams(8, -0.6, 20)), 1);
    EXPECT_EQ(predicted_multiplicity(RegimeParams(10, -0.6, 20)), 0);
    // Below p_JL no statement applies.
    EXPECT_EQ(predicted_multiplicity(RegimeParams(36, 6, 5)), 0);
    EXPECT_EQ(lepin_gap(RegimeParams(36, 6, 15)).multiplicity_lower_bound, 2);
}

TEST(Prediction, DimensionConditionForNegativeWeight) {
    // N >= 2(2 - sigma)/(sigma + 2): 14 at sigma = -1.5.
    EXPECT_TRUE(lepin_gap(RegimeParams(12, -1.5, 20)).outside_hypotheses);
    EXPECT_EQ(lepin_gap(RegimeParams(12, -1.5, 20)).multiplicity_lower_bound, 0);
    EXPECT_FALSE(lepin_gap(RegimeParams(14, -1.5, 20)).outside_hypotheses);
    EXPECT_FALSE(lepin_gap(RegimeParams(8, -0.6, 20)).outside_hypotheses);
    EXPECT_FALSE(lepin_gap(RegimeParams(3, 1.0, 20)).outside_hypotheses);
}
