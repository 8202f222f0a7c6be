#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "henon/dynsys.hpp"
#include "oracle.hpp"

using namespace henon;

namespace {

Vec<3> full(const Vec<3>& s, const Model& m) {
    Vec<3> o;
    field::FullPhase{&m}(0.0, s, o);
    return o;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

TEST(FullPhase, CriticalPointsAndLines) {
    const Model m(20, 1.5, 10);
    const auto z = full({0, 0, 0}, m);
    EXPECT_EQ(z[0], 0.0);
    EXPECT_EQ(z[1], 0.0);
    EXPECT_EQ(z[2], 0.0);
    for (double X : {0.1, 1.0, 37.0, 1e4}) {
        const auto d = full({X, -m.c.a, m.c.Z0}, m);
        EXPECT_DOUBLE_EQ(d[0], 2 * X);
        EXPECT_NEAR(d[1], 0.0, 1e-12 * std::max(1.0, X));
        EXPECT_EQ(d[2], 0.0);
    }
}

TEST(FullPhase, InvariantPlanesExactly) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-20, 20), pos(0, 30);
    const Model m(8, -0.6, 20);
    for (int i = 0; i < 200; ++i) {
        EXPECT_EQ(full({0.0, u(rng), pos(rng)}, m)[0], 0.0);
        EXPECT_EQ(full({pos(rng), u(rng), 0.0}, m)[2], 0.0);
    }
}

TEST(FullPhase, MatchesOracleField) {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> pos(0, 50), u(-30, 30);
    for (const auto& prm : {RegimeParams(20, 1.5, 10), RegimeParams(8, -0.6, 20), RegimeParams(36, 6, 15)}) {
        const Model m(prm);
        for (int i = 0; i < 100; ++i) {
            const Vec<3> s{pos(rng), u(rng), pos(rng)};
            const auto d = full(s, m);
            const auto o = oracle::phase({s[0], s[1], s[2]}, prm.N, prm.sigma, prm.p);
            for (int j = 0; j < 3; ++j) EXPECT_LE(rel(d[j], o[j]), 1e-12);
        }
    }
}

TEST(StationaryFrame, SameFieldShifted) {
    const Model m(20, 1.5, 10);
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> pos(0, 50), u(-1, 1);
    for (int i = 0; i < 100; ++i) {
        const double X = pos(rng), du = u(rng), dv = u(rng);
        Vec<3> o;
        field::StationaryFrame{&m}(0.0, {X, du, dv}, o);
        const auto d = full({X, du - m.c.a, dv + m.c.Z0}, m);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(o[j], d[j], 1e-11 * std::max(1.0, std::abs(d[j])));
    }
}

TEST(Linearized, CoefficientsAppear) {
    const Model m(20, 1.5, 10);
    const auto d1 = eval_field(ChartId::Linearized, {1.0, 0.0}, m, -50.0);
    const auto d2 = eval_field(ChartId::Linearized, {0.0, 1.0}, m, -50.0);
    EXPECT_NEAR(d1[1], -61.63889, 1e-5);
    EXPECT_NEAR(d2[1], -17.22222, 1e-5);
    EXPECT_DOUBLE_EQ(d1[0], 0.0);
    EXPECT_DOUBLE_EQ(d2[0], 1.0);
}

TEST(Transforms, KnownPoints) {
    const Model m(20, 1.5, 10);
    for (double xi : {0.2, 1.0, 3.7}) {
        const double U = m.c.C_sigma * std::pow(xi, -m.c.a);
        const PhasePoint P = to_phase({xi, U, -m.c.a * U / xi}, m);
        EXPECT_NEAR(P.Y, -m.c.a, 1e-14);
        EXPECT_NEAR(P.Z, m.c.Z0, 1e-12 * m.c.Z0);
    }
    const PhasePoint P = to_phase({1.0, 1.0, 0.0}, m);
    EXPECT_DOUBLE_EQ(P.X, 3.5 / 18.0);
    EXPECT_EQ(P.Y, 0.0);
    EXPECT_EQ(P.Z, 1.0);
    const XiF q = from_phase({3.5 / 18.0, 0.0, 1.0}, m);
    EXPECT_NEAR(q.xi, 1.0, 1e-15);
    EXPECT_NEAR(q.f, 1.0, 1e-15);
    const XiF r = from_phase({1.0, 0.0, m.c.Z0}, m);
    EXPECT_NEAR(r.xi, std::sqrt(18.0 / 3.5), 1e-14);
    EXPECT_NEAR(r.xi, 2.2678, 1e-4);
    EXPECT_NEAR(r.f, m.c.C_sigma * std::pow(r.xi, -7.0 / 18.0), 1e-14);
    EXPECT_NEAR(r.f * std::pow(r.xi, m.c.a), m.c.C_sigma, 1e-14);
    EXPECT_THROW(to_phase({0.0, 1.0, 0.0}, m), DomainError);
    EXPECT_THROW(to_phase({1.0, -1.0, 0.0}, m), DomainError);
    EXPECT_THROW(from_phase({0.0, 0.0, 1.0}, m), DomainError);
    EXPECT_THROW(from_phase({1.0, 0.0, 0.0}, m), DomainError);
}

TEST(Transforms, RoundTrip) {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> lx(-3, 2), lf(-5, 5), d(-10, 10);
    const Model m(12, 0.7, 4.5);
    for (int i = 0; i < 500; ++i) {
        const ProfileState s{std::pow(10.0, lx(rng)), std::pow(10.0, lf(rng)), d(rng)};
        const XiF b = from_phase(to_phase(s, m), m);
        EXPECT_NEAR(b.xi, s.xi, 1e-12 * s.xi);
        EXPECT_NEAR(b.f, s.f, 1e-12 * s.f);
    }
}

TEST(Charts, KnownImages) {
    const auto x = chart_x({1, 0, 0});
    EXPECT_EQ(x[0], 1.0);
    EXPECT_EQ(x[1], 0.0);
    EXPECT_EQ(x[2], 0.0);
    const auto y = chart_y({0, -1, 0});
    EXPECT_EQ(y[0], 0.0);
    EXPECT_EQ(y[1], 0.0);
    EXPECT_EQ(y[2], -1.0);
    const Model m(20, 1.5, 10);
    for (double X : {1e2, 1e4, 1e8}) EXPECT_NEAR(chart_x({X, -m.c.a, m.c.Z0})[1], -m.c.a / X, 1e-18);
    EXPECT_THROW(chart_x({0, 1, 1}), DomainError);
    EXPECT_THROW(chart_y({1, 0, 1}), DomainError);
}

// Vector fields in the charts at infinity are the pushforward of the phase field up to the
// positive time change: X for the X-chart, |Y| for the Y-charts, Z for the Z-chart.
TEST(Charts, PushforwardAgrees) {
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> X(0.5, 50), Y(-30, 30), Z(0.1, 40);
    for (const auto& prm : {RegimeParams(20, 1.5, 10), RegimeParams(8, -0.6, 20)}) {
        const Model m(prm);
        for (int i = 0; i < 200; ++i) {
            const PhasePoint P{X(rng), Y(rng), Z(rng)};
            const auto d = full({P.X, P.Y, P.Z}, m);
            const double dX = d[0], dY = d[1], dZ = d[2];

            const auto cx = chart_x(P);
            const auto fx = eval_field(ChartId::InfX, {cx[0], cx[1], cx[2]}, m);
            const double px[3] = {-dX / (P.X * P.X), (dY * P.X - P.Y * dX) / (P.X * P.X), (dZ * P.X - P.Z * dX) / (P.X * P.X)};
            for (int j = 0; j < 3; ++j) EXPECT_LE(rel(P.X * fx[j], px[j]), 1e-10);

            const auto cy = chart_y(P);
            const ChartId yc = P.Y > 0 ? ChartId::InfYMinus : ChartId::InfYPlus;
            const auto fy = eval_field(yc, {cy[0], cy[1], cy[2]}, m);
            const double Y2 = P.Y * P.Y;
            const double py[3] = {(dX * P.Y - P.X * dY) / Y2, (dZ * P.Y - P.Z * dY) / Y2, -dY / Y2};
            for (int j = 0; j < 3; ++j) EXPECT_LE(rel(std::abs(P.Y) * fy[j], py[j]), 1e-10);

            const auto cz = chart_z(P);
            const auto fz = eval_field(ChartId::InfZ, {cz[0], cz[1], cz[2]}, m);
            const double Z2 = P.Z * P.Z;
            const double pz[3] = {(dX * P.Z - P.X * dZ) / Z2, (dY * P.Z - P.Y * dZ) / Z2, -dZ / Z2};
            for (int j = 0; j < 3; ++j) EXPECT_LE(rel(P.Z * fz[j], pz[j]), 1e-10);
        }
    }
}

TEST(Charts, PlaneRestrictions) {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> X(0.0, 50), Y(-30, 30), Z(0.0, 40), w(0.0, 5.0);
    const Model m(20, 1.5, 10);
    for (int i = 0; i < 100; ++i) {
        const double y = Y(rng), z = Z(rng), x = X(rng);
        const auto a = eval_field(ChartId::PlaneX0, {y, z}, m);
        const auto fa = full({0.0, y, z}, m);
        EXPECT_EQ(a[0], fa[1]);
        EXPECT_EQ(a[1], fa[2]);
        const auto b = eval_field(ChartId::PlaneZ0, {x, y}, m);
        const auto fb = full({x, y, 0.0}, m);
        EXPECT_EQ(b[0], fb[0]);
        EXPECT_NEAR(b[1], fb[1], 1e-12 * std::max(1.0, std::abs(fb[1])));

        // {x = 0} of the X-chart with w = x z held fixed.
        const double yy = Y(rng) / 30.0, ww = w(rng), xs = 1e-9;
        const auto c = eval_field(ChartId::WPlane, {yy, ww}, m);
        const auto fx = eval_field(ChartId::InfX, {xs, yy, ww / xs}, m);
        EXPECT_NEAR(c[0], fx[1], 1e-6);
        EXPECT_NEAR(c[1], fx[0] * ww / xs + xs * fx[2], 1e-6);
    }
}

// Samples of a solution of the profile equation, mapped to phase space and differentiated
// in eta = ln xi, follow the phase field.
TEST(Transforms, ProfileSolutionFollowsPhaseField) {
    for (const auto& prm : {RegimeParams(20, 1.5, 10), RegimeParams(8, -0.6, 20)}) {
        const Model m(prm);
        std::vector<double> xs, fs, fps;
        const double xi0 = 0.1;
        oracle::rk4_profile(prm.N, prm.sigma, prm.p, xi0, 0.9, -0.01, 5.0, 200000, xs, fs, fps);
        ASSERT_GT(xs.size(), 1000u);
        for (std::size_t i = 1000; i + 1000 < xs.size(); i += 4999) {
            const std::size_t lo = i - 10, hi = i + 10;
            const PhasePoint A = to_phase({xs[lo], fs[lo], fps[lo]}, m);
            const PhasePoint B = to_phase({xs[i], fs[i], fps[i]}, m);
            const PhasePoint C = to_phase({xs[hi], fs[hi], fps[hi]}, m);
            const double h1 = std::log(xs[i] / xs[lo]), h2 = std::log(xs[hi] / xs[i]);
            auto deriv = [&](double a, double b, double c) {
                return (-h2 / (h1 * (h1 + h2))) * a + ((h2 - h1) / (h1 * h2)) * b + (h1 / (h2 * (h1 + h2))) * c;
            };
            const auto d = full({B.X, B.Y, B.Z}, m);
            EXPECT_LE(rel(deriv(A.X, B.X, C.X), d[0]), 1e-6);
            EXPECT_LE(rel(deriv(A.Y, B.Y, C.Y), d[1]), 1e-6);
            EXPECT_LE(rel(deriv(A.Z, B.Z, C.Z), d[2]), 1e-6);
        }
    }
}

TEST(ProfileODE, Singularities) {
    const Model m(20, 1.5, 10);
    EXPECT_THROW(eval_field(ChartId::ProfileODE, {1.0, 0.0}, m, 0.0), SingularityError);
    const Model n(8, -0.6, 20);
    EXPECT_THROW(eval_field(ChartId::ProfileODE, {1.0, 0.0}, n, 1e-9), SingularityError);
    EXPECT_NO_THROW(eval_field(ChartId::ProfileODE, {1.0, 0.0}, n, 1e-3));
    EXPECT_THROW(eval_field(ChartId::FullPhase, {1.0, 0.0}, m), DomainError);
}

TEST(Dulac, Divergence) {
    const Model m(20, 1.5, 10);
    EXPECT_NEAR(dulac_divergence(0.3, 1.0, m), -155.0 / 9.0, 1e-12);
    for (double Z : {0.1, 1.0, 10.0}) EXPECT_LT(dulac_divergence(-2.0, Z, m), 0.0);
    EXPECT_NEAR(dulac_divergence(0.0, 2.0, Model(20, 1.5, p_sobolev(20, 1.5).value())), 0.0, 1e-12);
    EXPECT_THROW(dulac_divergence(0.0, 0.0, m), DomainError);
}

// The weighted field Z^e (Y', Z') has divergence free of Y for the implemented exponent.
TEST(Dulac, MatchesNumericDivergence) {
    const Model m(20, 1.5, 10);
    const double e = dulac_exponent(m), h = 1e-6;
    auto F = [&](double Y, double Z) {
        const auto d = eval_field(ChartId::PlaneX0, {Y, Z}, m);
        const double w = std::pow(Z, e);
        return std::array<double, 2>{w * d[0], w * d[1]};
    };
    for (double Y : {-5.0, -0.5, 0.7})
        for (double Z : {0.5, 2.0, 9.0}) {
            const double div = (F(Y + h, Z)[0] - F(Y - h, Z)[0]) / (2 * h) + (F(Y, Z + h)[1] - F(Y, Z - h)[1]) / (2 * h);
            EXPECT_NEAR(div, dulac_divergence(Y, Z, m), 1e-6 * std::max(1.0, std::abs(div)));
        }
}
