#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "henon/integrator.hpp"
#include "henon/local_analysis.hpp"
#include "oracle.hpp"

using namespace henon;

namespace {

Eigen::Matrix3d numeric_jacobian(ChartId chart, const Eigen::Vector3d& at, const Model& m) {
    Eigen::Matrix3d J;
    for (int j = 0; j < 3; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(at[j]));
        std::vector<double> a{at[0], at[1], at[2]}, b = a;
        a[j] += h;
        b[j] -= h;
        const auto fa = eval_field(chart, a, m), fb = eval_field(chart, b, m);
        for (int i = 0; i < 3; ++i) J(i, j) = (fa[i] - fb[i]) / (2 * h);
    }
    return J;
}

bool parallel(const Eigen::Vector3d& a, Eigen::Vector3d b) {
    b.normalize();
    return std::abs(std::abs(a.dot(b)) - 1.0) < 1e-10;
}

const Eigen::Vector3d* vector_for(const CriticalPointReport& r, double lambda) {
    std::size_t k = 0;
    for (const auto& l : r.eigenvalues) {
        if (std::abs(l.imag()) > 1e-10) continue;
        if (std::abs(l.real() - lambda) < 1e-9 * std::max(1.0, std::abs(lambda))) return &r.eigenvectors[k];
        ++k;
    }
    return nullptr;
}

}  // namespace

TEST(CriticalPoints, OriginSaddle) {
    const Model m(20, 1.5, 10);
    const auto r = report(CriticalPointId::P0, m);
    ASSERT_EQ(r.eigenvalues.size(), 3u);
    EXPECT_NEAR(r.eigenvalues[0].real(), -18.0, 1e-12);
    EXPECT_NEAR(r.eigenvalues[1].real(), 2.0, 1e-12);
    EXPECT_NEAR(r.eigenvalues[2].real(), 3.5, 1e-12);
    EXPECT_EQ(r.unstable_dim, 2);
    EXPECT_EQ(r.stable_dim, 1);
    const auto* e1 = vector_for(r, 2.0);
    const auto* e3 = vector_for(r, 3.5);
    ASSERT_TRUE(e1 && e3);
    EXPECT_TRUE(parallel(*e1, {20, 1, 0}));
    EXPECT_TRUE(parallel(*e3, {0, 1, -21.5}));
}

TEST(CriticalPoints, FiniteEigenvalues) {
    for (const auto& prm : {RegimeParams(20, 1.5, 10), RegimeParams(40, 1.5, 10), RegimeParams(8, -0.6, 20)}) {
        const Model m(prm);
        const auto p1 = report(CriticalPointId::P1, m);
        std::vector<double> want{2.0, prm.N - 2.0, prm.N + prm.sigma - prm.p * (prm.N - 2.0)};
        std::sort(want.begin(), want.end());
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(p1.eigenvalues[i].real(), want[i], 1e-10 * std::abs(want[i]));

        const auto p2 = report(CriticalPointId::P2, m);
        EXPECT_FALSE(p2.complex_pair);
        EXPECT_EQ(p2.stable_dim, 2);
        EXPECT_EQ(p2.unstable_dim, 1);
        const double sum = p2.eigenvalues[0].real() + p2.eigenvalues[1].real();
        const double prod = p2.eigenvalues[0].real() * p2.eigenvalues[1].real();
        EXPECT_NEAR(sum, -m.c.A, 1e-10 * m.c.A);
        EXPECT_NEAR(prod, m.c.B, 1e-10 * m.c.B);
        EXPECT_NEAR(sum, (prm.N - 2) * (p_sobolev(prm.N, prm.sigma).value() - prm.p) / (prm.p - 1), 1e-10 * m.c.A);
        for (int i = 0; i < 3; ++i)
            EXPECT_NEAR(p2.eigenvalues[i].real(), p2.analytic_eigenvalues[i].real(), 1e-9 * std::max(1.0, m.c.A));
    }
    const auto p2 = report(CriticalPointId::P2, Model(20, 1.5, 10));
    EXPECT_NEAR(p2.eigenvalues[0].real() + p2.eigenvalues[1].real(), -17.2222, 1e-4);
    EXPECT_NEAR(p2.eigenvalues[0].real() * p2.eigenvalues[1].real(), 61.6389, 1e-4);
}

TEST(CriticalPoints, P2IdentitiesOnGrid) {
    std::mt19937 rng(41);
    std::uniform_int_distribution<int> dN(12, 60);
    std::uniform_real_distribution<double> ds(-1.5, 4.0), dp(0.0, 20.0);
    int n = 0;
    while (n < 100) {
        const int N = dN(rng);
        const double s = ds(rng);
        if (!(N > 10 + 4 * s)) continue;
        const Model m(N, s, p_joseph_lundgren(N, s).value() + 1e-3 + dp(rng));
        const auto r = report(CriticalPointId::P2, m);
        ASSERT_FALSE(r.complex_pair);
        const double sum = r.eigenvalues[0].real() + r.eigenvalues[1].real();
        const double prod = r.eigenvalues[0].real() * r.eigenvalues[1].real();
        EXPECT_NEAR(sum, -m.c.A, 1e-10 * m.c.A);
        EXPECT_NEAR(prod, m.c.B, 1e-9 * m.c.B);
        ++n;
    }
}

TEST(CriticalPoints, DoubleRootAtThreshold) {
    const double pjl = p_joseph_lundgren(30, 1.0).value();
    const auto r = report(CriticalPointId::P2, Model(30, 1.0, pjl));
    EXPECT_NEAR(r.eigenvalues[0].real(), r.eigenvalues[1].real(), 1e-6 * std::abs(r.eigenvalues[0].real()));
    const auto below = report(CriticalPointId::P2, Model(30, 1.0, pjl - 0.1));
    EXPECT_TRUE(below.complex_pair);
}

TEST(CriticalPoints, PointsAtInfinity) {
    const Model m(20, 1.5, 10);
    const double b = m.c.b;
    const auto q1 = report(CriticalPointId::Q1, m);
    EXPECT_NEAR(q1.eigenvalues[0].real(), 0.0, 1e-14);
    EXPECT_NEAR(q1.eigenvalues[1].real(), 0.0, 1e-14);
    EXPECT_NEAR(q1.eigenvalues[2].real(), b, 1e-14);
    EXPECT_EQ(q1.center_dim, 2);
    const auto q5 = report(CriticalPointId::Q5, m);
    EXPECT_NEAR(q5.eigenvalues[0].real(), -b, 1e-14);
    EXPECT_NEAR(q5.eigenvalues[1].real(), 0.0, 1e-14);
    EXPECT_NEAR(q5.eigenvalues[2].real(), 81.0 / 3.5, 1e-12);
    EXPECT_EQ(report(CriticalPointId::Q2, m).unstable_dim, 3);
    EXPECT_EQ(report(CriticalPointId::Q3, m).stable_dim, 3);
}

TEST(CriticalPoints, JacobianMatchesFiniteDifferences) {
    for (const auto& prm : {RegimeParams(20, 1.5, 10), RegimeParams(8, -0.6, 20)}) {
        const Model m(prm);
        for (auto id : {CriticalPointId::P0, CriticalPointId::P1, CriticalPointId::P2, CriticalPointId::Q1,
                        CriticalPointId::Q5, CriticalPointId::Qgamma, CriticalPointId::Q4}) {
            const auto r = report(id, m, 0.4);
            const Eigen::Matrix3d J = numeric_jacobian(r.chart, r.location, m);
            EXPECT_LE((J - r.jacobian).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, J.cwiseAbs().maxCoeff()))
                << point_name(id);
            std::vector<double> at{r.location[0], r.location[1], r.location[2]};
            for (double v : eval_field(r.chart, at, m)) EXPECT_NEAR(v, 0.0, 1e-12) << point_name(id);
        }
    }
}

TEST(CenterManifold, Values) {
    const Model m(20, 1.5, 10);
    EXPECT_EQ(center_manifold_y(0.0, 3.0, m), 0.0);
    for (double x : {1e-6, 1e-3, 0.05}) EXPECT_NEAR(center_manifold_y(x, m.c.Z0 * x, m), -m.c.a * x, 1e-15);
    EXPECT_NEAR(center_manifold_y(0.01, 0.0, m), -0.00415523, 1e-8);
}

// The truncation error of the manifold, measured by invariance of the graph, is cubic.
TEST(CenterManifold, InvarianceDefectIsCubic) {
    const Model m(20, 1.5, 10);
    auto defect = [&](double x, double z) {
        const double y = center_manifold_y(x, z, m), h = 1e-7;
        const auto d = eval_field(ChartId::InfX, {x, y, z}, m);
        const double dydx = (center_manifold_y(x + h, z, m) - center_manifold_y(x - h, z, m)) / (2 * h);
        const double dydz = (center_manifold_y(x, z + h, m) - center_manifold_y(x, z - h, m)) / (2 * h);
        return std::abs(d[1] - dydx * d[0] - dydz * d[2]);
    };
    const double r1 = defect(1e-2, 5e-2), r2 = defect(5e-3, 2.5e-2);
    EXPECT_GT(r1 / r2, 6.0);
}

TEST(Seeds, CenterQ1) {
    const Model m(20, 1.5, 10);
    const auto s = seed_center_Q1(m.c.Z0, m);
    EXPECT_NEAR(s.state[1], -m.c.a, 1e-15);
    EXPECT_EQ(s.state[0], 1e6);
    const auto h = seed_center_Q1(m.c.Z0 / 2, m);
    EXPECT_NEAR(h.state[1], -0.388890, 1e-6);
    EXPECT_NEAR(h.state[1] + m.c.a, -1.33e-6, 1e-8);
    EXPECT_LT(seed_center_Q1(m.c.Z0 * 0.999, m).state[1], -m.c.a);
    EXPECT_TRUE(seed_center_Q1(1.0, m).warnings.empty());
    EXPECT_FALSE(seed_center_Q1(1.0, m, 100.0).warnings.empty());
    EXPECT_THROW(seed_center_Q1(0.0, m), DomainError);
    // Same point through the chart: X0 y(1/X0, k/X0).
    const double k = 2.0, X0 = 1e6;
    EXPECT_NEAR(seed_center_Q1(k, m, X0).state[1], X0 * center_manifold_y(1 / X0, k / X0, m), 1e-12);
}

TEST(Seeds, UnstableOriginPositive) {
    const Model m(20, 1.5, 10);
    const auto s = seed_unstable_P0(1e-6, m);
    EXPECT_NEAR(s.state[1], s.state[0] / 20.0, 1e-12 * s.state[0]);
    const auto t = seed_unstable_P0(2.0, m, 1e-6);
    EXPECT_DOUBLE_EQ(t.state[2], 2.0 * std::pow(1e-6, 1.75));
    EXPECT_NEAR(t.state[1], 1e-6 / 20 - t.state[2] / 21.5, 1e-20);
    EXPECT_THROW(seed_unstable_P0(1.0, m, 0.1), DomainError);
    EXPECT_THROW(seed_unstable_P0(-1.0, m), DomainError);
    EXPECT_NEAR(f0_from_c(c_from_f0(0.8, m), m), 0.8, 1e-14);
}

TEST(Seeds, UnstableOriginNegative) {
    const Model m(8, -0.6, 20);
    const auto s = seed_unstable_P0(1.0, m);
    const double xi0 = std::exp(s.eta);
    const double f = std::pow(1.0 + 19.0 * std::pow(xi0, 1.4) / (7.4 * 1.4), -1.0 / 19.0);
    const XiF q = from_phase({s.state[0], s.state[1], s.state[2]}, m);
    EXPECT_NEAR(q.xi, xi0, 1e-12 * xi0);
    EXPECT_NEAR(q.f, f, 1e-12);
    EXPECT_LE(std::pow(xi0, 1.4), 1e-8 * (1 + 1e-12));
}

TEST(Seeds, ForwardRunRecoversC) {
    const Model m(20, 1.5, 10);
    Controls c;
    c.max_span = 6.0;
    for (double C : {0.1, 1.0, 30.0}) {
        const auto s = seed_unstable_P0(C, m);
        const auto tr = integrate(s, Direction::Forward, {}, c, m);
        const double fit = tr.last[2] / std::pow(tr.last[0], 1.75);
        EXPECT_NEAR(fit, C, 0.01 * C);
    }
}

TEST(Seeds, BackwardFromQ1StaysNearLevel) {
    const Model m(20, 1.5, 10);
    Controls c;
    c.max_span = 30.0;
    const double d = 0.05 * m.c.Z0;
    for (double k : {0.98 * m.c.Z0, 0.995 * m.c.Z0}) {
        auto tr = integrate(seed_center_Q1(k, m), Direction::Backward, {EventSpec::cross_z0().stop()}, c, m);
        ASSERT_FALSE(tr.events.empty());
        for (const auto& x : tr.x) {
            EXPECT_GE(x[2], std::min(k, m.c.Z0) - d);
            EXPECT_LE(x[2], std::max(k, m.c.Z0) + d);
        }
    }
}

TEST(Gamma, SpecialTrajectory) {
    const Model z(20, 0.0, 5);
    const auto g = gamma_special(z);
    EXPECT_EQ(g.tail_exponent, 0.0);
    EXPECT_NEAR(g.tail_amplitude, std::pow(0.25, 0.25), 1e-15);
    for (const auto& prm : {RegimeParams(20, 1.5, 10), RegimeParams(8, -0.6, 20), RegimeParams(36, 6, 15)}) {
        const auto h = gamma_special(Model(prm));
        const double q = (prm.sigma + 2) / 2;
        EXPECT_NEAR(h.gamma0, q / std::sqrt(1 + q * q), 1e-15);
        EXPECT_GT(h.gamma0, 0.0);
        EXPECT_LT(h.gamma0, 1.0);
    }
    EXPECT_THROW(kappa_of_gamma(1.0), DomainError);
}
