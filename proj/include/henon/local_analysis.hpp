#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "henon/dynsys.hpp"

namespace henon {

enum class CriticalPointId { P0, P1, P2, Q1, Q2, Q3, Q4, Q5, Qgamma };

inline std::string point_name(CriticalPointId id) {
    switch (id) {
    case CriticalPointId::P0: return "P0";
    case CriticalPointId::P1: return "P1";
    case CriticalPointId::P2: return "P2";
    case CriticalPointId::Q1: return "Q1";
    case CriticalPointId::Q2: return "Q2";
    case CriticalPointId::Q3: return "Q3";
    case CriticalPointId::Q4: return "Q4";
    case CriticalPointId::Q5: return "Q5";
    case CriticalPointId::Qgamma: return "Qgamma";
    }
    return "?";
}

struct CriticalPointReport {
    CriticalPointId id{};
    ChartId chart{};
    Eigen::Vector3d location = Eigen::Vector3d::Zero();
    Eigen::Matrix3d jacobian = Eigen::Matrix3d::Zero();
    std::vector<std::complex<double>> eigenvalues;           ///< numeric, sorted by real part
    std::vector<std::complex<double>> analytic_eigenvalues;  ///< closed form, same ordering
    std::vector<Eigen::Vector3d> eigenvectors;               ///< real eigenvectors (unit norm), one per real eigenvalue
    int stable_dim = 0;
    int unstable_dim = 0;
    int center_dim = 0;
    bool complex_pair = false;
};

namespace detail {

inline void sort_by_real(std::vector<std::complex<double>>& v) {
    std::sort(v.begin(), v.end(), [](auto x, auto y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    });
}

inline void decompose(CriticalPointReport& r) {
    Eigen::EigenSolver<Eigen::Matrix3d> es(r.jacobian);
    const auto vals = es.eigenvalues();
    const auto vecs = es.eigenvectors();
    const double scale = std::max(1.0, r.jacobian.cwiseAbs().maxCoeff());
    std::vector<std::pair<std::complex<double>, Eigen::Vector3d>> items;
    for (int i = 0; i < 3; ++i) {
        const std::complex<double> l = vals(i);
        if (std::abs(l.imag()) > 1e-10 * scale) r.complex_pair = true;
        const double re = l.real();
        if (re > 1e-10 * scale) ++r.unstable_dim;
        else if (re < -1e-10 * scale) ++r.stable_dim;
        else ++r.center_dim;
        Eigen::Vector3d v = vecs.col(i).real();
        if (v.norm() > 0) v.normalize();
        items.emplace_back(l, v);
    }
    std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
        if (x.first.real() != y.first.real()) return x.first.real() < y.first.real();
        return x.first.imag() < y.first.imag();
    });
    for (auto& [l, v] : items) {
        r.eigenvalues.push_back(l);
        if (std::abs(l.imag()) <= 1e-10 * scale) r.eigenvectors.push_back(v);
    }
    sort_by_real(r.analytic_eigenvalues);
}

}  // namespace detail

/// kappa(gamma) = sqrt(1-gamma^2)/gamma, the z-coordinate of Q_gamma in the InfX chart.
inline double kappa_of_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0,1)");
    return std::sqrt(1.0 - gamma * gamma) / gamma;
}

/// Linearization at a critical point in its natural chart, with numeric eigen-decomposition.
/// `gamma` is only used for Qgamma.
inline CriticalPointReport report(CriticalPointId id, const Model& m, double gamma = 0.5) {
    const double n = m.N(), s = m.sigma(), p = m.p();
    const double a = m.c.a, b = m.c.b, Z0 = m.c.Z0;
    using C = std::complex<double>;
    CriticalPointReport r;
    r.id = id;
    Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
    switch (id) {
    case CriticalPointId::P0:
        r.chart = ChartId::FullPhase;
        J << 2, 0, 0, 1, -(n - 2), -1, 0, 0, s + 2;
        r.analytic_eigenvalues = {C(2), C(-(n - 2)), C(s + 2)};
        break;
    case CriticalPointId::P1: {
        r.chart = ChartId::FullPhase;
        r.location = {0, -(n - 2), 0};
        const double l3 = n + s - p * (n - 2);
        J << 2, 0, 0, l3 / (s + 2), n - 2, -1, 0, 0, l3;
        r.analytic_eigenvalues = {C(2), C(n - 2), C(l3)};
        break;
    }
    case CriticalPointId::P2: {
        r.chart = ChartId::FullPhase;
        r.location = {0, -a, Z0};
        J << 2, 0, 0, 0, -m.c.A, -1, 0, (p - 1) * Z0, 0;
        const C disc = std::sqrt(C(m.c.A * m.c.A - 4 * m.c.B));
        r.analytic_eigenvalues = {C(2), (C(-m.c.A) + disc) / 2.0, (C(-m.c.A) - disc) / 2.0};
        break;
    }
    case CriticalPointId::Q1:
        r.chart = ChartId::InfX;
        J << 0, 0, 0, 1, b, 0, 0, 0, 0;
        r.analytic_eigenvalues = {C(0), C(b), C(0)};
        break;
    case CriticalPointId::Q5:
        r.chart = ChartId::InfX;
        r.location = {0, b, 0};
        J << 0, 0, 0, 1 - n * b, -b, 0, 0, 0, (p - 1) * b;
        r.analytic_eigenvalues = {C(0), C(-b), C((p - 1) * b)};
        break;
    case CriticalPointId::Qgamma: {
        r.chart = ChartId::InfX;
        const double k = kappa_of_gamma(gamma);
        r.location = {0, 0, k};
        J << 0, 0, 0, 1 - k, b, 0, s * k, (p - 1) * k, 0;
        r.analytic_eigenvalues = {C(0), C(b), C(0)};
        break;
    }
    case CriticalPointId::Q2:
        r.chart = ChartId::InfYMinus;
        J = Eigen::Vector3d(1, p, 1).asDiagonal();
        r.analytic_eigenvalues = {C(1), C(p), C(1)};
        break;
    case CriticalPointId::Q3:
        r.chart = ChartId::InfYPlus;
        J = Eigen::Vector3d(-1, -p, -1).asDiagonal();
        r.analytic_eigenvalues = {C(-1), C(-p), C(-1)};
        break;
    case CriticalPointId::Q4:
        r.chart = ChartId::InfZ;
        J << 0, 0, 0, 0, 0, -1, 0, 0, 0;
        r.analytic_eigenvalues = {C(0), C(0), C(0)};
        break;
    }
    r.jacobian = J;
    detail::decompose(r);
    return r;
}

/// Center manifold of Q1 in the InfX chart, truncated after the quadratic terms.
inline double center_manifold_y(double x, double z, const Model& m) {
    const double a = m.c.a, n = m.N(), s = m.sigma(), p = m.p();
    const double c2 = a * a * (n + s - p * (n - 2.0)) / (p - 1.0);
    return -a * x + c2 * x * x + a * x * z;
}

struct SeedPoint {
    ChartId chart = ChartId::FullPhase;
    Vec<3> state{};
    double eta = 0.0;               ///< value of the independent variable at the seed
    double family_parameter = 0.0;  ///< k, C or f(0)
    double offset = 0.0;            ///< distance from the critical point
    std::vector<std::string> warnings;
};

/// Starting point on the center manifold of Q1 for the orbit C_k with lim Z = k.
/// Y0 = X0 * y(1/X0, k/X0) = -a + a(k - Z0)/X0 exactly after the cancellation c2 = -a Z0.
inline SeedPoint seed_center_Q1(double k, const Model& m, double X0 = 1e6) {
    if (!(k > 0.0)) throw DomainError("seed_center_Q1: k must be > 0");
    if (!(X0 > 0.0)) throw DomainError("seed_center_Q1: X0 must be > 0");
    SeedPoint sp;
    const double a = m.c.a;
    sp.state = {X0, -a + a * (k - m.c.Z0) / X0, k};
    sp.eta = 0.5 * std::log(X0 / m.c.alpha);
    sp.family_parameter = k;
    sp.offset = 1.0 / X0;
    if (X0 < 1e3) sp.warnings.push_back("seed_center_Q1: X0 < 1e3, expansion accuracy degrades");
    return sp;
}

/// C = lim Z / X^((sigma+2)/2) for the orbit with f(0) = f0.
inline double c_from_f0(double f0, const Model& m) {
    return std::pow(f0, m.p() - 1.0) * std::pow(m.c.alpha, -(m.sigma() + 2.0) / 2.0);
}

inline double f0_from_c(double C, const Model& m) {
    return std::pow(C * std::pow(m.c.alpha, (m.sigma() + 2.0) / 2.0), 1.0 / (m.p() - 1.0));
}

/// Profile near the origin for sigma < 0: f = [K + (p-1) xi^(sigma+2)/((N+sigma)(sigma+2))]^(-1/(p-1)).
inline ProfileState origin_series_negative(double f0, double xi, const Model& m) {
    const double n = m.N(), s = m.sigma(), p = m.p();
    const double K = std::pow(f0, 1.0 - p);
    const double br = K + (p - 1.0) * std::pow(xi, s + 2.0) / ((n + s) * (s + 2.0));
    ProfileState st;
    st.xi = xi;
    st.f = std::pow(br, -1.0 / (p - 1.0));
    st.fp = -std::pow(xi, s + 1.0) * std::pow(br, -p / (p - 1.0)) / (n + s);
    return st;
}

/// Seed on the two-dimensional unstable manifold of P0.
/// sigma >= 0: `param` is C and the seed has X = eps.
/// sigma < 0: `param` is f(0); xi0 solves xi0^(sigma+2) max(1, f0^(p-1)) = eps, so that
/// both xi0^(sigma+2) <= eps and Z(xi0) ~ eps.
inline SeedPoint seed_unstable_P0(double param, const Model& m, double eps = 1e-8) {
    if (!(param > 0.0)) throw DomainError("seed_unstable_P0: family parameter must be > 0");
    if (!(eps > 0.0) || eps > 1e-2) throw DomainError("seed_unstable_P0: eps must lie in (0, 1e-2]");
    const double n = m.N(), s = m.sigma();
    SeedPoint sp;
    sp.family_parameter = param;
    if (s >= 0.0) {
        const double X = eps;
        const double Z = param * std::pow(eps, (s + 2.0) / 2.0);
        sp.state = {X, X / n - Z / (n + s), Z};
        sp.eta = 0.5 * std::log(X / m.c.alpha);
    } else {
        const double f0 = param;
        const double scale = std::max(1.0, std::pow(f0, m.p() - 1.0));
        const double xi0 = std::pow(eps / scale, 1.0 / (s + 2.0));
        const PhasePoint P = to_phase(origin_series_negative(f0, xi0, m), m);
        sp.state = {P.X, P.Y, P.Z};
        sp.eta = std::log(xi0);
    }
    sp.offset = std::max({sp.state[0], std::abs(sp.state[1]), sp.state[2]});
    return sp;
}

/// Seed for sigma >= 0 given f(0) instead of C.
inline SeedPoint seed_unstable_P0_from_f0(double f0, const Model& m, double eps = 1e-8) {
    if (m.sigma() < 0.0) return seed_unstable_P0(f0, m, eps);
    SeedPoint sp = seed_unstable_P0(c_from_f0(f0, m), m, eps);
    return sp;
}

struct GammaSpecial {
    double gamma0;
    double tail_exponent;   ///< sigma/(p-1)
    double tail_amplitude;  ///< (1/(p-1))^(1/(p-1))
};

inline GammaSpecial gamma_special(const Model& m) {
    const double q = m.c.alpha * (m.p() - 1.0);
    GammaSpecial g;
    g.gamma0 = q / std::sqrt(1.0 + q * q);
    g.tail_exponent = m.sigma() / (m.p() - 1.0);
    g.tail_amplitude = std::pow(1.0 / (m.p() - 1.0), 1.0 / (m.p() - 1.0));
    return g;
}

}  // namespace henon
