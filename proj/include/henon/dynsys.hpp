#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "henon/error.hpp"
#include "henon/exponents.hpp"

namespace henon {

/// Parameters together with the constants every field needs.
struct Model {
    RegimeParams params;
    DerivedConstants c;
    double xi_min = 1e-8;  ///< smallest xi at which the profile ODE is evaluated when sigma < 0

    explicit Model(const RegimeParams& prm) : params(prm), c(profile_constants(prm)) {}
    Model(int N, double sigma, double p) : Model(RegimeParams(N, sigma, p)) {}

    double N() const { return params.N; }
    double sigma() const { return params.sigma; }
    double p() const { return params.p; }
};

enum class ChartId {
    FullPhase,    ///< (X, Y, Z), time eta = ln xi
    ProfileODE,   ///< (f, f'), time xi
    InfX,         ///< (x, y, z) = (1/X, Y/X, Z/X)
    InfYPlus,     ///< (x~, z~, w~) = (X/Y, Z/Y, 1/Y) near Q3
    InfYMinus,    ///< same coordinates near Q2
    InfZ,         ///< (X/Z, Y/Z, 1/Z) near Q4
    PlaneX0,      ///< (Y, Z) in {X = 0}
    PlaneZ0,      ///< (X, Y) in {Z = 0}
    WPlane,       ///< (y, w), w = x z, restriction of InfX to {x = 0}
    GEquation,    ///< (g, g'), time s = ln xi
    Linearized,   ///< (y, y'), time s = ln xi
};

inline constexpr std::size_t chart_dim(ChartId c) {
    switch (c) {
    case ChartId::FullPhase:
    case ChartId::InfX:
    case ChartId::InfYPlus:
    case ChartId::InfYMinus:
    case ChartId::InfZ: return 3;
    default: return 2;
    }
}

inline std::string chart_name(ChartId c) {
    switch (c) {
    case ChartId::FullPhase: return "FullPhase";
    case ChartId::ProfileODE: return "ProfileODE";
    case ChartId::InfX: return "InfX";
    case ChartId::InfYPlus: return "InfYPlus";
    case ChartId::InfYMinus: return "InfYMinus";
    case ChartId::InfZ: return "InfZ";
    case ChartId::PlaneX0: return "PlaneX0";
    case ChartId::PlaneZ0: return "PlaneZ0";
    case ChartId::WPlane: return "WPlane";
    case ChartId::GEquation: return "GEquation";
    case ChartId::Linearized: return "Linearized";
    }
    return "?";
}

/// Column names for CSV output: time column first.
inline std::vector<std::string> chart_columns(ChartId c) {
    switch (c) {
    case ChartId::FullPhase: return {"eta", "X", "Y", "Z"};
    case ChartId::ProfileODE: return {"xi", "f", "fprime"};
    case ChartId::InfX: return {"eta1", "x", "y", "z"};
    case ChartId::InfYPlus:
    case ChartId::InfYMinus: return {"eta2", "xt", "zt", "wt"};
    case ChartId::InfZ: return {"eta3", "u", "v", "w"};
    case ChartId::PlaneX0: return {"eta", "Y", "Z"};
    case ChartId::PlaneZ0: return {"eta", "X", "Y"};
    case ChartId::WPlane: return {"eta1", "y", "w"};
    case ChartId::GEquation: return {"s", "g", "gprime"};
    case ChartId::Linearized: return {"s", "y", "yprime"};
    }
    return {};
}

template <std::size_t D>
using Vec = std::array<double, D>;

/// f |f|^(p-1), defined for negative f as well.
inline double signed_pow(double f, double p) {
    return f == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(f), p), f);
}

namespace field {

// Each field: dim, and operator()(t, state, out). Time is eta, xi or s depending on chart.

struct FullPhase {
    static constexpr std::size_t dim = 3;
    const Model* m;
    void operator()(double, const Vec<3>& s, Vec<3>& o) const {
        const double a = m->c.a, nm2 = m->N() - 2.0;
        const double X = s[0], Y = s[1], Z = s[2];
        const double u = Y + a;
        o[0] = 2.0 * X;
        o[1] = X * u / a - (Z + Y * (Y + nm2));
        o[2] = (m->p() - 1.0) * Z * u;
    }
};

/// Deviation from the stationary line: (X, u, v) = (X, Y + a, Z - Z0).
struct StationaryFrame {
    static constexpr std::size_t dim = 3;
    const Model* m;
    void operator()(double, const Vec<3>& s, Vec<3>& o) const {
        const double a = m->c.a;
        const double X = s[0], u = s[1], v = s[2];
        o[0] = 2.0 * X;
        o[1] = X * u / a - v - u * (u + m->c.A);
        o[2] = (m->p() - 1.0) * (v + m->c.Z0) * u;
    }
    /// Errors in (u, v) are measured against the size of the deviation itself, so that
    /// orbits shadowing the line keep the sign of a deviation far below any absolute tolerance.
    template <class C>
    double error_scale(std::size_t i, const Vec<3>& y0, const Vec<3>& y1, const C& c) const {
        if (i == 0) return c.atol + c.rtol * std::max(std::abs(y0[0]), std::abs(y1[0]));
        const double a = m->c.a, Z0 = m->c.Z0;
        const double dev = std::max({std::abs(y0[1]) / a, std::abs(y1[1]) / a, std::abs(y0[2]) / Z0, std::abs(y1[2]) / Z0});
        const double ref = i == 1 ? a : Z0;
        return c.rtol * ref * dev + 1e-300;
    }
};

struct ProfileODE {
    static constexpr std::size_t dim = 2;
    const Model* m;
    void operator()(double xi, const Vec<2>& s, Vec<2>& o) const {
        if (!(xi > 0.0)) throw SingularityError("profile ODE evaluated at xi <= 0");
        const double sg = m->sigma();
        if (sg < 0.0 && xi < m->xi_min)
            throw SingularityError("profile ODE evaluated below xi_min for sigma < 0");
        const double f = s[0], fp = s[1];
        o[0] = fp;
        o[1] = -(m->N() - 1.0) / xi * fp + 0.5 * xi * fp + m->c.alpha * f -
               std::pow(xi, sg) * signed_pow(f, m->p());
    }
};

struct InfX {
    static constexpr std::size_t dim = 3;
    const Model* m;
    void operator()(double, const Vec<3>& s, Vec<3>& o) const {
        const double x = s[0], y = s[1], z = s[2];
        o[0] = -2.0 * x * x;
        o[1] = -y * y + m->c.b * y + x - m->N() * x * y - x * z;
        o[2] = z * ((m->p() - 1.0) * y + m->sigma() * x);
    }
};

/// sign = +1 near Q3, -1 near Q2.
struct InfY {
    static constexpr std::size_t dim = 3;
    const Model* m;
    double sign;
    void operator()(double, const Vec<3>& s, Vec<3>& o) const {
        const double x = s[0], z = s[1], w = s[2];
        const double b = m->c.b, n = m->N();
        o[0] = sign * (-x - n * x * w + b * x * x + x * x * w - x * z * w);
        o[1] = sign * (-m->p() * z - (n + m->sigma()) * z * w + b * x * z + x * z * w - z * z * w);
        o[2] = sign * (-w - (n - 2.0) * w * w + b * x * w + x * w * w - z * w * w);
    }
};

/// (u, v, w) = (X/Z, Y/Z, 1/Z), time d eta3 = Z d eta.
struct InfZ {
    static constexpr std::size_t dim = 3;
    const Model* m;
    void operator()(double, const Vec<3>& s, Vec<3>& o) const {
        const double u = s[0], v = s[1], w = s[2];
        const double pm1 = m->p() - 1.0, sg = m->sigma();
        o[0] = -sg * u * w - pm1 * u * v;
        o[1] = u * w - (m->N() + sg) * v * w - w - m->p() * v * v + m->c.b * u * v;
        o[2] = -(sg + 2.0) * w * w - pm1 * v * w;
    }
};

struct PlaneX0 {
    static constexpr std::size_t dim = 2;
    const Model* m;
    void operator()(double, const Vec<2>& s, Vec<2>& o) const {
        const double Y = s[0], Z = s[1];
        o[0] = -(Z + Y * (Y + (m->N() - 2.0)));
        o[1] = (m->p() - 1.0) * Z * (Y + m->c.a);
    }
};

struct PlaneZ0 {
    static constexpr std::size_t dim = 2;
    const Model* m;
    void operator()(double, const Vec<2>& s, Vec<2>& o) const {
        const double X = s[0], Y = s[1];
        o[0] = 2.0 * X;
        o[1] = X * (Y + m->c.a) / m->c.a - (0.0 + Y * (Y + (m->N() - 2.0)));
    }
};

struct WPlane {
    static constexpr std::size_t dim = 2;
    const Model* m;
    void operator()(double, const Vec<2>& s, Vec<2>& o) const {
        const double y = s[0], w = s[1];
        o[0] = -y * y + m->c.b * y - w;
        o[1] = (m->p() - 1.0) * y * w;
    }
};

struct GEquation {
    static constexpr std::size_t dim = 2;
    const Model* m;
    void operator()(double s, const Vec<2>& st, Vec<2>& o) const {
        const double g = st[0], gp = st[1];
        o[0] = gp;
        o[1] = -m->c.A * gp + m->c.B / (m->p() - 1.0) * g - signed_pow(g, m->p()) +
               0.5 * std::exp(2.0 * s) * gp;
    }
};

struct Linearized {
    static constexpr std::size_t dim = 2;
    const Model* m;
    void operator()(double s, const Vec<2>& st, Vec<2>& o) const {
        const double y = st[0], yp = st[1];
        o[0] = yp;
        o[1] = -m->c.A * yp - m->c.B * y + 0.5 * std::exp(2.0 * s) * yp;
    }
};

}  // namespace field

/// Right-hand side of the selected chart. `t` is the independent variable
/// (only used by the non-autonomous charts ProfileODE, GEquation, Linearized).
inline std::vector<double> eval_field(ChartId chart, const std::vector<double>& state,
                                      const Model& m, double t = 0.0) {
    if (state.size() != chart_dim(chart)) throw DomainError("eval_field: state dimension mismatch");
    auto run3 = [&](auto f) {
        Vec<3> s{state[0], state[1], state[2]}, o{};
        f(t, s, o);
        return std::vector<double>(o.begin(), o.end());
    };
    auto run2 = [&](auto f) {
        Vec<2> s{state[0], state[1]}, o{};
        f(t, s, o);
        return std::vector<double>(o.begin(), o.end());
    };
    switch (chart) {
    case ChartId::FullPhase: return run3(field::FullPhase{&m});
    case ChartId::InfX: return run3(field::InfX{&m});
    case ChartId::InfYPlus: return run3(field::InfY{&m, +1.0});
    case ChartId::InfYMinus: return run3(field::InfY{&m, -1.0});
    case ChartId::InfZ: return run3(field::InfZ{&m});
    case ChartId::ProfileODE: return run2(field::ProfileODE{&m});
    case ChartId::PlaneX0: return run2(field::PlaneX0{&m});
    case ChartId::PlaneZ0: return run2(field::PlaneZ0{&m});
    case ChartId::WPlane: return run2(field::WPlane{&m});
    case ChartId::GEquation: return run2(field::GEquation{&m});
    case ChartId::Linearized: return run2(field::Linearized{&m});
    }
    throw DomainError("eval_field: unknown chart");
}

struct PhasePoint {
    double X = 0.0, Y = 0.0, Z = 0.0;
    bool in_positive_region() const { return X > 0.0 && Z > 0.0; }
};

struct ProfileState {
    double xi = 0.0, f = 0.0, fp = 0.0;
};

inline PhasePoint to_phase(const ProfileState& s, const Model& m) {
    if (!(s.xi > 0.0)) throw DomainError("to_phase: xi must be > 0");
    if (!(s.f > 0.0)) throw DomainError("to_phase: f must be > 0");
    PhasePoint P;
    P.X = m.c.alpha * s.xi * s.xi;
    P.Y = s.xi * s.fp / s.f;
    P.Z = std::pow(s.xi, m.sigma() + 2.0) * std::pow(s.f, m.p() - 1.0);
    return P;
}

struct XiF {
    double xi, f;
};

inline XiF from_phase(const PhasePoint& P, const Model& m) {
    if (!(P.X > 0.0)) throw DomainError("from_phase: X must be > 0");
    if (!(P.Z > 0.0)) throw DomainError("from_phase: Z must be > 0");
    const double xi = std::sqrt(P.X / m.c.alpha);
    const double f = std::pow(xi, -m.c.a) * std::pow(P.Z, 1.0 / (m.p() - 1.0));
    return {xi, f};
}

inline Vec<3> chart_x(const PhasePoint& P) {
    if (!(P.X > 0.0)) throw DomainError("chart_x: X must be > 0");
    return {1.0 / P.X, P.Y / P.X, P.Z / P.X};
}

inline Vec<3> chart_y(const PhasePoint& P) {
    if (P.Y == 0.0) throw DomainError("chart_y: Y must be nonzero");
    return {P.X / P.Y, P.Z / P.Y, 1.0 / P.Y};
}

inline Vec<3> chart_z(const PhasePoint& P) {
    if (!(P.Z > 0.0)) throw DomainError("chart_z: Z must be > 0");
    return {P.X / P.Z, P.Y / P.Z, 1.0 / P.Z};
}

/// Divergence of Z^e (Y', Z') in the plane {X = 0}, e = (3-p)/(p-1), which kills the Y-term.
inline double dulac_exponent(const Model& m) { return (3.0 - m.p()) / (m.p() - 1.0); }

inline double dulac_divergence(double /*Y*/, double Z, const Model& m) {
    if (!(Z > 0.0)) throw DomainError("dulac_divergence: Z must be > 0");
    const double n = m.N();
    const double pS = p_sobolev(m.params.N, m.sigma()).value();
    return (n - 2.0) / (m.p() - 1.0) * (pS - m.p()) * std::pow(Z, dulac_exponent(m));
}

}  // namespace henon
