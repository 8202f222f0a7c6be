#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "henon/integrator.hpp"
#include "henon/shooting.hpp"

namespace henon {

struct Profile {
    std::vector<double> xi, f, fp;  ///< xi strictly increasing
    std::vector<Vec<3>> phase;      ///< (X, Y, Z) per sample, empty for direct shots
    double f0 = 0.0;
    double tail_K = 0.0;            ///< 0 when the profile does not reach Q1
    int intersections = 0;
    bool identical_to_stationary = false;
    bool monotone_decreasing = false;
    Terminal end = Terminal::Ambiguous;  ///< behavior at the large-xi end
    Terminal origin = Terminal::Ambiguous;
    std::vector<std::string> warnings;

    std::size_t size() const { return xi.size(); }
    bool reaches_q1() const { return end == Terminal::HitQ1; }
};

struct IntersectionCount {
    int count = 0;
    bool identical = false;  ///< g - C(sigma) vanishes to 1e-9 everywhere
};

inline double stationary_value(double xi, const Model& m) { return m.c.C_sigma * std::pow(xi, -m.c.a); }

/// Sign changes of xi^a f - C(sigma); "identical" below 1e-9 sup-distance.
inline IntersectionCount count_stationary_intersections(const Profile& pr, const Model& m) {
    IntersectionCount r;
    const double C = m.c.C_sigma;
    double sup = 0.0;
    int prev = 0;
    for (std::size_t i = 0; i < pr.size(); ++i) {
        const double d = std::pow(pr.xi[i], m.c.a) * pr.f[i] - C;
        sup = std::max(sup, std::abs(d));
        const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (s != 0) {
            if (prev != 0 && s != prev) ++r.count;
            prev = s;
        }
    }
    if (sup < 1e-9 * std::max(1.0, C)) {
        r.identical = true;
        r.count = 0;
    }
    return r;
}

/// f(0) from the sample closest to the origin, inverting the origin expansion.
inline double origin_value(double xi, double f, const Model& m) {
    const double n = m.N(), s = m.sigma(), p = m.p();
    if (s >= 0.0) {
        double f0 = f * std::exp(-m.c.alpha * xi * xi / (2.0 * n));
        for (int i = 0; i < 3; ++i) {
            const double corr = 1.0 - std::pow(f0, p - 1.0) * std::pow(xi, s + 2.0) / ((s + 2.0) * (n + s));
            f0 = f * std::exp(-m.c.alpha * xi * xi / (2.0 * n)) / corr;
        }
        return f0;
    }
    const double K = std::pow(f, 1.0 - p) - (p - 1.0) * std::pow(xi, s + 2.0) / ((n + s) * (s + 2.0));
    if (!(K > 0.0)) throw DomainError("origin_value: sample too far from the origin");
    return std::pow(K, -1.0 / (p - 1.0));
}

namespace detail {

inline void finish_profile(Profile& pr, const Model& m) {
    if (pr.size() == 0) throw DomainError("profile has no samples");
    try {
        pr.f0 = origin_value(pr.xi.front(), pr.f.front(), m);
    } catch (const DomainError&) {
        pr.f0 = std::numeric_limits<double>::quiet_NaN();  // first sample is not near the origin
    }
    const auto ic = count_stationary_intersections(pr, m);
    pr.intersections = ic.count;
    pr.identical_to_stationary = ic.identical;
    pr.monotone_decreasing = pr.size() > 1;
    for (std::size_t i = 1; i < pr.size(); ++i)
        if (!(pr.f[i] < pr.f[i - 1])) pr.monotone_decreasing = false;
}

}  // namespace detail

/// Inverse phase map applied to every sample. `end` is the behavior of the orbit at
/// large X (HitQ1 for C_k orbits and verified connections).
inline Profile reconstruct_profile(const Trajectory& tr, const Model& m, Terminal end, Terminal origin = Terminal::Ambiguous) {
    if (tr.chart != ChartId::FullPhase) throw DomainError("reconstruct_profile: FullPhase trajectory required");
    std::vector<std::size_t> idx(tr.x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (!(tr.x[i][0] > 0.0)) throw DomainError("reconstruct_profile: sample with X <= 0");
        if (!(tr.x[i][2] > 0.0)) throw DomainError("reconstruct_profile: sample with Z <= 0");
        idx[i] = i;
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return tr.x[a][0] < tr.x[b][0]; });
    Profile pr;
    pr.end = end;
    pr.origin = origin;
    for (std::size_t i : idx) {
        const auto& s = tr.x[i];
        const XiF q = from_phase({s[0], s[1], s[2]}, m);
        if (!pr.xi.empty() && !(q.xi > pr.xi.back())) continue;
        pr.xi.push_back(q.xi);
        pr.f.push_back(q.f);
        pr.fp.push_back(s[1] * q.f / q.xi);
        pr.phase.push_back(s);
    }
    detail::finish_profile(pr, m);
    if (pr.reaches_q1()) pr.tail_K = std::pow(pr.phase.back()[2], 1.0 / (m.p() - 1.0));
    return pr;
}

inline Profile reconstruct_profile(const Trajectory& tr, const Model& m) {
    const Terminal end = tr.direction == Direction::Forward ? tr.terminal : Terminal::Ambiguous;
    const Terminal origin = tr.direction == Direction::Backward ? tr.terminal : Terminal::Ambiguous;
    return reconstruct_profile(tr, m, end, origin);
}

inline Profile reconstruct_profile(const Connection& cn, const Model& m) {
    return reconstruct_profile(cn.orbit, m, cn.end, cn.origin);
}

struct TailInfo {
    double K = 0.0;             ///< (Z at the last sample)^(1/(p-1))
    double K_average = 0.0;     ///< mean of xi^a f over the last decade of xi
    double relative_gap = 0.0;  ///< |K - K_average| / K
    double derivative_limit = 0.0;                ///< -a K
    std::vector<double> derivative_deviation;     ///< |xi^(a+1) f' - limit| over the last decade
    bool deviation_decreasing = false;
};

inline TailInfo tail_constant(const Profile& pr, const Model& m) {
    if (!pr.reaches_q1()) throw DomainError("tail_constant: profile does not reach Q1");
    const double a = m.c.a;
    TailInfo t;
    const double xmax = pr.xi.back();
    t.K = pr.phase.empty() ? std::pow(xmax, a) * pr.f.back() : std::pow(pr.phase.back()[2], 1.0 / (m.p() - 1.0));
    t.derivative_limit = -a * t.K;
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < pr.size(); ++i) {
        if (pr.xi[i] < 0.1 * xmax) continue;
        sum += std::pow(pr.xi[i], a) * pr.f[i];
        ++n;
        t.derivative_deviation.push_back(std::abs(std::pow(pr.xi[i], a + 1.0) * pr.fp[i] - t.derivative_limit));
    }
    t.K_average = n > 0 ? sum / n : t.K;
    t.relative_gap = std::abs(t.K - t.K_average) / t.K;
    // Monotone decay up to rounding at the level of the limit itself.
    const double floor = 1e-12 * std::abs(t.derivative_limit);
    t.deviation_decreasing = !t.derivative_deviation.empty();
    for (std::size_t i = 1; i < t.derivative_deviation.size(); ++i)
        if (t.derivative_deviation[i] > t.derivative_deviation[i - 1] + floor) t.deviation_decreasing = false;
    return t;
}

/// Profile of the singular stationary solution on [xi_lo, xi_hi].
inline Profile stationary_profile(const Model& m, double xi_lo = 0.1, double xi_hi = 10.0, int n = 200) {
    Profile pr;
    const double a = m.c.a;
    for (int i = 0; i < n; ++i) {
        const double xi = xi_lo * std::pow(xi_hi / xi_lo, static_cast<double>(i) / (n - 1));
        const double f = stationary_value(xi, m);
        pr.xi.push_back(xi);
        pr.f.push_back(f);
        pr.fp.push_back(-a * f / xi);
        pr.phase.push_back({m.c.alpha * xi * xi, -a, m.c.Z0});
    }
    pr.end = Terminal::HitQ1;
    pr.tail_K = m.c.C_sigma;
    const auto ic = count_stationary_intersections(pr, m);
    pr.intersections = ic.count;
    pr.identical_to_stationary = ic.identical;
    pr.monotone_decreasing = true;
    pr.f0 = std::numeric_limits<double>::infinity();
    return pr;
}

// ---------------------------------------------------------------------------
// Residuals.

/// f'' + (N-1)f'/xi - xi f'/2 - alpha f + xi^sigma f^p.
inline double ssode_residual(double xi, double f, double fp, double fpp, const Model& m) {
    return fpp + (m.N() - 1.0) / xi * fp - 0.5 * xi * fp - m.c.alpha * f + std::pow(xi, m.sigma()) * std::pow(f, m.p());
}

/// Largest magnitude among the terms of the residual, used to scale it.
inline double ssode_scale(double xi, double f, double fp, double fpp, const Model& m) {
    return std::max({std::abs(fpp), std::abs((m.N() - 1.0) / xi * fp), std::abs(0.5 * xi * fp), std::abs(m.c.alpha * f),
                     std::abs(std::pow(xi, m.sigma()) * std::pow(f, m.p()))});
}

/// f'' at a phase sample: Y = xi f'/f gives f'' = f (Y' - Y + Y^2) / xi^2 with Y' from the phase field.
inline double fpp_from_phase(const Vec<3>& s, double xi, double f, const Model& m) {
    Vec<3> d;
    field::FullPhase{&m}(0.0, s, d);
    return f * (d[1] - s[1] + s[1] * s[1]) / (xi * xi);
}

/// Residual of the profile equation at every sample, normalised by max(1, |f''|).
inline std::vector<double> profile_residuals(const Profile& pr, const Model& m) {
    std::vector<double> r;
    for (std::size_t i = 0; i < pr.size(); ++i) {
        double fpp;
        if (!pr.phase.empty()) {
            fpp = fpp_from_phase(pr.phase[i], pr.xi[i], pr.f[i], m);
        } else {
            Vec<2> d;
            field::ProfileODE{&m}(pr.xi[i], {pr.f[i], pr.fp[i]}, d);
            fpp = d[1];
        }
        r.push_back(std::abs(ssode_residual(pr.xi[i], pr.f[i], pr.fp[i], fpp, m)) / std::max(1.0, std::abs(fpp)));
    }
    return r;
}

struct GSample {
    double s, g, gp, gpp;
};

/// g(s) = xi^a f(xi), s = ln xi, with derivatives from the phase field: g' = g (a + Y), g'' = g'(a + Y) + g Y'.
inline std::vector<GSample> g_transform(const Profile& pr, const Model& m) {
    if (pr.phase.empty()) throw DomainError("g_transform: phase samples required");
    std::vector<GSample> out;
    const double a = m.c.a;
    for (std::size_t i = 0; i < pr.size(); ++i) {
        const auto& st = pr.phase[i];
        Vec<3> d;
        field::FullPhase{&m}(0.0, st, d);
        GSample q;
        q.s = std::log(pr.xi[i]);
        q.g = std::pow(pr.xi[i], a) * pr.f[i];
        q.gp = q.g * (a + st[1]);
        q.gpp = q.gp * (a + st[1]) + q.g * d[1];
        out.push_back(q);
    }
    return out;
}

inline double g_residual(const GSample& q, const Model& m) {
    Vec<2> d;
    field::GEquation{&m}(q.s, {q.g, q.gp}, d);
    return q.gpp - d[1];
}

// ---------------------------------------------------------------------------
// Linearized equation at the stationary solution.

struct ZeroCount {
    int zeros = 0;
    std::vector<double> zero_s;  ///< approximate locations
    bool span_warning = false;   ///< a zero lies within 1 of s_min
};

inline ZeroCount linear_zero_count(const Model& m, double K, double s_max = 6.0, double s_min = -40.0,
                                   const Controls& base = {}) {
    if (!(K > 0.0)) throw DomainError("linear_zero_count: K must be > 0");
    const double disc = m.c.A * m.c.A - 4.0 * m.c.B;
    if (!(disc >= 0.0)) throw DomainError("linear_zero_count: requires A^2 >= 4B");
    ZeroCount zc;
    Vec<3> y{K, 2.0 * m.c.B * K * std::exp(-2.0 * s_max), 0.0};
    Controls c = base;
    c.record_samples = true;
    c.sample_min_dt = 0.0;
    int prev = y[0] > 0 ? 1 : -1;
    double s = s_max;
    const double seg = 2.0;
    while (s > s_min) {
        const double len = std::min(seg, s - s_min);
        c.max_span = len;
        const Trajectory tr = integrate(ChartId::Linearized, y, s, Direction::Backward, {}, c, m);
        if (tr.terminal == Terminal::StepFailure) throw SingularityError("linear_zero_count: step failure");
        for (std::size_t i = 0; i < tr.x.size(); ++i) {
            const double v = tr.x[i][0];
            const int sg = v > 0 ? 1 : (v < 0 ? -1 : 0);
            if (sg != 0 && sg != prev) {
                ++zc.zeros;
                zc.zero_s.push_back(tr.t[i]);
                prev = sg;
            }
        }
        // Renormalise: only the sign pattern matters.
        const double nrm = std::max(std::abs(tr.last[0]), std::abs(tr.last[1]));
        if (!(nrm > 0.0) || !std::isfinite(nrm)) throw SingularityError("linear_zero_count: degenerate solution");
        y = {tr.last[0] / nrm, tr.last[1] / nrm, 0.0};
        s = tr.t_end;
        if (tr.terminal != Terminal::SpanExhausted) break;
    }
    for (double z : zc.zero_s)
        if (z < s_min + 1.0) zc.span_warning = true;
    return zc;
}

// ---------------------------------------------------------------------------
// Direct integration of the profile equation from the origin.

struct DirectShot {
    Trajectory trajectory;  ///< ProfileODE chart, t = xi
    Profile profile;
};

/// Origin data at xi0: series with f'(0) = 0 for sigma >= 0, the singular series for sigma < 0.
inline ProfileState origin_state(double f0, double xi0, const Model& m) {
    const double n = m.N(), s = m.sigma(), p = m.p();
    if (s < 0.0) return origin_series_negative(f0, xi0, m);
    const double al = m.c.alpha;
    const double q = std::pow(f0, p - 1.0);
    const double e = std::exp(al * xi0 * xi0 / (2.0 * n));
    ProfileState st;
    st.xi = xi0;
    st.f = f0 * e * (1.0 - q * std::pow(xi0, s + 2.0) / ((s + 2.0) * (n + s)));
    st.fp = st.f * (al * xi0 / n - q * std::pow(xi0, s + 1.0) / (n + s));
    return st;
}

inline DirectShot direct_shoot_ssode(double f0, const Model& m, double xi_end = 5.0, const Controls& base = {}) {
    if (!(f0 > 0.0)) throw DomainError("direct_shoot_ssode: f0 must be > 0");
    const double xi0 = m.sigma() < 0.0 ? 1e-6 : 1e-4;
    if (!(xi_end > xi0)) throw DomainError("direct_shoot_ssode: xi_end too small");
    const ProfileState st = origin_state(f0, xi0, m);
    Controls c = base;
    c.max_span = xi_end - xi0;
    c.record_samples = true;
    DirectShot ds;
    ds.trajectory = integrate(ChartId::ProfileODE, {st.f, st.fp, 0.0}, xi0, Direction::Forward, {}, c, m);
    Profile& pr = ds.profile;
    for (std::size_t i = 0; i < ds.trajectory.t.size(); ++i) {
        if (!(ds.trajectory.x[i][0] > 0.0)) continue;
        if (!pr.xi.empty() && !(ds.trajectory.t[i] > pr.xi.back())) continue;
        pr.xi.push_back(ds.trajectory.t[i]);
        pr.f.push_back(ds.trajectory.x[i][0]);
        pr.fp.push_back(ds.trajectory.x[i][1]);
    }
    pr.end = ds.trajectory.terminal;
    pr.origin = Terminal::HitP0;
    detail::finish_profile(pr, m);
    pr.f0 = f0;
    return ds;
}

// ---------------------------------------------------------------------------
// Evaluation.

/// f(xi) by cubic Hermite interpolation; origin series below the first sample and K xi^-a beyond the last.
inline double evaluate_profile(const Profile& pr, double xi, const Model& m) {
    if (pr.size() == 0) throw DomainError("evaluate_profile: empty profile");
    if (!(xi >= 0.0)) throw DomainError("evaluate_profile: xi must be >= 0");
    if (xi < pr.xi.front()) {
        if (!std::isfinite(pr.f0)) throw DomainError("evaluate_profile: singular at the origin");
        if (xi == 0.0) return pr.f0;
        return origin_state(pr.f0, xi, m).f;
    }
    if (xi > pr.xi.back()) {
        if (!(pr.tail_K > 0.0)) throw DomainError("evaluate_profile: beyond the last sample without a tail law");
        return pr.tail_K * std::pow(xi, -m.c.a);
    }
    const auto it = std::upper_bound(pr.xi.begin(), pr.xi.end(), xi);
    std::size_t j = static_cast<std::size_t>(it - pr.xi.begin());
    if (j >= pr.size()) return pr.f.back();
    const std::size_t i = j - 1;
    const double h = pr.xi[j] - pr.xi[i];
    const double s = (xi - pr.xi[i]) / h, s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * pr.f[i] + (s3 - 2 * s2 + s) * h * pr.fp[i] + (-2 * s3 + 3 * s2) * pr.f[j] +
           (s3 - s2) * h * pr.fp[j];
}

/// u(x, t) = (T - t)^-alpha f(|x| (T - t)^-1/2).
inline double evaluate_solution(const Profile& pr, double x_norm, double t, double T, const Model& m) {
    if (!(t < T)) throw DomainError("evaluate_solution: t must be < T");
    if (!(x_norm >= 0.0)) throw DomainError("evaluate_solution: |x| must be >= 0");
    const double tau = T - t;
    return std::pow(tau, -m.c.alpha) * evaluate_profile(pr, x_norm / std::sqrt(tau), m);
}

/// Largest relative difference of two profiles on n log-spaced points of [lo, hi].
inline double profile_distance(const Profile& a, const Profile& b, const Model& m, double lo = 0.1, double hi = 3.0,
                               int n = 200) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double xi = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
        const double fa = evaluate_profile(a, xi, m), fb = evaluate_profile(b, xi, m);
        worst = std::max(worst, std::abs(fa - fb) / std::max(std::abs(fa), std::abs(fb)));
    }
    return worst;
}

}  // namespace henon
