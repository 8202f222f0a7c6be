#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "henon/integrator.hpp"
#include "henon/parallel.hpp"

namespace henon {

enum class SetLabel { U, W, V, A, B, C, Ambiguous };

inline std::string label_name(SetLabel l) {
    switch (l) {
    case SetLabel::U: return "U";
    case SetLabel::W: return "W";
    case SetLabel::V: return "V";
    case SetLabel::A: return "A";
    case SetLabel::B: return "B";
    case SetLabel::C: return "C";
    case SetLabel::Ambiguous: return "Ambiguous";
    }
    return "?";
}

struct ShootOptions {
    Controls controls{};
    Thresholds thresholds{};
    double seed_x0 = 1e6;          ///< X at which C_k orbits are seeded on the Q1 center manifold
    double seed_eps = 1e-8;        ///< offset of l_C seeds from P0
    double bisect_rel_tol = 1e-13; ///< bracket width relative to Z0 (backward) or to f0 (forward)
    int bisect_max_iter = 60;
    double agree_tol = 1e-7;       ///< bracket orbits count as equal below this relative distance
    double match_tol = 1e-6;       ///< accepted Y mismatch where the two halves of a connection meet
    long candidate_max_steps = 40'000'000;
    unsigned workers = 0;          ///< 0: hardware concurrency
};

struct ShotOutcome {
    double family_parameter = 0.0;
    int crossings_Z0 = 0;
    Terminal origin = Terminal::Ambiguous;  ///< where the shot ended
    SetLabel set_label = SetLabel::Ambiguous;
    double eta_span_used = 0.0;
    std::string diagnostic;
    std::shared_ptr<const Trajectory> trajectory;
};

/// Connecting orbit P0 -> Q1 assembled from a forward piece (leaving P0 on l_C) and a
/// backward piece (leaving Q1 on C_k) that agree at X = match_X.
struct Connection {
    Trajectory orbit;          ///< samples monotone in eta; P0 end and Q1 end included
    double C = 0.0;            ///< lim Z/X^((sigma+2)/2) at P0 (sigma >= 0)
    double f0 = 0.0;           ///< f(0)
    double k = 0.0;            ///< lim Z at Q1
    double match_X = 0.0;
    double match_dY = 0.0;     ///< |Y_forward - Y_backward| at match_X
    double match_dZ = 0.0;
    Terminal origin = Terminal::Ambiguous;  ///< P0 end
    Terminal end = Terminal::Ambiguous;     ///< Q1 end
    int crossings = 0;
    bool verified = false;
    std::string diagnostic;
};

struct Candidate {
    double family_parameter = 0.0;  ///< k1 (backward) or f0 (forward)
    double bracket_lo = 0.0, bracket_hi = 0.0;
    double bracket_width = 0.0;
    int iterations = 0;
    int crossings = 0;
    int level = 1;
    double tail_K = 0.0;
    double f0 = 0.0;
    std::shared_ptr<const Connection> connection;
    bool verified = false;
    std::string diagnostic;
};

// ---------------------------------------------------------------------------
// Backward shooting on the center manifold of Q1 (sigma >= 0).

/// Label with crossing thresholds 2*level (U) and >= 2*level+1 (W).
inline SetLabel backward_label(int crossings, Terminal origin, int level = 1) {
    if (crossings >= 2 * level + 1) return SetLabel::W;
    if (crossings == 2 * level && origin == Terminal::EscapeQ2) return SetLabel::U;
    return SetLabel::V;
}

inline ShotOutcome classify_backward(double k, const Model& m, const ShootOptions& opt = {}, int level = 1,
                                     bool keep_trajectory = false) {
    if (!(k > 0.0 && k < m.c.Z0)) throw DomainError("classify_backward: need 0 < k < Z0");
    if (m.sigma() < 0.0) throw DomainError("classify_backward: sigma >= 0 required");
    const SeedPoint seed = seed_center_Q1(k, m, opt.seed_x0);
    Controls c = opt.controls;
    c.record_samples = keep_trajectory;
    auto tr = std::make_shared<Trajectory>(
        integrate(seed, Direction::Backward, {EventSpec::cross_z0()}, c, m, opt.thresholds));
    ShotOutcome o;
    o.family_parameter = k;
    o.crossings_Z0 = tr->count(EventKind::CrossZ0);
    o.origin = tr->terminal;
    o.eta_span_used = tr->span_used();
    o.set_label = backward_label(o.crossings_Z0, o.origin, level);
    if (o.set_label == SetLabel::V) o.diagnostic = "terminal " + terminal_name(o.origin);
    if (tr->terminal == Terminal::SpanExhausted || tr->terminal == Terminal::StepFailure)
        o.diagnostic = "ambiguous: " + terminal_name(tr->terminal) + (tr->diagnostic.empty() ? "" : " (" + tr->diagnostic + ")");
    if (keep_trajectory) o.trajectory = tr;
    return o;
}

/// 256 uniform samples in (1e-3 Z0, (1-1e-3) Z0) by default.
inline std::vector<double> default_k_grid(const Model& m, int n = 256) {
    std::vector<double> g(n);
    const double lo = 1e-3, hi = 1.0 - 1e-3;
    for (int i = 0; i < n; ++i) g[i] = m.c.Z0 * (n == 1 ? lo : lo + (hi - lo) * i / (n - 1.0));
    return g;
}

/// Uniform grid plus `n_log` log-spaced samples in [1e-6 Z0, 1e-3 Z0), sorted.
inline std::vector<double> mixed_k_grid(const Model& m, int n = 256, int n_log = 32) {
    auto g = default_k_grid(m, n);
    for (int i = 0; i < n_log; ++i) g.push_back(m.c.Z0 * std::pow(10.0, -6.0 + 3.0 * i / n_log));
    std::sort(g.begin(), g.end());
    return g;
}

inline std::vector<ShotOutcome> sweep_backward(const std::vector<double>& grid, const Model& m,
                                               const ShootOptions& opt = {}, int level = 1) {
    return parallel_map(grid.size(), opt.workers, [&](std::size_t i) { return classify_backward(grid[i], m, opt, level); });
}

// ---------------------------------------------------------------------------
// Forward shooting on the unstable manifold of P0 (sigma < 0).

inline ShotOutcome classify_forward(double f0, const Model& m, const ShootOptions& opt = {}, bool keep_trajectory = false) {
    if (!(m.sigma() < 0.0)) throw DomainError("classify_forward: sigma < 0 required");
    if (!(f0 > 0.0)) throw DomainError("classify_forward: f0 must be > 0");
    const SeedPoint seed = seed_unstable_P0(f0, m, opt.seed_eps);
    Controls c = opt.controls;
    c.record_samples = keep_trajectory;
    std::vector<EventSpec> ev{EventSpec::cross_y_stat(Crossing::Down).stop(), EventSpec::cross_y_zero(Crossing::Up).stop()};
    auto tr = std::make_shared<Trajectory>(integrate(seed, Direction::Forward, ev, c, m, opt.thresholds));
    ShotOutcome o;
    o.family_parameter = f0;
    o.crossings_Z0 = 0;
    o.origin = tr->terminal;
    o.eta_span_used = tr->span_used();
    field::FullPhase F{&m};
    auto yprime = [&](const Vec<3>& s) {
        Vec<3> d;
        F(0.0, s, d);
        return d[1];
    };
    if (tr->terminal == Terminal::EventStop && !tr->events.empty()) {
        const auto& e = tr->events.back();
        const double yp = yprime(e.state);
        if (e.spec_index == 0) {
            o.set_label = SetLabel::A;
            if (!(yp <= 0.0)) o.diagnostic = "exit through Y=-a with Y' >= 0";
        } else {
            o.set_label = SetLabel::C;
            if (!(yp >= 0.0)) o.diagnostic = "exit through Y=0 with Y' <= 0";
        }
    } else if (tr->terminal == Terminal::HitQ1) {
        o.set_label = SetLabel::B;
    } else {
        o.set_label = SetLabel::Ambiguous;
        o.diagnostic = "terminal " + terminal_name(tr->terminal);
    }
    if (keep_trajectory) o.trajectory = tr;
    return o;
}

/// 256 log-uniform samples of f0 in [1e-3, 1e3] by default.
inline std::vector<double> default_f0_grid(int n = 256, double lo = 1e-3, double hi = 1e3) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = n == 1 ? lo : lo * std::pow(hi / lo, i / (n - 1.0));
    return g;
}

inline std::vector<ShotOutcome> sweep_forward(const std::vector<double>& grid, const Model& m, const ShootOptions& opt = {}) {
    return parallel_map(grid.size(), opt.workers, [&](std::size_t i) { return classify_forward(grid[i], m, opt); });
}

// ---------------------------------------------------------------------------
// Matching of the two halves of a connecting orbit.

namespace detail {

/// Root of f on the bracket [a, b] (f(a), f(b) of opposite sign) by the Illinois method.
template <class F>
double illinois(F&& f, double a, double b, double fa, double fb, double xtol, int max_iter = 100) {
    int side = 0;
    double c = a;
    for (int it = 0; it < max_iter; ++it) {
        c = (a * fb - b * fa) / (fb - fa);
        if (!(c > std::min(a, b) && c < std::max(a, b))) c = 0.5 * (a + b);
        const std::optional<double> fco = f(c);
        if (!fco) {
            // Invalid evaluation: fall back to bisection towards a.
            b = c;
            continue;
        }
        const double fc = *fco;
        if (fc == 0.0) return c;
        if ((fc < 0) == (fb < 0)) {
            b = c;
            fb = fc;
            if (side == -1) fa *= 0.5;
            side = -1;
        } else {
            a = c;
            fa = fc;
            if (side == +1) fb *= 0.5;
            side = +1;
        }
        if (std::abs(b - a) <= xtol * (1.0 + std::abs(c))) break;
    }
    return c;
}

/// Scans x0 +- j*step for the sign change of f nearest to x0, then refines it.
template <class F>
std::optional<double> scan_and_solve(F&& f, double x0, double step, int max_scan, double xtol) {
    std::optional<double> f0 = f(x0);
    std::optional<double> up_prev = f0, dn_prev = f0;
    double x_up = x0, x_dn = x0;
    for (int j = 1; j <= max_scan; ++j) {
        const double xu = x0 + j * step;
        const auto fu = f(xu);
        if (fu && up_prev && ((*fu < 0) != (*up_prev < 0)))
            return illinois([&](double x) { return f(x); }, x_up, xu, *up_prev, *fu, xtol);
        if (fu) {
            up_prev = fu;
            x_up = xu;
        }
        const double xd = x0 - j * step;
        const auto fd = f(xd);
        if (fd && dn_prev && ((*fd < 0) != (*dn_prev < 0)))
            return illinois([&](double x) { return f(x); }, xd, x_dn, *fd, *dn_prev, xtol);
        if (fd) {
            dn_prev = fd;
            x_dn = xd;
        }
    }
    return std::nullopt;
}

/// All sign changes of f on the grid x0 + j*step, |j| <= half_width, each refined.
template <class F>
std::vector<double> scan_all_roots(F&& f, double x0, double step, int half_width, double xtol) {
    std::vector<double> roots;
    std::optional<double> prev;
    double x_prev = 0.0;
    for (int j = -half_width; j <= half_width; ++j) {
        const double x = x0 + j * step;
        const auto fx = f(x);
        if (fx && prev && ((*fx < 0) != (*prev < 0)))
            roots.push_back(illinois([&](double z) { return f(z); }, x_prev, x, *prev, *fx, xtol));
        if (fx) {
            prev = fx;
            x_prev = x;
        }
    }
    return roots;
}

inline std::vector<double> match_levels(double lo, double hi, int per_decade = 8) {
    std::vector<double> v;
    const int n = static_cast<int>(std::round(std::log10(hi / lo) * per_decade));
    for (int i = 0; i <= n; ++i) v.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
    return v;
}

inline std::vector<EventSpec> level_events(const std::vector<double>& levels) {
    std::vector<EventSpec> ev;
    for (double L : levels)
        ev.push_back(EventSpec::custom("X=" + std::to_string(L), [L](double, const Vec<3>& s) { return s[0] - L; }));
    return ev;
}

/// State of each level crossing (first crossing only); nullopt when not reached.
inline std::vector<std::optional<Vec<3>>> level_states(const Trajectory& tr, std::size_t n_levels) {
    std::vector<std::optional<Vec<3>>> out(n_levels);
    for (const auto& e : tr.events)
        if (e.kind == EventKind::Custom && e.spec_index >= 0 && static_cast<std::size_t>(e.spec_index) < n_levels &&
            !out[e.spec_index])
            out[e.spec_index] = e.state;
    return out;
}

inline double rel_dist(const Vec<3>& a, const Vec<3>& b) {
    const double dy = std::abs(a[1] - b[1]) / std::max(1.0, std::abs(a[1]));
    const double dz = std::abs(a[2] - b[2]) / std::max(1.0, std::abs(a[2]));
    return std::max(dy, dz);
}

/// Appends samples of `src` with X beyond the match point to `dst`, in `dst`'s time order.
inline void append_tail(Trajectory& dst, const Trajectory& src, double match_X, bool above) {
    for (std::size_t i = 0; i < src.t.size(); ++i) {
        const double X = src.x[i][0];
        if (above ? X > match_X : X < match_X) {
            dst.t.push_back(src.t[i]);
            dst.x.push_back(src.x[i]);
            if (i < src.dev.size()) dst.dev.push_back(src.dev[i]);
        }
    }
}

inline void keep_crossings(Trajectory& dst, const Trajectory& src, double match_X, bool above) {
    for (const auto& e : src.events)
        if (e.kind == EventKind::CrossZ0 && (above ? e.state[0] > match_X : e.state[0] < match_X)) dst.events.push_back(e);
}

}  // namespace detail

/// Forward l_C orbit from P0 stopped at X = X_m (sigma >= 0 uses C, sigma < 0 uses f0).
inline Trajectory forward_to_level(double param, double X_m, const Model& m, const ShootOptions& opt, bool record,
                                   bool from_f0 = false) {
    const SeedPoint seed = from_f0 ? seed_unstable_P0_from_f0(param, m, opt.seed_eps) : seed_unstable_P0(param, m, opt.seed_eps);
    Controls c = opt.controls;
    c.record_samples = record;
    std::vector<EventSpec> ev{
        EventSpec::custom("X=Xm", [X_m](double, const Vec<3>& s) { return s[0] - X_m; }, Crossing::Up, true),
        EventSpec::cross_z0()};
    return integrate(seed, Direction::Forward, ev, c, m, opt.thresholds);
}

/// Backward C_k orbit from the Q1 center manifold stopped at X = X_m.
inline Trajectory backward_to_level(double k, double X_m, const Model& m, const ShootOptions& opt, bool record) {
    const SeedPoint seed = seed_center_Q1(k, m, opt.seed_x0);
    Controls c = opt.controls;
    c.record_samples = record;
    c.max_steps = std::max(c.max_steps, opt.candidate_max_steps);
    if (record && c.sample_min_dt == 0.0) c.sample_min_dt = 1e-3;
    std::vector<EventSpec> ev{
        EventSpec::custom("X=Xm", [X_m](double, const Vec<3>& s) { return s[0] - X_m; }, Crossing::Down, true),
        EventSpec::cross_z0()};
    return integrate(seed, Direction::Backward, ev, c, m, opt.thresholds);
}

inline std::optional<Vec<3>> stop_state(const Trajectory& tr) {
    if (tr.terminal != Terminal::EventStop) return std::nullopt;
    for (auto it = tr.events.rbegin(); it != tr.events.rend(); ++it)
        if (it->spec_index == 0) return it->state;
    return std::nullopt;
}

/// Connection for sigma >= 0 from a bisection bracket [k_lo, k_hi] in k.
inline Connection connect_from_k_bracket(double k_lo, double k_hi, const Model& m, const ShootOptions& opt) {
    Connection cn;
    cn.k = k_hi;
    const auto levels = detail::match_levels(1e-6, 1e2);
    auto ev = detail::level_events(levels);
    ev.push_back(EventSpec::cross_z0());
    Controls c = opt.controls;
    c.record_samples = true;
    c.sample_min_dt = 1e-3;
    c.max_steps = std::max(c.max_steps, opt.candidate_max_steps);
    auto run = [&](double k) { return integrate(seed_center_Q1(k, m, opt.seed_x0), Direction::Backward, ev, c, m, opt.thresholds); };
    const Trajectory lo = run(k_lo), hi = run(k_hi);
    const auto sl = detail::level_states(lo, levels.size()), sh = detail::level_states(hi, levels.size());
    int best = -1;
    for (int i = static_cast<int>(levels.size()) - 1; i >= 0; --i) {
        if (!sl[i] || !sh[i]) break;
        if (detail::rel_dist(*sl[i], *sh[i]) > opt.agree_tol) break;
        best = i;
    }
    if (best < 0) {
        cn.diagnostic = "bracket orbits never agree";
        return cn;
    }
    const double Xm = levels[best];
    const Vec<3> target = *sh[best];
    cn.match_X = Xm;
    const double e = (m.sigma() + 2.0) / 2.0;
    auto F = [&](double lnC) -> std::optional<double> {
        const Trajectory f = forward_to_level(std::exp(lnC), Xm, m, opt, false);
        const auto s = stop_state(f);
        if (!s || !(s->at(2) > 0.0)) return std::nullopt;
        return std::log(s->at(2)) - std::log(target[2]);
    };
    // Z alone may be matched by several C; keep the root that also matches Y best.
    const double guess = std::log(target[2] / std::pow(Xm, e));
    const auto roots = detail::scan_all_roots(F, guess, std::log(1.5), 40, 1e-15);
    std::optional<double> lnC;
    double best_dy = std::numeric_limits<double>::infinity();
    for (double r : roots) {
        const auto s = stop_state(forward_to_level(std::exp(r), Xm, m, opt, false));
        if (s && std::abs(s->at(1) - target[1]) < best_dy) {
            best_dy = std::abs(s->at(1) - target[1]);
            lnC = r;
        }
    }
    if (!lnC) {
        cn.diagnostic = "no C matches Z at the match point";
        return cn;
    }
    cn.C = std::exp(*lnC);
    cn.f0 = f0_from_c(cn.C, m);
    const Trajectory fwd = forward_to_level(cn.C, Xm, m, opt, true);
    const auto s = stop_state(fwd);
    if (!s) {
        cn.diagnostic = "forward piece did not reach the match point";
        return cn;
    }
    cn.match_dY = std::abs(s->at(1) - target[1]);
    cn.match_dZ = std::abs(s->at(2) - target[2]);

    // Backward-ordered orbit: Q1 end first, P0 end last.
    Trajectory& o = cn.orbit;
    o.chart = ChartId::FullPhase;
    o.direction = Direction::Backward;
    detail::append_tail(o, hi, Xm, true);
    for (std::size_t i = fwd.t.size(); i-- > 0;) {
        o.t.push_back(fwd.t[i]);
        o.x.push_back(fwd.x[i]);
        if (i < fwd.dev.size()) o.dev.push_back(fwd.dev[i]);
    }
    detail::keep_crossings(o, hi, Xm, true);
    for (auto it = fwd.events.rbegin(); it != fwd.events.rend(); ++it)
        if (it->kind == EventKind::CrossZ0) o.events.push_back(*it);
    o.t0 = o.t.front();
    o.t_end = o.t.back();
    o.last = o.x.back();
    o.steps = hi.steps + fwd.steps;
    cn.crossings = o.count(EventKind::CrossZ0);
    const auto& p0 = o.x.back();
    cn.origin = std::max({p0[0], std::abs(p0[1]), p0[2]}) <= opt.thresholds.p0_radius ? Terminal::HitP0 : Terminal::Ambiguous;
    cn.end = Terminal::HitQ1;  // seeded on the center manifold of Q1
    o.terminal = cn.origin;
    const double ytol = opt.match_tol * std::max(1.0, std::abs(target[1]));
    cn.verified = cn.origin == Terminal::HitP0 && cn.match_dY <= ytol;
    if (!cn.verified && cn.diagnostic.empty())
        cn.diagnostic = "match residual dY=" + std::to_string(cn.match_dY) + " origin " + terminal_name(cn.origin);
    return cn;
}

/// Connection for sigma < 0 from a bisection bracket in f0 (either order).
inline Connection connect_from_f0_bracket(double f_a, double f_b, const Model& m, const ShootOptions& opt) {
    Connection cn;
    cn.f0 = f_b;
    const auto levels = detail::match_levels(1e-6, 1e2);
    auto ev = detail::level_events(levels);
    ev.push_back(EventSpec::cross_y_stat(Crossing::Down).stop());
    ev.push_back(EventSpec::cross_y_zero(Crossing::Up).stop());
    ev.push_back(EventSpec::cross_z0());
    Controls c = opt.controls;
    c.record_samples = true;
    auto run = [&](double f0) { return integrate(seed_unstable_P0(f0, m, opt.seed_eps), Direction::Forward, ev, c, m, opt.thresholds); };
    const Trajectory ta = run(f_a), tb = run(f_b);
    const auto sa = detail::level_states(ta, levels.size()), sb = detail::level_states(tb, levels.size());
    int best = -1;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!sa[i] || !sb[i]) break;
        if (detail::rel_dist(*sa[i], *sb[i]) > opt.agree_tol) break;
        best = static_cast<int>(i);
    }
    if (best < 0) {
        cn.diagnostic = "bracket orbits never agree";
        return cn;
    }
    const double Xm = levels[best];
    const Vec<3> target = *sb[best];
    cn.match_X = Xm;
    auto G = [&](double lnk) -> std::optional<double> {
        const Trajectory b = backward_to_level(std::exp(lnk), Xm, m, opt, false);
        const auto s = stop_state(b);
        if (!s || !(s->at(2) > 0.0)) return std::nullopt;
        return std::log(s->at(2)) - std::log(target[2]);
    };
    const double guess = std::log(std::max(target[2], m.c.Z0) * 1.01);
    const auto lnk = detail::scan_and_solve(G, guess, std::log(1.3), 30, 1e-15);
    if (!lnk) {
        cn.diagnostic = "no k matches Z at the match point";
        return cn;
    }
    cn.k = std::exp(*lnk);
    const Trajectory bwd = backward_to_level(cn.k, Xm, m, opt, true);
    const auto s = stop_state(bwd);
    if (!s) {
        cn.diagnostic = "backward piece did not reach the match point";
        return cn;
    }
    cn.match_dY = std::abs(s->at(1) - target[1]);
    cn.match_dZ = std::abs(s->at(2) - target[2]);

    Trajectory& o = cn.orbit;
    o.chart = ChartId::FullPhase;
    o.direction = Direction::Forward;
    detail::append_tail(o, tb, Xm, false);
    for (std::size_t i = bwd.t.size(); i-- > 0;) {
        if (!(bwd.x[i][0] > Xm)) continue;
        o.t.push_back(bwd.t[i]);
        o.x.push_back(bwd.x[i]);
        if (i < bwd.dev.size()) o.dev.push_back(bwd.dev[i]);
    }
    detail::keep_crossings(o, tb, Xm, false);
    for (auto it = bwd.events.rbegin(); it != bwd.events.rend(); ++it)
        if (it->kind == EventKind::CrossZ0 && it->state[0] > Xm) o.events.push_back(*it);
    o.t0 = o.t.front();
    o.t_end = o.t.back();
    o.last = o.x.back();
    o.steps = tb.steps + bwd.steps;
    cn.crossings = o.count(EventKind::CrossZ0);
    o.terminal = detect_terminal(o, m, opt.thresholds);
    cn.end = o.terminal;
    const auto& first = o.x.front();
    cn.origin = std::max({first[0], std::abs(first[1]), first[2]}) <= 1e-6 ? Terminal::HitP0 : Terminal::Ambiguous;
    const double ytol = opt.match_tol * std::max(1.0, std::abs(target[1]));
    cn.verified = cn.end == Terminal::HitQ1 && cn.match_dY <= ytol;
    if (!cn.verified && cn.diagnostic.empty())
        cn.diagnostic = "match residual dY=" + std::to_string(cn.match_dY) + " end " + terminal_name(cn.end);
    return cn;
}

/// Bisection for k_level = inf of the W-set at the given level, and the connecting orbit there.
inline Candidate find_k_star(double k_lo, double k_hi, const Model& m, const ShootOptions& opt = {}, int level = 1) {
    const SetLabel llo = classify_backward(k_lo, m, opt, level).set_label;
    const SetLabel lhi = classify_backward(k_hi, m, opt, level).set_label;
    if (llo == lhi) throw BracketInvalid("find_k_star: both endpoints labeled " + label_name(llo));
    if ((llo == SetLabel::W) == (lhi == SetLabel::W)) throw BracketInvalid("find_k_star: bracket has no W endpoint");
    double a = k_lo, b = k_hi;
    if (llo == SetLabel::W) std::swap(a, b);  // a: not W, b: W
    Candidate cd;
    cd.level = level;
    int it = 0;
    const double tol = opt.bisect_rel_tol * m.c.Z0;
    while (std::abs(b - a) > tol && it < opt.bisect_max_iter) {
        const double mid = 0.5 * (a + b);
        if (classify_backward(mid, m, opt, level).set_label == SetLabel::W) b = mid;
        else a = mid;
        ++it;
    }
    cd.iterations = it;
    cd.bracket_lo = std::min(a, b);
    cd.bracket_hi = std::max(a, b);
    cd.bracket_width = std::abs(b - a);
    cd.family_parameter = b;
    cd.tail_K = std::pow(b, 1.0 / (m.p() - 1.0));
    auto cn = std::make_shared<Connection>(connect_from_k_bracket(a, b, m, opt));
    cd.crossings = cn->crossings;
    cd.f0 = cn->f0;
    cd.verified = cn->verified && cn->crossings == 2 * level;
    cd.diagnostic = cn->diagnostic;
    if (cn->verified && cn->crossings != 2 * level)
        cd.diagnostic = "connection has " + std::to_string(cn->crossings) + " crossings";
    cd.connection = cn;
    return cd;
}

/// Boundaries between "fewer than 2i+1 crossings" and ">= 2i+1 crossings" on a swept grid.
inline std::optional<std::pair<double, double>> w_bracket(const std::vector<ShotOutcome>& sweep, int level) {
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        const bool w0 = sweep[i - 1].crossings_Z0 >= 2 * level + 1;
        const bool w1 = sweep[i].crossings_Z0 >= 2 * level + 1;
        if (!w0 && w1) return std::make_pair(sweep[i - 1].family_parameter, sweep[i].family_parameter);
    }
    return std::nullopt;
}

struct MultiplicityResult {
    std::vector<Candidate> candidates;
    std::vector<ShotOutcome> sweep;
    int levels_tried = 0;
    std::string diagnostic;
};

/// Candidates k_1 < k_2 < ... with 2, 4, ... crossings, one per level up to max_k.
inline MultiplicityResult multiplicity_search(int max_k, const Model& m, const ShootOptions& opt = {},
                                              std::vector<double> grid = {}) {
    MultiplicityResult res;
    if (max_k <= 0) return res;
    if (grid.empty()) grid = mixed_k_grid(m);
    res.sweep = sweep_backward(grid, m, opt);
    for (int level = 1; level <= max_k; ++level) {
        res.levels_tried = level;
        const auto br = w_bracket(res.sweep, level);
        if (!br) {
            res.diagnostic = "no bracket at level " + std::to_string(level) + " at grid " + std::to_string(grid.size());
            break;
        }
        Candidate cd = find_k_star(br->first, br->second, m, opt, level);
        if (!cd.verified) {
            res.diagnostic = "level " + std::to_string(level) + ": " + cd.diagnostic;
            break;
        }
        res.candidates.push_back(std::move(cd));
    }
    return res;
}

/// Bisection in log f0 between an A-labeled and a C-labeled shot, and the connecting orbit.
inline Candidate bisect_forward(double f_1, double f_2, const Model& m, const ShootOptions& opt = {}) {
    const SetLabel l1 = classify_forward(f_1, m, opt).set_label;
    const SetLabel l2 = classify_forward(f_2, m, opt).set_label;
    const bool ok = (l1 == SetLabel::A && l2 == SetLabel::C) || (l1 == SetLabel::C && l2 == SetLabel::A);
    if (!ok) throw BracketInvalid("bisect_forward: endpoints labeled " + label_name(l1) + " and " + label_name(l2));
    double a = std::log(l1 == SetLabel::C ? f_1 : f_2);  // C side
    double b = std::log(l1 == SetLabel::C ? f_2 : f_1);  // A side
    Candidate cd;
    int it = 0;
    while (std::abs(b - a) > opt.bisect_rel_tol && it < opt.bisect_max_iter) {
        const double mid = 0.5 * (a + b);
        const SetLabel l = classify_forward(std::exp(mid), m, opt).set_label;
        if (l == SetLabel::A) b = mid;
        else if (l == SetLabel::C) a = mid;
        else {
            // B (or undecided) at bisection resolution: this is the boundary.
            a = b = mid;
        }
        ++it;
    }
    cd.iterations = it;
    cd.bracket_lo = std::exp(std::min(a, b));
    cd.bracket_hi = std::exp(std::max(a, b));
    cd.bracket_width = cd.bracket_hi - cd.bracket_lo;
    cd.family_parameter = std::exp(b);
    cd.f0 = cd.family_parameter;
    auto cn = std::make_shared<Connection>(connect_from_f0_bracket(std::exp(a), std::exp(b), m, opt));
    cd.crossings = cn->crossings;
    cd.tail_K = std::pow(cn->k, 1.0 / (m.p() - 1.0));
    cd.verified = cn->verified;
    cd.diagnostic = cn->diagnostic;
    cd.connection = cn;
    return cd;
}

/// First adjacent A/C pair on a swept f0 grid.
inline std::optional<std::pair<double, double>> ac_bracket(const std::vector<ShotOutcome>& sweep) {
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        const SetLabel l0 = sweep[i - 1].set_label, l1 = sweep[i].set_label;
        if ((l0 == SetLabel::A && l1 == SetLabel::C) || (l0 == SetLabel::C && l1 == SetLabel::A))
            return std::make_pair(sweep[i - 1].family_parameter, sweep[i].family_parameter);
    }
    return std::nullopt;
}

}  // namespace henon
