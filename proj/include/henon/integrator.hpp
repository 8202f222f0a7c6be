#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "henon/dynsys.hpp"
#include "henon/local_analysis.hpp"

namespace henon {

enum class Direction { Forward, Backward };

inline std::string direction_name(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

enum class Terminal {
    HitP0,
    HitP1,
    HitP2,
    HitQ1,
    EscapeQ2,
    EscapeQ3,
    EscapeQ5,
    VanishAtXi0,
    Decay,
    Growth,
    CrossingCap,
    EventStop,
    SpanExhausted,
    StepFailure,
    Ambiguous,
};

inline std::string terminal_name(Terminal t) {
    switch (t) {
    case Terminal::HitP0: return "HitP0";
    case Terminal::HitP1: return "HitP1";
    case Terminal::HitP2: return "HitP2";
    case Terminal::HitQ1: return "HitQ1";
    case Terminal::EscapeQ2: return "EscapeQ2";
    case Terminal::EscapeQ3: return "EscapeQ3";
    case Terminal::EscapeQ5: return "EscapeQ5";
    case Terminal::VanishAtXi0: return "VanishAtXi0";
    case Terminal::Decay: return "Decay";
    case Terminal::Growth: return "Growth";
    case Terminal::CrossingCap: return "CrossingCap";
    case Terminal::EventStop: return "EventStop";
    case Terminal::SpanExhausted: return "SpanExhausted";
    case Terminal::StepFailure: return "StepFailure";
    case Terminal::Ambiguous: return "Ambiguous";
    }
    return "?";
}

struct Controls {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_span = 200.0;  ///< largest |t - t0|
    long max_steps = 2'000'000;
    double h_init = 0.0;      ///< 0 selects the initial step automatically
    /// Samples closer than this (in |t|) to the previous recorded one are skipped.
    /// 0 records every accepted step.
    double sample_min_dt = 0.0;
    bool record_samples = true;
};

struct Thresholds {
    double x_strip = 1e3;        ///< strip criterion for Q1 applies beyond this X
    double escape_y = 1e6;       ///< |Y| beyond this is an escape to Q2/Q3
    double p0_radius = 1e-8;     ///< max(X,|Y|,Z) below this is P0
    double point_radius = 1e-6;  ///< relative distance for P1/P2 in the invariant planes
    double q5_ball = 1e-3;       ///< |Y/X - b| below this ...
    double q5_x = 1e-4;          ///< ... with 1/X below this ...
    double q5_z = 1e-6;          ///< ... and Z/X below this is Q5
    int crossing_cap = 10;       ///< CrossZ0 count at which an orbit is "many"
    double switch_in = 0.3;      ///< enter the stationary frame below this relative deviation
    double switch_out = 0.6;     ///< leave it above this
};

enum class EventKind { CrossZ0, CrossYZero, CrossYStat, Custom };

inline std::string event_name(EventKind k) {
    switch (k) {
    case EventKind::CrossZ0: return "CrossZ0";
    case EventKind::CrossYZero: return "CrossYZero";
    case EventKind::CrossYStat: return "CrossYStat";
    case EventKind::Custom: return "Custom";
    }
    return "?";
}

/// Sense of a crossing, measured along the direction of integration.
enum class Crossing { Any, Up, Down };

struct EventSpec {
    EventKind kind = EventKind::Custom;
    Crossing direction = Crossing::Any;
    bool terminal = false;  ///< stop integration at the first matching crossing
    /// Only for Custom: g(t, state), state padded to 3 components.
    std::function<double(double, const Vec<3>&)> fn;
    std::string name;

    static EventSpec cross_z0(Crossing d = Crossing::Any) { return {EventKind::CrossZ0, d, false, {}, "CrossZ0"}; }
    static EventSpec cross_y_zero(Crossing d = Crossing::Any) { return {EventKind::CrossYZero, d, false, {}, "CrossYZero"}; }
    static EventSpec cross_y_stat(Crossing d = Crossing::Any) { return {EventKind::CrossYStat, d, false, {}, "CrossYStat"}; }
    static EventSpec custom(std::string name, std::function<double(double, const Vec<3>&)> g,
                            Crossing d = Crossing::Any, bool terminal = false) {
        return {EventKind::Custom, d, terminal, std::move(g), std::move(name)};
    }
    EventSpec& stop() {
        terminal = true;
        return *this;
    }
};

struct EventRecord {
    double t = 0.0;
    EventKind kind = EventKind::Custom;
    int spec_index = 0;
    int sense = 0;  ///< +1: g increased along the integration direction, -1: decreased
    Vec<3> state{};
    double residual = 0.0;  ///< |g| at the located point
    bool grazing = false;
};

struct Trajectory {
    ChartId chart = ChartId::FullPhase;
    Direction direction = Direction::Forward;
    std::vector<double> t;
    std::vector<Vec<3>> x;  ///< state padded to 3 components
    /// FullPhase only: (Y + a, Z - Z0) carried at full precision near the stationary line.
    std::vector<Vec<2>> dev;
    std::vector<EventRecord> events;
    Terminal terminal = Terminal::Ambiguous;
    std::string diagnostic;
    long steps = 0;
    long rejected = 0;
    double t0 = 0.0;
    double t_end = 0.0;
    Vec<3> last{};
    Vec<2> last_dev{};
    std::optional<double> vanish_xi;
    std::optional<double> vanish_slope;

    double span_used() const { return std::abs(t_end - t0); }
    int count(EventKind k) const {
        return static_cast<int>(std::count_if(events.begin(), events.end(), [k](const EventRecord& e) { return e.kind == k; }));
    }
    std::size_t size() const { return t.size(); }
};

/// Cubic Hermite interpolant over one accepted step.
template <std::size_t D>
struct StepPair {
    double t0, t1;
    Vec<D> y0, y1, f0, f1;

    Vec<D> at(double t) const {
        const double h = t1 - t0;
        if (h == 0.0) return y0;
        const double s = (t - t0) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        Vec<D> r;
        for (std::size_t i = 0; i < D; ++i) r[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
        return r;
    }
};

/// Bisection for the sign change of g over [t0, t1]; g(t0) and g(t1) must differ in sign.
/// Stops when |g| <= tol_g or the bracket is narrower than 1e-13 max(1, |t|).
template <class G>
double locate_root(G&& g, double t0, double t1, double g0, double tol_g) {
    double lo = t0, hi = t1, glo = g0;
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (std::abs(gm) <= tol_g) return mid;
        if ((gm < 0) == (glo < 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        if (std::abs(hi - lo) <= 1e-13 * std::max(1.0, std::abs(mid))) break;
    }
    return 0.5 * (lo + hi);
}

/// Dormand-Prince 5(4) with PI step control. The observer sees each accepted step
/// and returns false to stop.
template <class Field>
class DormandPrince {
public:
    static constexpr std::size_t D = Field::dim;
    using V = Vec<D>;

    enum class Status { Stopped, SpanReached, MaxSteps, StepFailure };

    struct Result {
        Status status;
        double t;
        V y;
        long steps = 0;
        long rejected = 0;
        double h = 0.0;
    };

    explicit DormandPrince(Field f) : f_(std::move(f)) {}

    template <class Observer>
    Result run(double t0, const V& y0, double t_end, const Controls& c, Observer&& obs, double h_hint = 0.0,
               long step_budget = -1) const {
        const double dir = t_end >= t0 ? 1.0 : -1.0;
        double t = t0;
        V y = y0, k1;
        f_(t, y, k1);
        double h = h_hint != 0.0 ? std::abs(h_hint) : (c.h_init > 0 ? c.h_init : initial_step(t, y, k1, c));
        double err_old = 1e-4;
        Result r{Status::SpanReached, t, y};
        const long budget = step_budget >= 0 ? step_budget : c.max_steps;
        while (true) {
            if (dir * (t_end - t) <= 0.0) {
                r.status = Status::SpanReached;
                break;
            }
            if (r.steps >= budget) {
                r.status = Status::MaxSteps;
                break;
            }
            double hh = std::min(h, std::abs(t_end - t));
            const double h_floor = 1e-14 * std::max(1.0, std::abs(t));
            if (hh < h_floor && std::abs(t_end - t) > h_floor) {
                r.status = Status::StepFailure;
                break;
            }
            V y1, k7, err;
            step(t, y, k1, dir * hh, y1, k7, err);
            double en = 0.0;
            bool finite = true;
            for (std::size_t i = 0; i < D; ++i) {
                if (!std::isfinite(y1[i])) finite = false;
                double sc;
                if constexpr (requires { f_.error_scale(i, y, y1, c); })
                    sc = f_.error_scale(i, y, y1, c);
                else
                    sc = c.atol + c.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
                en += (err[i] / sc) * (err[i] / sc);
            }
            en = std::sqrt(en / D);
            if (!finite) en = 1e10;
            if (en <= 1.0) {
                const double t1 = (std::abs(t_end - (t + dir * hh)) <= 1e-15 * std::max(1.0, std::abs(t_end)))
                                      ? t_end
                                      : t + dir * hh;
                StepPair<D> sp{t, t1, y, y1, k1, k7};
                ++r.steps;
                t = t1;
                y = y1;
                k1 = k7;
                const double e = std::max(en, 1e-10);
                double fac = 0.9 * std::pow(e, -0.17) * std::pow(err_old, 0.04);
                fac = std::clamp(fac, 0.2, 5.0);
                err_old = e;
                h = hh * fac;
                if (!obs(sp)) {
                    r.status = Status::Stopped;
                    break;
                }
            } else {
                ++r.rejected;
                const double fac = std::max(0.2, 0.9 * std::pow(en, -0.2));
                h = hh * fac;
            }
        }
        r.t = t;
        r.y = y;
        r.h = h;
        return r;
    }

    const Field& field() const { return f_; }

private:
    Field f_;

    double initial_step(double t, const V& y, const V& f0, const Controls& c) const {
        double d0 = 0, d1 = 0;
        for (std::size_t i = 0; i < D; ++i) {
            const double sc = c.atol + c.rtol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (f0[i] / sc) * (f0[i] / sc);
        }
        d0 = std::sqrt(d0 / D);
        d1 = std::sqrt(d1 / D);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        (void)t;
        return std::min(h0, 0.1);
    }

    void step(double t, const V& y, const V& k1, double h, V& y1, V& k7, V& err) const {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                                e6 = 22.0 / 525, e7 = -1.0 / 40;
        V k2, k3, k4, k5, k6, tmp;
        for (std::size_t i = 0; i < D; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        f_(t + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < D; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f_(t + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < D; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f_(t + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < D; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f_(t + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < D; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f_(t + h, tmp, k6);
        for (std::size_t i = 0; i < D; ++i)
            y1[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f_(t + h, y1, k7);
        for (std::size_t i = 0; i < D; ++i)
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
};

/// (X, Y, Z) together with the deviations (u, v) = (Y + a, Z - Z0), each in the
/// representation that carries it most accurately.
struct PhaseView {
    double X, Y, Z, u, v;
};

inline PhaseView view_absolute(const Vec<3>& s, const Model& m) {
    return {s[0], s[1], s[2], s[1] + m.c.a, s[2] - m.c.Z0};
}

inline PhaseView view_stationary(const Vec<3>& s, const Model& m) {
    return {s[0], s[1] - m.c.a, s[2] + m.c.Z0, s[1], s[2]};
}

/// Incremental terminal-state detection shared by the integrator and detect_terminal.
class TerminalMonitor {
public:
    TerminalMonitor(const Model& m, const Thresholds& th, Direction dir, ChartId chart)
        : m_(&m), th_(th), dir_(dir), chart_(chart) {}

    std::optional<Terminal> update(const PhaseView& P) {
        const double a = m_->c.a;
        if (P.Y > th_.escape_y) return Terminal::EscapeQ2;
        if (P.Y < -th_.escape_y) return Terminal::EscapeQ3;
        if (dir_ == Direction::Backward) {
            if (std::max({P.X, std::abs(P.Y), P.Z}) <= th_.p0_radius) return Terminal::HitP0;
        }
        if (chart_ != ChartId::FullPhase) {
            // Invariant planes: convergence to P1/P2 is a terminal state.
            const double r = th_.point_radius;
            const double n2 = m_->N() - 2.0;
            if (P.X <= th_.p0_radius && std::abs(P.u) <= r * a && std::abs(P.v) <= r * m_->c.Z0)
                return Terminal::HitP2;
            if (P.X <= th_.p0_radius && std::abs(P.Y + n2) <= r * n2 && P.Z <= th_.p0_radius)
                return Terminal::HitP1;
        }
        if (dir_ == Direction::Forward && P.X > 0.0) {
            // Closed at Y = -a so that the stationary line itself counts.
            const bool in_strip = P.u >= 0.0 && P.Y < 0.0;
            if (P.X >= th_.x_strip) {
                if (!strip_seen_) {
                    strip_seen_ = true;
                    strip_ok_ = in_strip;
                } else if (!in_strip) {
                    strip_ok_ = false;
                }
                if (strip_ok_ && in_strip && P.Z > 0.0) return Terminal::HitQ1;
            }
            if (1.0 / P.X < th_.q5_x && std::abs(P.Y / P.X - m_->c.b) < th_.q5_ball && P.Z / P.X < th_.q5_z)
                return Terminal::EscapeQ5;
        }
        return std::nullopt;
    }

private:
    const Model* m_;
    Thresholds th_;
    Direction dir_;
    ChartId chart_;
    bool strip_seen_ = false;
    bool strip_ok_ = false;
};

namespace detail {

inline double event_scale(EventKind k, const Model& m) {
    switch (k) {
    case EventKind::CrossZ0: return m.c.Z0;
    case EventKind::CrossYStat: return m.c.a;
    default: return 1.0;
    }
}

inline double phase_event_value(const EventSpec& e, double t, const PhaseView& P) {
    switch (e.kind) {
    case EventKind::CrossZ0: return P.v;
    case EventKind::CrossYZero: return P.Y;
    case EventKind::CrossYStat: return P.u;
    case EventKind::Custom: return e.fn(t, Vec<3>{P.X, P.Y, P.Z});
    }
    return 0.0;
}

/// Shared event bookkeeping: sign tracking, localization, grazing guard.
class EventTracker {
public:
    explicit EventTracker(const std::vector<EventSpec>& specs) : specs_(&specs), last_(specs.size(), 0.0) {}

    /// values at the seed
    void init(const std::vector<double>& g) { last_ = g; }

    /// g_new: event values at the end of the step. `value_at(i, t)` evaluates event i on the
    /// dense output; `state_at(t)` gives the padded state. Returns the index of a fired
    /// terminal event (located time in t_stop), or -1.
    template <class ValueAt, class StateAt>
    int process(double t0, double t1, double dir, const std::vector<double>& g_new, ValueAt&& value_at,
                StateAt&& state_at, const std::vector<double>& scales, std::vector<EventRecord>& out,
                double& t_stop) {
        int fired = -1;
        t_stop = t1;
        struct Hit {
            double t;
            std::size_t i;
            int sense;
        };
        std::vector<Hit> hits;
        for (std::size_t i = 0; i < specs_->size(); ++i) {
            const double g0 = last_[i], g1 = g_new[i];
            if (g1 != 0.0 && g0 != 0.0 && ((g0 < 0) != (g1 < 0))) {
                const int sense = (g1 > g0) ? +1 : -1;
                const double tol = 1e-12 * scales[i];
                const double ts = locate_root([&](double t) { return value_at(i, t); }, t0, t1, g0, tol);
                hits.push_back({ts, i, sense});
            }
            if (g1 != 0.0) last_[i] = g1;
        }
        std::sort(hits.begin(), hits.end(), [dir](const Hit& a, const Hit& b) { return dir * a.t < dir * b.t; });
        for (const Hit& h : hits) {
            const EventSpec& e = (*specs_)[h.i];
            const bool want = e.direction == Crossing::Any || (e.direction == Crossing::Up && h.sense > 0) ||
                              (e.direction == Crossing::Down && h.sense < 0);
            if (!want) continue;
            // Grazing guard: an opposite crossing of the same event right after the previous one.
            bool merged = false;
            for (auto it = out.rbegin(); it != out.rend(); ++it) {
                if (it->spec_index != static_cast<int>(h.i)) continue;
                if (it->sense == -h.sense && std::abs(it->t - h.t) <= graze_window_ * std::max(1.0, std::abs(h.t))) {
                    it->grazing = true;
                    merged = true;
                }
                break;
            }
            if (merged) continue;
            EventRecord r;
            r.t = h.t;
            r.kind = e.kind;
            r.spec_index = static_cast<int>(h.i);
            r.sense = h.sense;
            r.state = state_at(h.t);
            r.residual = std::abs(value_at(h.i, h.t));
            out.push_back(r);
            if (e.terminal && fired < 0) {
                fired = static_cast<int>(h.i);
                t_stop = h.t;
                break;
            }
        }
        return fired;
    }

    double graze_window_ = 1e-8;

private:
    const std::vector<EventSpec>* specs_;
    std::vector<double> last_;
};

inline void record_sample(Trajectory& tr, const Controls& c, double t, const Vec<3>& x, const Vec<2>& dev, bool force,
                          bool with_dev) {
    if (!c.record_samples && !force) return;
    if (!force && c.sample_min_dt > 0.0 && !tr.t.empty() && std::abs(t - tr.t.back()) < c.sample_min_dt) return;
    if (!tr.t.empty() && t == tr.t.back()) return;
    tr.t.push_back(t);
    tr.x.push_back(x);
    if (with_dev) tr.dev.push_back(dev);
}

}  // namespace detail

/// Integrates the phase system from (X, Y, Z), switching to the stationary frame
/// (X, Y + a, Z - Z0) whenever the orbit is close to the stationary line.
inline Trajectory integrate_phase(const Vec<3>& seed, double t0, Direction dir, const std::vector<EventSpec>& events,
                                  const Controls& c, const Model& m, const Thresholds& th = {}) {
    Trajectory tr;
    tr.chart = ChartId::FullPhase;
    tr.direction = dir;
    tr.t0 = t0;
    for (double v : seed)
        if (!std::isfinite(v)) throw DomainError("integrate: seed must be finite");
    const double sgn = dir == Direction::Forward ? 1.0 : -1.0;
    const double t_end = t0 + sgn * c.max_span;
    const double a = m.c.a, Z0 = m.c.Z0;

    std::vector<double> scales;
    for (const auto& e : events) scales.push_back(detail::event_scale(e.kind, m));
    detail::EventTracker tracker(events);
    TerminalMonitor mon(m, th, dir, ChartId::FullPhase);

    auto near_line = [&](const PhaseView& P, double lim) {
        return P.X > 0.0 && std::abs(P.u) < lim * a && std::abs(P.v) < lim * Z0;
    };

    PhaseView P = view_absolute(seed, m);
    bool stationary = near_line(P, th.switch_in);
    Vec<3> state = stationary ? Vec<3>{P.X, P.u, P.v} : seed;
    auto view = [&](const Vec<3>& s, bool st) { return st ? view_stationary(s, m) : view_absolute(s, m); };

    {
        std::vector<double> g0;
        for (const auto& e : events) g0.push_back(detail::phase_event_value(e, t0, P));
        tracker.init(g0);
    }
    detail::record_sample(tr, c, t0, {P.X, P.Y, P.Z}, {P.u, P.v}, true, true);
    if (auto term = mon.update(P)) {
        tr.terminal = *term;
        tr.t_end = t0;
        tr.last = {P.X, P.Y, P.Z};
        tr.last_dev = {P.u, P.v};
        return tr;
    }

    double t = t0;
    double h_hint = 0.0;
    int z0_count = 0;
    std::optional<Terminal> final_term;
    bool do_switch = false;
    std::vector<double> gnew(events.size());

    while (true) {
        do_switch = false;
        auto obs_body = [&](const auto& sp, bool st) -> bool {
            const PhaseView P1 = view(sp.y1, st);
            for (std::size_t i = 0; i < events.size(); ++i) gnew[i] = detail::phase_event_value(events[i], sp.t1, P1);
            double t_stop = sp.t1;
            const std::size_t before = tr.events.size();
            const int fired = tracker.process(
                sp.t0, sp.t1, sgn, gnew,
                [&](std::size_t i, double tt) { return detail::phase_event_value(events[i], tt, view(sp.at(tt), st)); },
                [&](double tt) {
                    const PhaseView q = view(sp.at(tt), st);
                    return Vec<3>{q.X, q.Y, q.Z};
                },
                scales, tr.events, t_stop);
            for (std::size_t i = before; i < tr.events.size(); ++i)
                if (tr.events[i].kind == EventKind::CrossZ0) ++z0_count;
            if (fired >= 0) {
                const PhaseView q = view(sp.at(t_stop), st);
                detail::record_sample(tr, c, t_stop, {q.X, q.Y, q.Z}, {q.u, q.v}, true, true);
                t = t_stop;
                final_term = Terminal::EventStop;
                tr.last = {q.X, q.Y, q.Z};
                tr.last_dev = {q.u, q.v};
                return false;
            }
            detail::record_sample(tr, c, sp.t1, {P1.X, P1.Y, P1.Z}, {P1.u, P1.v}, false, true);
            tr.last = {P1.X, P1.Y, P1.Z};
            tr.last_dev = {P1.u, P1.v};
            t = sp.t1;
            if (z0_count >= th.crossing_cap) {
                final_term = Terminal::CrossingCap;
                return false;
            }
            if (auto term = mon.update(P1)) {
                final_term = *term;
                return false;
            }
            if (st &&!near_line(P1, th.switch_out)) {
                do_switch = true;
                return false;
            }
            if (!st && near_line(P1, th.switch_in)) {
                do_switch = true;
                return false;
            }
            return true;
        };
        const long budget = c.max_steps - tr.steps;
        double t_after;
        Vec<3> y_after;
        typename DormandPrince<field::FullPhase>::Status status;
        if (stationary) {
            DormandPrince<field::StationaryFrame> dp(field::StationaryFrame{&m});
            auto r = dp.run(t, state, t_end, c, [&](const StepPair<3>& sp) { return obs_body(sp, true); }, h_hint,
                            budget);
            tr.steps += r.steps;
            tr.rejected += r.rejected;
            h_hint = r.h;
            t_after = r.t;
            y_after = r.y;
            status = static_cast<typename DormandPrince<field::FullPhase>::Status>(r.status);
        } else {
            DormandPrince<field::FullPhase> dp(field::FullPhase{&m});
            auto r = dp.run(t, state, t_end, c, [&](const StepPair<3>& sp) { return obs_body(sp, false); }, h_hint,
                            budget);
            tr.steps += r.steps;
            tr.rejected += r.rejected;
            h_hint = r.h;
            t_after = r.t;
            y_after = r.y;
            status = r.status;
        }
        using S = typename DormandPrince<field::FullPhase>::Status;
        if (status == S::Stopped && do_switch && !final_term) {
            const PhaseView q = view(y_after, stationary);
            stationary = !stationary;
            state = stationary ? Vec<3>{q.X, q.u, q.v} : Vec<3>{q.X, q.Y, q.Z};
            t = t_after;
            continue;
        }
        if (final_term) {
            tr.terminal = *final_term;
        } else if (status == S::SpanReached) {
            tr.terminal = Terminal::SpanExhausted;
        } else if (status == S::MaxSteps) {
            tr.terminal = Terminal::SpanExhausted;
            tr.diagnostic = "max steps reached";
        } else {
            tr.terminal = Terminal::StepFailure;
            tr.diagnostic = "step size underflow";
        }
        if (!final_term || *final_term != Terminal::EventStop) t = t_after;
        break;
    }
    tr.t_end = t;
    if (tr.t.empty() || tr.t.back() != t) {
        detail::record_sample(tr, c, t, tr.last, tr.last_dev, true, true);
    }
    return tr;
}

namespace detail {

template <class Field>
Trajectory integrate_generic(ChartId chart, Field f, const Vec<3>& seed3, double t0, Direction dir,
                             const std::vector<EventSpec>& events, const Controls& c, const Model& m,
                             const Thresholds& th) {
    constexpr std::size_t D = Field::dim;
    Trajectory tr;
    tr.chart = chart;
    tr.direction = dir;
    tr.t0 = t0;
    const double sgn = dir == Direction::Forward ? 1.0 : -1.0;
    const double t_end = t0 + sgn * c.max_span;
    Vec<D> y0;
    for (std::size_t i = 0; i < D; ++i) {
        if (!std::isfinite(seed3[i])) throw DomainError("integrate: seed must be finite");
        y0[i] = seed3[i];
    }
    auto pad = [](const Vec<D>& y) {
        Vec<3> r{0, 0, 0};
        for (std::size_t i = 0; i < D; ++i) r[i] = y[i];
        return r;
    };
    // Embedding of planar charts into (X, Y, Z) for the built-in events and terminal checks.
    auto embed = [&](const Vec<D>& y) -> std::optional<PhaseView> {
        if (chart == ChartId::PlaneX0) return view_absolute({0.0, y[0], y[1]}, m);
        if (chart == ChartId::PlaneZ0) return view_absolute({y[0], y[1], 0.0}, m);
        return std::nullopt;
    };
    auto value = [&](const EventSpec& e, double t, const Vec<D>& y) -> double {
        if (e.kind == EventKind::Custom) return e.fn(t, pad(y));
        auto P = embed(y);
        if (!P) throw DomainError("integrate: built-in events need a phase chart");
        return phase_event_value(e, t, *P);
    };
    std::vector<double> scales;
    for (const auto& e : events) scales.push_back(event_scale(e.kind, m));
    EventTracker tracker(events);
    {
        std::vector<double> g0;
        for (const auto& e : events) g0.push_back(value(e, t0, y0));
        tracker.init(g0);
    }
    TerminalMonitor mon(m, th, dir, chart);
    record_sample(tr, c, t0, pad(y0), {0, 0}, true, false);
    tr.last = pad(y0);
    std::optional<Terminal> final_term;
    const bool profile = chart == ChartId::ProfileODE;
    const double f_scale = profile ? std::max(1.0, std::abs(y0[0])) : 1.0;
    std::vector<double> gnew(events.size());
    double t_last = t0;

    DormandPrince<Field> dp(f);
    auto res = dp.run(t0, y0, t_end, c, [&](const StepPair<D>& sp) {
        for (std::size_t i = 0; i < events.size(); ++i) gnew[i] = value(events[i], sp.t1, sp.y1);
        double t_stop = sp.t1;
        const int fired = tracker.process(
            sp.t0, sp.t1, sgn, gnew, [&](std::size_t i, double tt) { return value(events[i], tt, sp.at(tt)); },
            [&](double tt) { return pad(sp.at(tt)); }, scales, tr.events, t_stop);
        if (fired >= 0) {
            tr.last = pad(sp.at(t_stop));
            record_sample(tr, c, t_stop, tr.last, {0, 0}, true, false);
            t_last = t_stop;
            final_term = Terminal::EventStop;
            return false;
        }
        if (profile && sp.y1[0] <= 0.0 && sp.y0[0] > 0.0) {
            const double xs = locate_root([&](double tt) { return sp.at(tt)[0]; }, sp.t0, sp.t1, sp.y0[0], 1e-14 * f_scale);
            const auto ys = sp.at(xs);
            tr.vanish_xi = xs;
            tr.vanish_slope = ys[1];
            tr.last = pad(ys);
            record_sample(tr, c, xs, tr.last, {0, 0}, true, false);
            t_last = xs;
            final_term = Terminal::VanishAtXi0;
            return false;
        }
        tr.last = pad(sp.y1);
        record_sample(tr, c, sp.t1, tr.last, {0, 0}, false, false);
        t_last = sp.t1;
        if (profile && std::abs(sp.y1[0]) > 1e8 * f_scale) {
            final_term = Terminal::Growth;
            return false;
        }
        if (auto P = embed(sp.y1)) {
            if (auto term = mon.update(*P)) {
                final_term = *term;
                return false;
            }
        }
        return true;
    });
    tr.steps = res.steps;
    tr.rejected = res.rejected;
    using S = typename DormandPrince<Field>::Status;
    if (final_term) {
        tr.terminal = *final_term;
    } else if (res.status == S::SpanReached || res.status == S::MaxSteps) {
        tr.terminal = Terminal::SpanExhausted;
        if (profile) tr.terminal = tr.last[1] > 0.0 ? Terminal::Growth : Terminal::Decay;
        if (res.status == S::MaxSteps) tr.diagnostic = "max steps reached";
        t_last = res.t;
    } else {
        tr.terminal = Terminal::StepFailure;
        tr.diagnostic = "step size underflow";
        t_last = res.t;
    }
    tr.t_end = t_last;
    if (tr.t.empty() || tr.t.back() != t_last) record_sample(tr, c, t_last, tr.last, {0, 0}, true, false);
    return tr;
}

}  // namespace detail

/// Integrates any chart from `seed` (padded to 3 components) starting at time t0.
/// Backward integration runs the independent variable downwards.
inline Trajectory integrate(ChartId chart, const Vec<3>& seed, double t0, Direction dir,
                            const std::vector<EventSpec>& events, const Controls& c, const Model& m,
                            const Thresholds& th = {}) {
    switch (chart) {
    case ChartId::FullPhase: return integrate_phase(seed, t0, dir, events, c, m, th);
    case ChartId::ProfileODE:
        return detail::integrate_generic(chart, field::ProfileODE{&m}, seed, t0, dir, events, c, m, th);
    case ChartId::InfX: return detail::integrate_generic(chart, field::InfX{&m}, seed, t0, dir, events, c, m, th);
    case ChartId::InfYPlus:
        return detail::integrate_generic(chart, field::InfY{&m, +1.0}, seed, t0, dir, events, c, m, th);
    case ChartId::InfYMinus:
        return detail::integrate_generic(chart, field::InfY{&m, -1.0}, seed, t0, dir, events, c, m, th);
    case ChartId::InfZ: return detail::integrate_generic(chart, field::InfZ{&m}, seed, t0, dir, events, c, m, th);
    case ChartId::PlaneX0:
        return detail::integrate_generic(chart, field::PlaneX0{&m}, seed, t0, dir, events, c, m, th);
    case ChartId::PlaneZ0:
        return detail::integrate_generic(chart, field::PlaneZ0{&m}, seed, t0, dir, events, c, m, th);
    case ChartId::WPlane: return detail::integrate_generic(chart, field::WPlane{&m}, seed, t0, dir, events, c, m, th);
    case ChartId::GEquation:
        return detail::integrate_generic(chart, field::GEquation{&m}, seed, t0, dir, events, c, m, th);
    case ChartId::Linearized:
        return detail::integrate_generic(chart, field::Linearized{&m}, seed, t0, dir, events, c, m, th);
    }
    throw DomainError("integrate: unknown chart");
}

inline Trajectory integrate(const SeedPoint& seed, Direction dir, const std::vector<EventSpec>& events,
                            const Controls& c, const Model& m, const Thresholds& th = {}) {
    return integrate(seed.chart, seed.state, seed.eta, dir, events, c, m, th);
}

/// Replays the terminal criteria over the recorded samples of a FullPhase trajectory.
/// Returns Ambiguous when none fires.
inline Terminal detect_terminal(const Trajectory& tr, const Model& m, const Thresholds& th = {}) {
    if (tr.chart != ChartId::FullPhase && tr.chart != ChartId::PlaneX0 && tr.chart != ChartId::PlaneZ0)
        throw DomainError("detect_terminal: phase trajectory required");
    TerminalMonitor mon(m, th, tr.direction, tr.chart);
    for (std::size_t i = 0; i < tr.x.size(); ++i) {
        PhaseView P;
        const auto& s = tr.x[i];
        if (tr.chart == ChartId::FullPhase) {
            P = view_absolute(s, m);
            if (i < tr.dev.size()) {
                P.u = tr.dev[i][0];
                P.v = tr.dev[i][1];
            }
        } else if (tr.chart == ChartId::PlaneX0) {
            P = view_absolute({0.0, s[0], s[1]}, m);
        } else {
            P = view_absolute({s[0], s[1], 0.0}, m);
        }
        if (auto t = mon.update(P)) return *t;
    }
    return Terminal::Ambiguous;
}

}  // namespace henon
