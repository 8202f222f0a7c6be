#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "henon/integrator.hpp"
#include "henon/local_analysis.hpp"

namespace henon {

struct PortraitCurve {
    std::string name;        ///< e.g. "P0->P2"
    Terminal expected = Terminal::Ambiguous;
    Trajectory trajectory;   ///< planar chart
    bool matches() const { return trajectory.terminal == expected; }
};

/// Separatrices of the invariant planes.
/// {X=0}: the unstable manifold of P0 ending at P2, and the stable manifold of P1 coming from Q2.
/// {Z=0}: the orbit leaving P0 towards Q5, and the orbit leaving P1 that enters Q1.
inline std::vector<PortraitCurve> portrait(ChartId plane, const Model& m, const Controls& base = {},
                                           const Thresholds& th = {}, double eps = 1e-6) {
    const double n = m.N(), s = m.sigma(), p = m.p(), n2 = n - 2.0;
    Controls c = base;
    c.record_samples = true;
    std::vector<PortraitCurve> out;
    auto unit = [](double x, double y) {
        const double r = std::hypot(x, y);
        return Vec<3>{x / r, y / r, 0.0};
    };
    if (plane == ChartId::PlaneX0) {
        // Unstable direction of P0 inside {X=0}: eigenvalue sigma+2, eigenvector (-1, N+sigma).
        const Vec<3> e = unit(-1.0, n + s);
        PortraitCurve a{"P0->P2", Terminal::HitP2, {}};
        a.trajectory = integrate(ChartId::PlaneX0, {eps * e[0], eps * e[1], 0.0}, 0.0, Direction::Forward, {}, c, m, th);
        out.push_back(std::move(a));
        // Stable direction of P1 = (-(N-2), 0): eigenvalue N+sigma-p(N-2), eigenvector (1, p(N-2)-2-sigma).
        const Vec<3> w = unit(1.0, p * n2 - 2.0 - s);
        PortraitCurve b{"Q2->P1", Terminal::EscapeQ2, {}};
        b.trajectory = integrate(ChartId::PlaneX0, {-n2 + eps * w[0], eps * w[1], 0.0}, 0.0, Direction::Backward, {}, c, m, th);
        out.push_back(std::move(b));
    } else if (plane == ChartId::PlaneZ0) {
        // Unstable direction of P0 inside {Z=0}: eigenvalue 2, eigenvector (N, 1).
        const Vec<3> e = unit(n, 1.0);
        PortraitCurve a{"P0->Q5", Terminal::EscapeQ5, {}};
        a.trajectory = integrate(ChartId::PlaneZ0, {eps * e[0], eps * e[1], 0.0}, 0.0, Direction::Forward, {}, c, m, th);
        out.push_back(std::move(a));
        // Center manifold of Q1 restricted to z = 0, followed backwards from large X.
        // Backwards in time the manifold attracts, so a moderate X0 keeps the run short.
        const double X0 = 1e4;
        const double Y0 = X0 * center_manifold_y(1.0 / X0, 0.0, m);
        PortraitCurve b{"P1->Q1", Terminal::HitP1, {}};
        b.trajectory = integrate(ChartId::PlaneZ0, {X0, Y0, 0.0}, 0.5 * std::log(X0 / m.c.alpha), Direction::Backward, {}, c, m, th);
        out.push_back(std::move(b));
    } else {
        throw DomainError("portrait: plane must be PlaneX0 or PlaneZ0");
    }
    return out;
}

}  // namespace henon
