// Critical exponents for a few regimes, then one direct shot of the profile ODE
// compared against the stationary solution.
#include <cstdio>

#include "henon/henon.hpp"

int main() {
    using namespace henon;
    const struct { int N; double sigma, p; } regimes[] = {{20, 1.5, 10}, {40, 1.5, 10}, {8, -0.6, 20}, {10, -0.6, 20}};
    for (const auto& r : regimes) {
        const TheoryPrediction t = lepin_gap(RegimeParams(r.N, r.sigma, r.p));
        std::printf("N=%d sigma=%g p=%g: p_S=%s p_JL=%s p_L=%s multiplicity>=%d\n", r.N, r.sigma, r.p, t.p_S.str().c_str(),
                    t.p_JL.str().c_str(), t.p_L_or_pbarL.str().c_str(), t.multiplicity_lower_bound);
    }

    const Model m(20, 1.5, 10);
    const DirectShot ds = direct_shoot_ssode(0.81, m, 3.0);
    std::printf("\nf(0)=0.81 at N=20, sigma=1.5, p=10: %zu samples, %d intersections with U\n", ds.profile.size(),
                ds.profile.intersections);
    for (double xi : {0.5, 1.0, 2.0, 3.0})
        std::printf("  xi=%4.1f  f=%.8f  U=%.8f\n", xi, evaluate_profile(ds.profile, xi, m), stationary_value(xi, m));
}
