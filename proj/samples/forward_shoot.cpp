// Forward shooting at N=8, sigma=-0.6, p=20: sweep f(0), bisect the A/C boundary,
// and print the resulting profile.
#include <cstdio>

#include "henon/henon.hpp"

int main() {
    using namespace henon;
    const Model m(8, -0.6, 20);
    ShootOptions opt;
    opt.workers = 1;
    const auto sweep = sweep_forward(default_f0_grid(64), m, opt);
    const auto br = ac_bracket(sweep);
    if (!br) {
        std::puts("no A/C bracket");
        return 1;
    }
    const Candidate cd = bisect_forward(br->first, br->second, m, opt);
    const Profile pr = reconstruct_profile(*cd.connection, m);
    std::printf("f(0) = %.10f  K = %.6f  C = %.6f  decreasing: %s\n", pr.f0, pr.tail_K, m.c.C_sigma,
                pr.monotone_decreasing ? "yes" : "no");
    for (double xi : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) std::printf("  f(%4.1f) = %.8f\n", xi, evaluate_profile(pr, xi, m));
}
