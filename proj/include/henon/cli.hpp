#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "henon/henon.hpp"
#include "henon/verify.hpp"

namespace henon::cli {

enum ExitCode : int { Ok = 0, Usage = 1, InvalidParams = 2, NoCandidate = 3, VerifyFailed = 4 };

using json = nlohmann::ordered_json;

struct Args {
    int N = 0;
    double sigma = 0.0;
    double p = 0.0;
    std::string mode = "auto";
    int grid = 256;
    std::string out = "henon_out";
    double rtol = 1e-10;
    double atol = 1e-12;
    double span = 200.0;
    unsigned workers = 0;
    double seed_x0 = 1e6;
    double strip_x = 1e3;
    bool svg = false;
    std::string plane = "X0";
    double f0 = 0.0;
    double xi_end = 5.0;
    std::vector<int> only;
};

namespace detail {

inline ShootOptions shoot_options(const Args& a) {
    ShootOptions o;
    o.controls.rtol = a.rtol;
    o.controls.atol = a.atol;
    o.controls.max_span = a.span;
    o.thresholds.x_strip = a.strip_x;
    o.seed_x0 = a.seed_x0;
    o.workers = a.workers;
    return o;
}

inline std::string resolved_mode(const Args& a) {
    if (a.mode != "auto") return a.mode;
    return a.sigma < 0.0 ? "forward" : "backward";
}

inline std::string ext(const ExtReal& e) { return e.is_infinite() ? "inf" : io::num(e.value()); }

inline json ext_json(const ExtReal& e) { return e.is_infinite() ? json("inf") : json(e.value()); }

/// Collects what a run did; written as manifest.json in the output directory.
struct Run {
    const Args& args;
    std::string command;
    std::filesystem::path dir;
    std::vector<std::string> outputs;
    json outcome = json::object();
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    Run(const Args& a, std::string cmd) : args(a), command(std::move(cmd)) {
        const char* env = std::getenv("HENON_OUT");
        dir = env && *env ? std::filesystem::path(env) : std::filesystem::path(a.out);
        std::filesystem::create_directories(dir);
    }

    std::string path(const std::string& name) {
        const std::string p = (dir / name).string();
        outputs.push_back(p);
        return p;
    }

    void write_manifest(int code) {
        const ShootOptions o = shoot_options(args);
        json j;
        j["command"] = command;
        j["params"] = {{"N", args.N}, {"sigma", args.sigma}, {"p", args.p}};
        j["tolerances"] = {{"rtol", o.controls.rtol}, {"atol", o.controls.atol}, {"span", o.controls.max_span},
                           {"max_steps", o.controls.max_steps}, {"bisect_rel_tol", o.bisect_rel_tol},
                           {"bisect_max_iter", o.bisect_max_iter}, {"agree_tol", o.agree_tol}, {"match_tol", o.match_tol}};
        const Thresholds& t = o.thresholds;
        j["thresholds"] = {{"x_strip", t.x_strip},       {"escape_y", t.escape_y},   {"p0_radius", t.p0_radius},
                           {"point_radius", t.point_radius}, {"q5_ball", t.q5_ball}, {"q5_x", t.q5_x},
                           {"q5_z", t.q5_z},             {"crossing_cap", t.crossing_cap}, {"switch_in", t.switch_in},
                           {"switch_out", t.switch_out}};
        j["seeds"] = {{"seed_x0", o.seed_x0}, {"seed_eps", o.seed_eps}};
        j["grid"] = {{"mode", resolved_mode(args)}, {"size", args.grid}};
        if (command == "portrait") j["grid"]["plane"] = args.plane;
        if (command == "profile" && args.f0 > 0.0) j["grid"]["f0"] = args.f0;
        j["workers"] = args.workers;
        j["outputs"] = outputs;
        j["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        outcome["exit_code"] = code;
        j["outcome"] = outcome;
        auto os = io::open_out((dir / "manifest.json").string());
        os << j.dump(2) << '\n';
    }
};

inline void profile_svg(Run& run, const Profile& pr, const Model& m) {
    io::Series f{"f", pr.xi, pr.f}, u{"stationary", {}, {}};
    for (double x : pr.xi) {
        u.x.push_back(x);
        u.y.push_back(stationary_value(x, m));
    }
    // The stationary curve blows up at 0; clip it to the profile's range.
    const double top = 2.0 * *std::max_element(pr.f.begin(), pr.f.end());
    for (auto& y : u.y) y = std::min(y, top);
    io::write_svg(run.path("profile.svg"), {f, u}, "xi", "f");
}

inline void orbit_svg(Run& run, const std::string& name, const Trajectory& tr) {
    io::Series s{name, {}, {}};
    for (const auto& x : tr.x) {
        s.x.push_back(x[0]);
        s.y.push_back(x[1]);
    }
    const auto cols = chart_columns(tr.chart);
    io::write_svg(run.path(name + ".svg"), {s}, cols[1], cols[2]);
}

inline json candidate_json(const Candidate& cd, const Model& m, const Profile* pr) {
    json j;
    j["family_parameter"] = cd.family_parameter;
    j["family_parameter_over_Z0"] = cd.family_parameter / m.c.Z0;
    j["bracket"] = {cd.bracket_lo, cd.bracket_hi};
    j["iterations"] = cd.iterations;
    j["crossings"] = cd.crossings;
    j["f0"] = cd.f0;
    j["verified"] = cd.verified;
    if (cd.connection) {
        j["origin"] = terminal_name(cd.connection->origin);
        j["end"] = terminal_name(cd.connection->end);
        j["match_X"] = cd.connection->match_X;
        j["match_dY"] = cd.connection->match_dY;
    }
    if (pr) {
        j["tail_K"] = pr->tail_K;
        j["C_sigma"] = m.c.C_sigma;
        j["intersections"] = pr->intersections;
        j["monotone_decreasing"] = pr->monotone_decreasing;
    }
    if (!cd.diagnostic.empty()) j["diagnostic"] = cd.diagnostic;
    return j;
}

inline std::vector<ShotOutcome> do_sweep(const Args& a, const Model& m, const ShootOptions& o) {
    const std::string mode = resolved_mode(a);
    if (mode == "backward") return sweep_backward(default_k_grid(m, a.grid), m, o);
    return sweep_forward(default_f0_grid(a.grid), m, o);
}

inline void check_mode(const Args& a) {
    const std::string mode = resolved_mode(a);
    if (mode == "backward" && a.sigma < 0.0) throw DomainError("backward shooting needs sigma >= 0");
    if (mode == "forward" && !(a.sigma < 0.0)) throw DomainError("forward shooting needs sigma < 0");
}

inline int cmd_exponents(const Args& a, std::ostream& out) {
    Run run(a, "exponents");
    const RegimeParams prm(a.N, a.sigma, a.p);
    json res;
    auto line = [&](const std::string& k, const std::string& v) { out << k << " = " << v << '\n'; };
    const ExtReal pS = p_sobolev(a.N, a.sigma), pJL = p_joseph_lundgren(a.N, a.sigma);
    line("p_S", ext(pS));
    line("p_JL", ext(pJL));
    res["p_S"] = ext_json(pS);
    res["p_JL"] = ext_json(pJL);
    const ExtReal pL = p_lepin(a.N, a.sigma);
    line(a.sigma < 0.0 ? "p_L_bar" : "p_L", ext(pL));
    res[a.sigma < 0.0 ? "p_L_bar" : "p_L"] = ext_json(pL);
    try {
        const DerivedConstants c = profile_constants(prm);
        const TheoryPrediction t = lepin_gap(prm);
        line("alpha", io::num(c.alpha));
        line("C_sigma", io::num(c.C_sigma));
        line("Z0", io::num(c.Z0));
        line("A", io::num(c.A));
        line("B", io::num(c.B));
        line("discriminant", io::num(t.discriminant));
        line("gap", t.lepin_gap ? io::num(*t.lepin_gap) : "undefined");
        line("zero_count", t.zero_count ? std::to_string(*t.zero_count) : "undefined");
        line("existence", t.existence ? "yes" : "no");
        line("multiplicity", std::to_string(t.multiplicity_lower_bound));
        line("conjectured_nonexistence", t.conjectured_nonexistence ? "yes" : "no");
        line("hypotheses", t.outside_hypotheses ? "outside theorem hypotheses" : "satisfied");
        res["alpha"] = c.alpha;
        res["C_sigma"] = c.C_sigma;
        res["Z0"] = c.Z0;
        res["A"] = c.A;
        res["B"] = c.B;
        res["discriminant"] = t.discriminant;
        res["gap"] = t.lepin_gap ? json(*t.lepin_gap) : json(nullptr);
        res["zero_count"] = t.zero_count ? json(*t.zero_count) : json(nullptr);
        res["existence"] = t.existence;
        res["multiplicity"] = t.multiplicity_lower_bound;
        res["conjectured_nonexistence"] = t.conjectured_nonexistence;
        res["outside_hypotheses"] = t.outside_hypotheses;
    } catch (const DomainError& e) {
        line("constants", std::string("undefined (") + e.what() + ")");
        res["constants"] = "undefined";
    }
    run.outcome = res;
    run.write_manifest(Ok);
    return Ok;
}

inline int cmd_sweep(const Args& a, std::ostream& out) {
    check_mode(a);
    Run run(a, "sweep");
    const Model m(a.N, a.sigma, a.p);
    const ShootOptions o = shoot_options(a);
    const auto sweep = do_sweep(a, m, o);
    io::write_sweep_csv(run.path("sweep.csv"), sweep);
    std::map<std::string, int> h;
    for (const auto& s : sweep) h[label_name(s.set_label)]++;
    for (const auto& [k, v] : h) {
        out << k << ": " << v << '\n';
        run.outcome["labels"][k] = v;
    }
    if (a.svg) {
        io::Series s{"crossings", {}, {}};
        for (const auto& o2 : sweep) {
            s.x.push_back(o2.family_parameter);
            s.y.push_back(o2.crossings_Z0);
        }
        io::write_svg(run.path("sweep.svg"), {s}, resolved_mode(a) == "backward" ? "k" : "f0", "crossings");
    }
    run.write_manifest(Ok);
    return Ok;
}

inline int cmd_shoot(const Args& a, std::ostream& out, std::ostream& err, bool as_profile = false) {
    check_mode(a);
    Run run(a, as_profile ? "profile" : "shoot");
    const Model m(a.N, a.sigma, a.p);
    ShootOptions o = shoot_options(a);
    const bool backward = resolved_mode(a) == "backward";
    const auto sweep = do_sweep(a, m, o);
    if (!as_profile) io::write_sweep_csv(run.path("sweep.csv"), sweep);
    const auto br = backward ? w_bracket(sweep, 1) : ac_bracket(sweep);
    if (!br) {
        const std::string msg = std::string(backward ? "no W bracket" : "no A/C bracket") + " at grid " + std::to_string(a.grid);
        err << msg << '\n';
        run.outcome["message"] = msg;
        run.write_manifest(NoCandidate);
        return NoCandidate;
    }
    const Candidate cd = backward ? find_k_star(br->first, br->second, m, o) : bisect_forward(br->first, br->second, m, o);
    const Profile pr = reconstruct_profile(*cd.connection, m);
    io::write_profile_csv(run.path("profile.csv"), pr, m);
    if (!as_profile) {
        io::write_trajectory_csv(run.path("orbit.csv"), cd.connection->orbit);
        io::write_events_csv(run.path("events.csv"), cd.connection->orbit);
    }
    if (a.svg) {
        profile_svg(run, pr, m);
        if (!as_profile) orbit_svg(run, "orbit", cd.connection->orbit);
    }
    run.outcome["candidate"] = candidate_json(cd, m, &pr);
    out << (backward ? "k1 = " : "f0 = ") << io::num(cd.family_parameter) << '\n';
    if (backward) out << "k1/Z0 = " << io::num(cd.family_parameter / m.c.Z0) << '\n';
    out << "f(0) = " << io::num(pr.f0) << '\n';
    out << "crossings = " << cd.crossings << '\n';
    out << "K = " << io::num(pr.tail_K) << " (C = " << io::num(m.c.C_sigma) << ")\n";
    out << "intersections = " << pr.intersections << '\n';
    out << "verified = " << (cd.verified ? "yes" : "no") << '\n';
    const int code = cd.verified ? Ok : VerifyFailed;
    if (!cd.verified) err << "candidate not verified: " << cd.diagnostic << '\n';
    run.write_manifest(code);
    return code;
}

inline int cmd_profile(const Args& a, std::ostream& out, std::ostream& err) {
    if (!(a.f0 > 0.0)) return cmd_shoot(a, out, err, true);
    Run run(a, "profile");
    const Model m(a.N, a.sigma, a.p);
    Controls c;
    c.rtol = a.rtol;
    c.atol = a.atol;
    const DirectShot ds = direct_shoot_ssode(a.f0, m, a.xi_end, c);
    io::write_profile_csv(run.path("profile.csv"), ds.profile, m);
    if (a.svg) profile_svg(run, ds.profile, m);
    out << "f0 = " << io::num(a.f0) << '\n';
    out << "terminal = " << terminal_name(ds.trajectory.terminal) << '\n';
    out << "samples = " << ds.profile.size() << '\n';
    out << "intersections = " << ds.profile.intersections << '\n';
    run.outcome["terminal"] = terminal_name(ds.trajectory.terminal);
    run.outcome["intersections"] = ds.profile.intersections;
    run.write_manifest(Ok);
    return Ok;
}

inline int cmd_portrait(const Args& a, std::ostream& out) {
    ChartId plane;
    if (a.plane == "X0") plane = ChartId::PlaneX0;
    else if (a.plane == "Z0") plane = ChartId::PlaneZ0;
    else throw DomainError("--plane must be X0 or Z0");
    Run run(a, "portrait");
    const Model m(a.N, a.sigma, a.p);
    const ShootOptions o = shoot_options(a);
    const auto curves = portrait(plane, m, o.controls, o.thresholds);
    bool ok = true;
    std::vector<io::Series> series;
    for (const auto& cv : curves) {
        std::string name = cv.name;
        std::replace(name.begin(), name.end(), '>', '_');
        name.erase(std::remove(name.begin(), name.end(), '-'), name.end());
        io::write_trajectory_csv(run.path("portrait_" + a.plane + "_" + name + ".csv"), cv.trajectory);
        out << cv.name << ": " << terminal_name(cv.trajectory.terminal) << (cv.matches() ? "" : " (expected " + terminal_name(cv.expected) + ")")
            << '\n';
        run.outcome["curves"][cv.name] = terminal_name(cv.trajectory.terminal);
        ok = ok && cv.matches();
        io::Series s{cv.name, {}, {}};
        for (const auto& x : cv.trajectory.x) {
            s.x.push_back(x[0]);
            s.y.push_back(x[1]);
        }
        series.push_back(std::move(s));
    }
    if (a.svg) {
        const auto cols = chart_columns(plane);
        io::write_svg(run.path("portrait_" + a.plane + ".svg"), series, cols[1], cols[2]);
    }
    const int code = ok ? Ok : VerifyFailed;
    run.write_manifest(code);
    return code;
}

}  // namespace detail

/// Entry point; returns the process exit code.
inline int run(std::vector<std::string> argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Self-similar blow-up profiles of u_t = Lu + |x|^sigma u^p"};
    app.require_subcommand(1);
    Args a;

    auto regime = [&](CLI::App* s) {
        s->add_option("--N", a.N, "space dimension")->required();
        s->add_option("--sigma", a.sigma, "weight exponent")->required();
        s->add_option("--p", a.p, "nonlinearity exponent")->required();
        s->add_option("--out", a.out, "output directory (HENON_OUT overrides)");
    };
    auto numerics = [&](CLI::App* s) {
        s->add_option("--rtol", a.rtol);
        s->add_option("--atol", a.atol);
        s->add_option("--span", a.span, "largest integration span");
        s->add_option("--seed-x0", a.seed_x0, "X at which backward shots are seeded");
        s->add_option("--strip-x", a.strip_x, "X beyond which the strip criterion applies");
        s->add_flag("--svg", a.svg, "also write SVG plots");
    };
    auto shooting = [&](CLI::App* s) {
        s->add_option("--mode", a.mode)->check(CLI::IsMember({"auto", "backward", "forward"}));
        s->add_option("--grid", a.grid, "sweep size")->check(CLI::Range(2, 1 << 20));
    };

    auto* exps = app.add_subcommand("exponents", "critical exponents and derived constants");
    regime(exps);
    auto* shoot = app.add_subcommand("shoot", "sweep, bisect and reconstruct a profile");
    regime(shoot);
    numerics(shoot);
    shooting(shoot);
    auto* sweep = app.add_subcommand("sweep", "label a grid of shots");
    regime(sweep);
    numerics(sweep);
    shooting(sweep);
    sweep->add_option("--workers", a.workers, "worker threads (0: all cores)");
    auto* port = app.add_subcommand("portrait", "separatrices of an invariant plane");
    regime(port);
    numerics(port);
    port->add_option("--plane", a.plane)->check(CLI::IsMember({"X0", "Z0"}));
    auto* prof = app.add_subcommand("profile", "profile CSV from a direct shot (--f0) or from shooting");
    regime(prof);
    numerics(prof);
    shooting(prof);
    prof->add_option("--f0", a.f0, "f(0) for a direct shot");
    prof->add_option("--xi-end", a.xi_end, "end of the direct shot");
    auto* ver = app.add_subcommand("verify", "run the acceptance checks");
    ver->add_option("--out", a.out, "scratch directory");
    ver->add_option("--workers", a.workers, "worker threads for sweeps");
    ver->add_option("--only", a.only, "criterion ids")->check(CLI::Range(1, 11));

    std::reverse(argv.begin(), argv.end());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return Usage;
    }

    try {
        if (*exps) return detail::cmd_exponents(a, out);
        if (*sweep) return detail::cmd_sweep(a, out);
        // Only sweeps run in parallel.
        a.workers = *ver ? a.workers : 1;
        if (*shoot) return detail::cmd_shoot(a, out, err);
        if (*port) return detail::cmd_portrait(a, out);
        if (*prof) return detail::cmd_profile(a, out, err);
        if (*ver) {
            verify::Options vo;
            vo.workers = a.workers;
            const char* env = std::getenv("HENON_OUT");
            vo.scratch_dir = env && *env ? env : a.out;
            vo.only.insert(a.only.begin(), a.only.end());
            vo.cli = [&](const std::vector<std::string>& args) {
                std::ostringstream sink;
                return run(args, sink, sink);
            };
            verify::Suite suite(vo);
            bool all = true;
            suite.run_all([&](const verify::CriterionResult& r) {
                out << verify::format_line(r) << std::endl;
                all = all && r.passed;
            });
            return all ? Ok : VerifyFailed;
        }
    } catch (const DomainError& e) {
        err << "invalid parameters: " << e.what() << '\n';
        return InvalidParams;
    } catch (const BracketInvalid& e) {
        err << e.what() << '\n';
        return NoCandidate;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return VerifyFailed;
    }
    return Usage;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace henon::cli
