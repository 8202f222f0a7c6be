#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "henon/profiles.hpp"
#include "henon/shooting.hpp"

namespace henon::io {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    return os;
}

/// One row per recorded sample, columns named after the chart.
inline void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
    auto os = open_out(path);
    const auto cols = chart_columns(tr.chart);
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    const std::size_t d = cols.size() - 1;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        os << num(tr.t[i]);
        for (std::size_t j = 0; j < d; ++j) os << ',' << num(tr.x[i][j]);
        os << '\n';
    }
}

inline void write_events_csv(const std::string& path, const Trajectory& tr) {
    auto os = open_out(path);
    os << "eta,kind,X,Y,Z\n";
    for (const auto& e : tr.events)
        os << num(e.t) << ',' << event_name(e.kind) << ',' << num(e.state[0]) << ',' << num(e.state[1]) << ','
           << num(e.state[2]) << '\n';
}

inline void write_sweep_csv(const std::string& path, const std::vector<ShotOutcome>& sweep) {
    auto os = open_out(path);
    os << "family_parameter,set_label,crossings_Z0,terminal,eta_span_used\n";
    for (const auto& o : sweep)
        os << num(o.family_parameter) << ',' << label_name(o.set_label) << ',' << o.crossings_Z0 << ','
           << terminal_name(o.origin) << ',' << num(o.eta_span_used) << '\n';
}

inline void write_profile_csv(const std::string& path, const Profile& pr, const Model& m) {
    auto os = open_out(path);
    os << "# N=" << m.params.N << " sigma=" << num(m.sigma()) << " p=" << num(m.p()) << " f0=" << num(pr.f0)
       << " K=" << num(pr.tail_K) << " intersections=" << pr.intersections << '\n';
    os << "xi,f,fprime,g\n";
    for (std::size_t i = 0; i < pr.size(); ++i)
        os << num(pr.xi[i]) << ',' << num(pr.f[i]) << ',' << num(pr.fp[i]) << ','
           << num(std::pow(pr.xi[i], m.c.a) * pr.f[i]) << '\n';
}

struct Series {
    std::string name;
    std::vector<double> x, y;
};

/// Minimal SVG line plot with a bounding box and axis range labels.
inline void write_svg(const std::string& path, const std::vector<Series>& series, const std::string& xlabel,
                      const std::string& ylabel, std::size_t max_points = 4000) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    const double W = 640, H = 480, L = 70, R = 20, T = 20, B = 50;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    auto os = open_out(path);
    char buf[128];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    std::snprintf(buf, sizeof buf, "%.4g", x0);
    os << "<text x=\"" << L << "\" y=\"" << H - B + 18 << "\" font-size=\"12\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.4g", x1);
    os << "<text x=\"" << W - R << "\" y=\"" << H - B + 18 << "\" font-size=\"12\" text-anchor=\"end\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.4g", y0);
    os << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" font-size=\"12\" text-anchor=\"end\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.4g", y1);
    os << "<text x=\"" << L - 4 << "\" y=\"" << T + 10 << "\" font-size=\"12\" text-anchor=\"end\">" << buf << "</text>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" font-size=\"14\" text-anchor=\"middle\">" << xlabel
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" font-size=\"14\" transform=\"rotate(-90 16 " << (T + H - B) / 2
       << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const std::size_t stride = std::max<std::size_t>(1, s.x.size() / max_points);
        os << "<polyline fill=\"none\" stroke=\"" << colors[k % 6] << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); i += stride) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
            os << buf;
        }
        os << "\"/>\n";
        os << "<text x=\"" << W - R - 6 << "\" y=\"" << T + 16 + 16 * k << "\" font-size=\"12\" text-anchor=\"end\" fill=\""
           << colors[k % 6] << "\">" << s.name << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace henon::io
