#pragma once

// Minimal self-contained SVG line and box plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ramp::svg {

struct Series {
    std::string name;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    bool dashed = false;
};

struct Rect {
    double x0, y0, x1, y1;
    std::string color = "#1f77b4";
    double opacity = 0.15;
};

struct Plot {
    std::string title, xlabel, ylabel;
    std::vector<Series> series;
    std::vector<Rect> rects;
    std::vector<std::pair<double, double>> markers;  // drawn as crosses
    double width = 720, height = 420;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace detail

inline std::string render(const Plot& p) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    auto grow = [&](double x, double y) {
        if (!std::isfinite(x) || !std::isfinite(y)) return;
        xmin = std::min(xmin, x), xmax = std::max(xmax, x), ymin = std::min(ymin, y), ymax = std::max(ymax, y);
    };
    for (const auto& s : p.series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) grow(s.x[i], s.y[i]);
    for (const auto& r : p.rects) grow(r.x0, r.y0), grow(r.x1, r.y1);
    for (const auto& m : p.markers) grow(m.first, m.second);
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax - xmin < 1e-12) xmax = xmin + 1;
    if (ymax - ymin < 1e-12) ymax = ymin + 1;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad, ymax += pad;
    const double L = 70, R = 150, T = 40, B = 50;
    const double W = p.width - L - R, H = p.height - T - B;
    auto X = [&](double x) { return L + (x - xmin) / (xmax - xmin) * W; };
    auto Y = [&](double y) { return T + (ymax - y) / (ymax - ymin) * H; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.width << "\" height=\"" << p.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << p.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::escape(p.title) << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W << "\" height=\"" << H << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 5.0, yv = ymin + (ymax - ymin) * k / 5.0;
        o << "<text x=\"" << X(xv) << "\" y=\"" << T + H + 18 << "\" text-anchor=\"middle\">" << detail::num(xv) << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << Y(yv) + 4 << "\" text-anchor=\"end\">" << detail::num(yv) << "</text>\n";
        o << "<line x1=\"" << L << "\" x2=\"" << L + W << "\" y1=\"" << Y(yv) << "\" y2=\"" << Y(yv) << "\" stroke=\"#eee\"/>\n";
    }
    o << "<text x=\"" << L + W / 2 << "\" y=\"" << p.height - 12 << "\" text-anchor=\"middle\">" << detail::escape(p.xlabel) << "</text>\n";
    o << "<text x=\"16\" y=\"" << T + H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << T + H / 2 << ")\">" << detail::escape(p.ylabel) << "</text>\n";
    for (const auto& r : p.rects)
        o << "<rect x=\"" << X(std::min(r.x0, r.x1)) << "\" y=\"" << Y(std::max(r.y0, r.y1)) << "\" width=\"" << std::abs(X(r.x1) - X(r.x0))
          << "\" height=\"" << std::abs(Y(r.y1) - Y(r.y0)) << "\" fill=\"" << r.color << "\" fill-opacity=\"" << r.opacity << "\" stroke=\"" << r.color << "\"/>\n";
    int legend = 0;
    for (const auto& s : p.series) {
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) o << X(s.x[i]) << ',' << Y(s.y[i]) << ' ';
        o << "\"/>\n";
        const double ly = T + 14 + 18 * legend++;
        o << "<line x1=\"" << L + W + 10 << "\" x2=\"" << L + W + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << L + W + 35 << "\" y=\"" << ly + 4 << "\">" << detail::escape(s.name) << "</text>\n";
    }
    for (const auto& m : p.markers) {
        const double cx = X(m.first), cy = Y(m.second);
        o << "<path d=\"M" << cx - 5 << ',' << cy - 5 << " L" << cx + 5 << ',' << cy + 5 << " M" << cx - 5 << ',' << cy + 5 << " L" << cx + 5 << ','
          << cy - 5 << "\" stroke=\"red\" stroke-width=\"2\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

inline void write(const std::string& path, const Plot& p) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("svg: cannot write '" + path + "'");
    out << render(p);
}

}  // namespace ramp::svg
