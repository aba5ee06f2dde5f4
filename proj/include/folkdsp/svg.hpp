#pragma once

// Minimal SVG emitters: a cluster scatter plot and a line chart.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "folkdsp/csv.hpp"
#include "folkdsp/error.hpp"
#include "folkdsp/matrix.hpp"

namespace folkdsp::svg {

inline constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                       "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

/// "Clusters = 6, inertia = 3227, sc = 0.096"
inline std::string cluster_caption(std::size_t k, double inertia, double silhouette) {
    return "Clusters = " + std::to_string(k) + ", inertia = " + std::to_string(std::llround(inertia)) +
           ", sc = " + csv::format_fixed(silhouette, 3);
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

namespace detail {

inline std::string num(double v) { return csv::format_fixed(v, 2); }

struct Frame {
    double width = 640, height = 520;
    double left = 60, right = 20, top = 40, bottom = 70;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }

    void fit(const std::vector<double>& xs, const std::vector<double>& ys, double pad = 0.05) {
        auto range = [pad](const std::vector<double>& v, double& lo, double& hi) {
            lo = std::numeric_limits<double>::infinity();
            hi = -lo;
            for (double x : v) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
            if (!std::isfinite(lo)) lo = 0, hi = 1;
            if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
            const double m = (hi - lo) * pad;
            lo -= m;
            hi += m;
        };
        range(xs, x0, x1);
        range(ys, y0, y1);
    }
};

inline void open(std::ostringstream& out, const Frame& f, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.width) << "\" height=\"" << num(f.height)
        << "\" viewBox=\"0 0 " << num(f.width) << ' ' << num(f.height) << "\" font-family=\"sans-serif\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty())
        out << "<text x=\"" << num(f.width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
            << escape(title) << "</text>\n";
    out << "<rect x=\"" << num(f.left) << "\" y=\"" << num(f.top) << "\" width=\"" << num(f.width - f.left - f.right)
        << "\" height=\"" << num(f.height - f.top - f.bottom) << "\" fill=\"none\" stroke=\"#444\"/>\n";
}

inline void ticks(std::ostringstream& out, const Frame& f, const std::string& xlabel, const std::string& ylabel) {
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0, yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        out << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(f.height - f.bottom + 16)
            << "\" text-anchor=\"middle\" font-size=\"10\">" << csv::format_fixed(xv, 2) << "</text>\n";
        out << "<text x=\"" << num(f.left - 6) << "\" y=\"" << num(f.py(yv) + 3)
            << "\" text-anchor=\"end\" font-size=\"10\">" << csv::format_fixed(yv, 2) << "</text>\n";
    }
    if (!xlabel.empty())
        out << "<text x=\"" << num(f.px((f.x0 + f.x1) / 2)) << "\" y=\"" << num(f.height - f.bottom + 32)
            << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(xlabel) << "</text>\n";
    if (!ylabel.empty())
        out << "<text x=\"14\" y=\"" << num(f.py((f.y0 + f.y1) / 2)) << "\" text-anchor=\"middle\" font-size=\"12\""
            << " transform=\"rotate(-90 14 " << num(f.py((f.y0 + f.y1) / 2)) << ")\">" << escape(ylabel) << "</text>\n";
}

}  // namespace detail

struct ScatterPlot {
    Matrix points;               // n x 2
    std::vector<int> clusters;   // n
    Matrix centroids;            // k x 2, may be empty
    std::string title;
    std::string caption;         // printed under the axes
    std::string xlabel = "x", ylabel = "y";
};

inline std::string render(const ScatterPlot& p) {
    if (p.points.cols() != 2 || static_cast<std::size_t>(p.points.rows()) != p.clusters.size())
        throw ShapeError("scatter plot needs n x 2 points and n cluster ids");
    if (p.centroids.size() > 0 && p.centroids.cols() != 2) throw ShapeError("centroids must be k x 2");

    std::vector<double> xs, ys;
    for (Eigen::Index i = 0; i < p.points.rows(); ++i) xs.push_back(p.points(i, 0)), ys.push_back(p.points(i, 1));
    for (Eigen::Index i = 0; i < p.centroids.rows(); ++i)
        xs.push_back(p.centroids(i, 0)), ys.push_back(p.centroids(i, 1));

    detail::Frame f;
    f.fit(xs, ys);
    std::ostringstream out;
    detail::open(out, f, p.title);
    detail::ticks(out, f, p.xlabel, p.ylabel);

    out << "<g class=\"points\">\n";
    for (Eigen::Index i = 0; i < p.points.rows(); ++i) {
        const int c = p.clusters[static_cast<std::size_t>(i)];
        out << "<circle cx=\"" << detail::num(f.px(p.points(i, 0))) << "\" cy=\"" << detail::num(f.py(p.points(i, 1)))
            << "\" r=\"3.5\" fill=\"" << kPalette[static_cast<std::size_t>(std::max(c, 0)) % kPalette.size()]
            << "\" fill-opacity=\"0.8\" data-cluster=\"" << c << "\"/>\n";
    }
    out << "</g>\n<g class=\"centroids\">\n";
    for (Eigen::Index i = 0; i < p.centroids.rows(); ++i) {
        const double cx = f.px(p.centroids(i, 0)), cy = f.py(p.centroids(i, 1));
        out << "<path d=\"M" << detail::num(cx - 7) << ' ' << detail::num(cy - 7) << " L" << detail::num(cx + 7) << ' '
            << detail::num(cy + 7) << " M" << detail::num(cx - 7) << ' ' << detail::num(cy + 7) << " L"
            << detail::num(cx + 7) << ' ' << detail::num(cy - 7) << "\" stroke=\"black\" stroke-width=\"3\"/>\n";
    }
    out << "</g>\n";
    if (!p.caption.empty())
        out << "<text class=\"caption\" x=\"" << detail::num(f.width / 2) << "\" y=\"" << detail::num(f.height - 12)
            << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(p.caption) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

struct Series {
    std::string name;
    std::vector<double> x, y;
};

struct LineChart {
    std::vector<Series> series;
    std::string title, xlabel, ylabel;
    bool log2_x = false;
};

inline std::string render(const LineChart& c) {
    std::vector<double> xs, ys;
    auto tx = [&](double x) { return c.log2_x ? std::log2(x) : x; };
    for (const auto& s : c.series) {
        if (s.x.size() != s.y.size()) throw ShapeError("series '" + s.name + "' has mismatched x and y");
        for (double x : s.x) xs.push_back(tx(x));
        ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    detail::Frame f;
    f.fit(xs, ys);
    std::ostringstream out;
    detail::open(out, f, c.title);
    detail::ticks(out, f, c.log2_x ? "log2 " + c.xlabel : c.xlabel, c.ylabel);

    for (std::size_t k = 0; k < c.series.size(); ++k) {
        const auto& s = c.series[k];
        const char* color = kPalette[k % kPalette.size()];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << (i ? " " : "") << detail::num(f.px(tx(s.x[i]))) << ',' << detail::num(f.py(s.y[i]));
        out << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << "<circle cx=\"" << detail::num(f.px(tx(s.x[i]))) << "\" cy=\"" << detail::num(f.py(s.y[i]))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << detail::num(f.width - f.right - 8) << "\" y=\"" << detail::num(f.top + 16 + 14.0 * k)
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << escape(s.name) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace folkdsp::svg
