#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pcatdyn/config.hpp"

namespace pcatdyn::svg {

// Minimal deterministic SVG line/heat charts for the report bundle. Numeric
// output uses fixed %.6g formatting so identical runs emit identical bytes.

inline std::string num(double v) { return fmt_g(v, 6); }

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f6fb4", "#d1495b", "#3d9970", "#ef8a17",
                                   "#7d5ba6", "#5b5b5b", "#17a2b8", "#a0522d"};
    return colors[i % 8];
}

struct line_series {
    std::string name;
    std::vector<double> x, y;
};

struct line_chart {
    std::string title, x_label, y_label;
    std::vector<line_series> series;
    std::optional<double> vline;  // dashed vertical marker (the Pa scan)
};

inline std::string render(const line_chart& c) {
    const double W = 720, H = 440, L = 70, R = 160, T = 40, B = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : c.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmax > xmin)) xmax = xmin + 1;
    if (!(ymax > ymin)) {
        ymax = ymin + 1;
        ymin -= 1;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
          "font-family=\"sans-serif\">"
       << c.title << "</text>\n";

    // axes
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 5.0;
        const double yv = ymin + (ymax - ymin) * t / 5.0;
        os << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - B + 18
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << num(xv)
           << "</text>\n";
        os << "<text x=\"" << L - 8 << "\" y=\"" << num(py(yv) + 4)
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << num(yv)
           << "</text>\n";
        os << "<line x1=\"" << L << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << W - R << "\" y2=\""
           << num(py(yv)) << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << c.x_label
       << "</text>\n";
    os << "<text x=\"18\" y=\"" << (T + H - B) / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 18 "
       << (T + H - B) / 2 << ")\">" << c.y_label << "</text>\n";

    if (c.vline) {
        os << "<line x1=\"" << num(px(*c.vline)) << "\" y1=\"" << T << "\" x2=\""
           << num(px(*c.vline)) << "\" y2=\"" << H - B
           << "\" stroke=\"#333333\" stroke-dasharray=\"6,4\"/>\n";
    }

    for (std::size_t s = 0; s < c.series.size(); ++s) {
        os << "<polyline fill=\"none\" stroke=\"" << palette(s) << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < c.series[s].x.size(); ++i) {
            if (i) os << " ";
            os << num(px(c.series[s].x[i])) << "," << num(py(c.series[s].y[i]));
        }
        os << "\"/>\n";
        const double ly = T + 16.0 * double(s);
        os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << num(ly) << "\" x2=\"" << W - R + 34
           << "\" y2=\"" << num(ly) << "\" stroke=\"" << palette(s) << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - R + 40 << "\" y=\"" << num(ly + 4)
           << "\" font-size=\"11\" font-family=\"sans-serif\">" << c.series[s].name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

struct heat_chart {
    std::string title;
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;
    std::vector<std::vector<std::optional<double>>> cells;  // [row][col]
    double clip_lo = -30, clip_hi = 30;
};

inline std::string render(const heat_chart& c) {
    const double cell_w = 46, cell_h = 16, left = 330, top = 60;
    const double W = left + cell_w * double(c.col_names.size()) + 40;
    const double H = top + cell_h * double(c.row_names.size()) + 30;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << num(W) << " " << num(H) << "\">\n";
    os << "<rect width=\"" << num(W) << "\" height=\"" << num(H) << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(W / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
          "font-family=\"sans-serif\">"
       << c.title << "</text>\n";
    for (std::size_t col = 0; col < c.col_names.size(); ++col)
        os << "<text x=\"" << num(left + cell_w * (double(col) + 0.5)) << "\" y=\"" << top - 8
           << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">"
           << c.col_names[col] << "</text>\n";

    for (std::size_t row = 0; row < c.row_names.size(); ++row) {
        const double y = top + cell_h * double(row);
        os << "<text x=\"" << left - 8 << "\" y=\"" << num(y + cell_h - 4)
           << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">"
           << c.row_names[row] << "</text>\n";
        for (std::size_t col = 0; col < c.col_names.size(); ++col) {
            std::string fill = "#f0f0f0";  // undefined
            if (col < c.cells[row].size() && c.cells[row][col]) {
                double v = std::clamp(*c.cells[row][col], c.clip_lo, c.clip_hi);
                const double t = (v - c.clip_lo) / (c.clip_hi - c.clip_lo);
                // blue (decrease) -> white -> red (increase)
                const int rch = int(std::lround(255 * std::min(1.0, 2.0 * t)));
                const int bch = int(std::lround(255 * std::min(1.0, 2.0 * (1.0 - t))));
                const int gch = int(std::lround(255 * (1.0 - 2.0 * std::abs(t - 0.5))));
                char buf[16];
                std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rch, gch, bch);
                fill = buf;
            }
            os << "<rect x=\"" << num(left + cell_w * double(col)) << "\" y=\"" << num(y)
               << "\" width=\"" << cell_w << "\" height=\"" << cell_h << "\" fill=\"" << fill
               << "\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n";
        }
    }
    os << "<text x=\"" << left << "\" y=\"" << num(H - 8)
       << "\" font-size=\"10\" font-family=\"sans-serif\">values clipped to ["
       << num(c.clip_lo) << "%, " << num(c.clip_hi) << "%] for display</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace pcatdyn::svg
