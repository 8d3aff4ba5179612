// Minimal SVG line charts for result rows: one polyline per metric, x axis
// is the generation when it varies and n otherwise, y is the per-x mean.
// No styling guarantees; this exists so sweeps can be eyeballed quickly.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stllab/csv.hpp"

namespace stllab {

inline std::string svg_line_chart(const std::vector<ResultRow>& rows) {
    bool gen_varies = false;
    for (const auto& r : rows)
        if (r.generation != rows.front().generation) gen_varies = true;
    auto x_of = [&](const ResultRow& r) {
        return gen_varies ? static_cast<double>(r.generation) : static_cast<double>(r.n);
    };

    std::map<std::string, std::map<double, std::pair<double, std::size_t>>> series;
    for (const auto& r : rows) {
        if (!std::isfinite(r.value)) continue;
        auto& acc = series[r.metric][x_of(r)];
        acc.first += r.value;
        acc.second += 1;
    }
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& [name, pts] : series)
        for (const auto& [x, acc] : pts) {
            const double y = acc.first / static_cast<double>(acc.second);
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;

    const double W = 720, H = 420, mL = 70, mR = 170, mT = 20, mB = 45;
    auto px = [&](double x) { return mL + (x - xmin) / (xmax - xmin) * (W - mL - mR); };
    auto py = [&](double y) { return H - mB - (y - ymin) / (ymax - ymin) * (H - mT - mB); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << mL << "\" y1=\"" << H - mB << "\" x2=\"" << W - mR << "\" y2=\""
       << H - mB << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << mL << "\" y1=\"" << mT << "\" x2=\"" << mL << "\" y2=\"" << H - mB
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (mL + W - mR) / 2 << "\" y=\"" << H - 10
       << "\" font-size=\"12\" text-anchor=\"middle\">" << (gen_varies ? "generation" : "n")
       << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 4.0;
        const double yv = ymin + (ymax - ymin) * t / 4.0;
        os << "<text x=\"" << px(xv) << "\" y=\"" << H - mB + 16
           << "\" font-size=\"10\" text-anchor=\"middle\">" << xv << "</text>\n";
        os << "<text x=\"" << mL - 6 << "\" y=\"" << py(yv) + 3
           << "\" font-size=\"10\" text-anchor=\"end\">" << yv << "</text>\n";
    }
    int ci = 0;
    for (const auto& [name, pts] : series) {
        const char* color = colors[ci % 8];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, acc] : pts)
            os << px(x) << "," << py(acc.first / static_cast<double>(acc.second)) << " ";
        os << "\"/>\n";
        os << "<text x=\"" << W - mR + 8 << "\" y=\"" << mT + 14 + 14 * ci
           << "\" font-size=\"10\" fill=\"" << color << "\">" << name << "</text>\n";
        ++ci;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace stllab
