/********************************************************************************
* Copyright 2026 The detkit Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*    http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
********************************************************************************/

#include "detkit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace detkit::svg {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 160;  // legend gutter
constexpr int kMarginTop = 48;
constexpr int kMarginBottom = 56;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                          "#bcbd22", "#17becf"};

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label,
                       const std::vector<Series>& series,
                       const std::string& annotation) {
    double x_max = 1.0, y_max = 1.0;
    for (const auto& s : series) {
        for (double v : s.x) x_max = std::max(x_max, v);
        for (double v : s.y) y_max = std::max(y_max, v);
    }

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto px = [&](double x) { return kMarginLeft + x / x_max * plot_w; };
    auto py = [&](double y) { return kMarginTop + (1.0 - y / y_max) * plot_h; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-size=\"16\">" << escape(title) << "</text>\n";

    // Grid and ticks at fifths.
    for (int i = 0; i <= 5; ++i) {
        const double fx = x_max * i / 5.0;
        const double fy = y_max * i / 5.0;
        out << "<line x1=\"" << px(fx) << "\" y1=\"" << py(0) << "\" x2=\""
            << px(fx) << "\" y2=\"" << py(y_max)
            << "\" stroke=\"#dddddd\"/>\n";
        out << "<line x1=\"" << px(0) << "\" y1=\"" << py(fy) << "\" x2=\""
            << px(x_max) << "\" y2=\"" << py(fy)
            << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << px(fx) << "\" y=\"" << py(0) + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(fx)
            << "</text>\n";
        out << "<text x=\"" << px(0) - 8 << "\" y=\"" << py(fy) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(fy)
            << "</text>\n";
    }

    // Axes.
    out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\""
        << px(x_max) << "\" y2=\"" << py(0) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(0)
        << "\" y2=\"" << py(y_max) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(x_max / 2) << "\" y=\"" << kHeight - 14
        << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(x_label)
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << py(y_max / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 "
        << 18 << ' ' << py(y_max / 2) << ")\">" << escape(y_label)
        << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % std::size(kPalette)];
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"" << (s.label == "all classes" ? 2.5 : 1.2)
            << "\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        out << "\"/>\n";

        const double ly = kMarginTop + 16.0 * static_cast<double>(si);
        out << "<line x1=\"" << kWidth - kMarginRight + 12 << "\" y1=\"" << ly
            << "\" x2=\"" << kWidth - kMarginRight + 34 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kWidth - kMarginRight + 40 << "\" y=\"" << ly + 4
            << "\" font-size=\"11\">" << escape(s.label) << "</text>\n";
    }

    if (!annotation.empty()) {
        out << "<text x=\"" << kWidth - kMarginRight + 12 << "\" y=\""
            << kHeight - kMarginBottom
            << "\" font-size=\"12\" font-weight=\"bold\">" << escape(annotation)
            << "</text>\n";
    }

    out << "</svg>\n";
    return out.str();
}

std::string heatmap(const std::string& title,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels,
                    const std::vector<std::vector<double>>& values) {
    const int rows = static_cast<int>(row_labels.size());
    const int cols = static_cast<int>(col_labels.size());
    const int cell = 64;
    const int left = 200;
    const int top = 120;
    const int width = left + cols * cell + 40;
    const int height = top + rows * cell + 40;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" "
        << "font-size=\"16\">" << escape(title) << "</text>\n";

    for (int c = 0; c < cols; ++c) {
        const int x = left + c * cell + cell / 2;
        out << "<text x=\"" << x << "\" y=\"" << top - 10
            << "\" text-anchor=\"end\" font-size=\"11\" transform=\"rotate(-35 "
            << x << ' ' << top - 10 << ")\">" << escape(col_labels[c])
            << "</text>\n";
    }

    for (int r = 0; r < rows; ++r) {
        out << "<text x=\"" << left - 8 << "\" y=\""
            << top + r * cell + cell / 2 + 4
            << "\" text-anchor=\"end\" font-size=\"11\">"
            << escape(row_labels[r]) << "</text>\n";
        for (int c = 0; c < cols; ++c) {
            const double v = std::clamp(values[r][c], 0.0, 1.0);
            // White-to-blue ramp.
            const int red = static_cast<int>(std::lround(255 - 207 * v));
            const int green = static_cast<int>(std::lround(255 - 136 * v));
            const int blue = static_cast<int>(std::lround(255 - 75 * v));
            char color[16];
            std::snprintf(color, sizeof(color), "#%02x%02x%02x", red, green,
                          blue);
            const int x = left + c * cell;
            const int y = top + r * cell;
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"" << color
                << "\" stroke=\"#999999\"/>\n";
            if (values[r][c] > 0.0) {
                char text[32];
                std::snprintf(text, sizeof(text), "%.2f", values[r][c]);
                out << "<text x=\"" << x + cell / 2 << "\" y=\""
                    << y + cell / 2 + 4
                    << "\" text-anchor=\"middle\" font-size=\"12\" fill=\""
                    << (v > 0.6 ? "white" : "black") << "\">" << text
                    << "</text>\n";
            }
        }
    }

    out << "</svg>\n";
    return out.str();
}

}  // namespace detkit::svg
