#include "mrcdm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mrcdm/csv.hpp"
#include "mrcdm/errors.hpp"

namespace mrcdm {

namespace {

constexpr double kWidth = 720, kHeight = 360;
constexpr double kMarginLeft = 56, kMarginRight = 16, kMarginTop = 32, kMarginBottom = 36;

std::string fmt(double x) {
    // short fixed formatting is fine for coordinates
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

}  // namespace

void write_svg_line_plot(const std::string& path, const std::string& title,
                         const std::vector<SvgSeries>& series) {
    if (series.empty()) throw DataError("write_svg_line_plot: no series");

    double x_max = 1.0, y_min = 1e300, y_max = -1e300;
    for (const auto& s : series) {
        x_max = std::max(x_max, s.x_offset + static_cast<double>(s.values.size()) - 1.0);
        for (double v : s.values) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    }
    if (y_min > y_max) throw DataError("write_svg_line_plot: empty series");
    if (y_max - y_min < 1e-12) {
        y_max += 1.0;
        y_min -= 1.0;
    }
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto sx = [&](double x) { return kMarginLeft + plot_w * x / x_max; };
    auto sy = [&](double y) { return kMarginTop + plot_h * (1.0 - (y - y_min) / (y_max - y_min)); };

    std::ofstream out(path);
    if (!out) throw IoError("write_svg_line_plot: cannot open " + path + " for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\" "
           "font-family=\"sans-serif\">"
        << title << "</text>\n";

    // axes
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
        << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = y_min + (y_max - y_min) * i / 4.0;
        out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << sy(y) + 4
            << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << fmt(y)
            << "</text>\n";
        const double x = x_max * i / 4.0;
        out << "<text x=\"" << sx(x) << "\" y=\"" << kMarginTop + plot_h + 16
            << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">"
            << fmt(x) << "</text>\n";
    }

    double legend_y = kMarginTop + 6;
    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
        if (s.dashed) out << " stroke-dasharray=\"6 3\"";
        out << " points=\"";
        for (std::size_t i = 0; i < s.values.size(); ++i)
            out << fmt(sx(s.x_offset + static_cast<double>(i))) << ',' << fmt(sy(s.values[i])) << ' ';
        out << "\"/>\n";
        out << "<line x1=\"" << kMarginLeft + plot_w - 120 << "\" y1=\"" << legend_y << "\" x2=\""
            << kMarginLeft + plot_w - 100 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 3\"" : "") << "/>\n";
        out << "<text x=\"" << kMarginLeft + plot_w - 94 << "\" y=\"" << legend_y + 4
            << "\" font-size=\"10\" font-family=\"sans-serif\">" << s.label << "</text>\n";
        legend_y += 14;
    }
    out << "</svg>\n";
    if (!out) throw IoError("write_svg_line_plot: write failed for " + path);
}

void write_svg_heatmap(const std::string& path, const ImageTensor& img, int channel) {
    if (channel < 0 || channel >= img.channels)
        throw DataError("write_svg_heatmap: channel out of range");

    double lo = 1e300, hi = -1e300;
    for (int r = 0; r < kCanvas; ++r)
        for (int c = 0; c < kCanvas; ++c) {
            lo = std::min(lo, img.at(channel, r, c));
            hi = std::max(hi, img.at(channel, r, c));
        }
    if (hi - lo < 1e-12) hi = lo + 1.0;

    constexpr int cell = 12;
    std::ofstream out(path);
    if (!out) throw IoError("write_svg_heatmap: cannot open " + path + " for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvas * cell << "\" height=\""
        << kCanvas * cell << "\">\n";
    for (int r = 0; r < kCanvas; ++r) {
        for (int c = 0; c < kCanvas; ++c) {
            const int g =
                static_cast<int>(std::lround(255.0 * (img.at(channel, r, c) - lo) / (hi - lo)));
            out << "<rect x=\"" << c * cell << "\" y=\"" << r * cell << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"rgb(" << g << ',' << g << ',' << g
                << ")\"/>\n";
        }
    }
    out << "</svg>\n";
    if (!out) throw IoError("write_svg_heatmap: write failed for " + path);
}

}  // namespace mrcdm
