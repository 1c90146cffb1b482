#pragma once

#include <string>
#include <vector>

#include "mrcdm/image.hpp"
#include "mrcdm/timeseries.hpp"

namespace mrcdm {

/// One polyline in a line plot.
struct SvgSeries {
    std::string label;
    std::string color = "#1f77b4";
    bool dashed = false;
    std::vector<double> values;
    double x_offset = 0.0;  ///< shift along the x axis (e.g. history vs forecast)
};

/// Dependency-free SVG line plot with axes and a legend.
void write_svg_line_plot(const std::string& path, const std::string& title,
                         const std::vector<SvgSeries>& series);

/// Grayscale heatmap of one image channel.
void write_svg_heatmap(const std::string& path, const ImageTensor& img, int channel);

}  // namespace mrcdm
