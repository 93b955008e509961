#ifndef PURCELL_REPORT_SVG_HPP
#define PURCELL_REPORT_SVG_HPP

#include <string>
#include <vector>

namespace purcell::report
{
enum class SeriesStyle
{
    points,
    line,
    bars, // x are bin left edges; the last bar is as wide as the previous one
};

struct Series
{
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    SeriesStyle style = SeriesStyle::line;
    std::string color = "#1f77b4";
};

struct Plot
{
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    // Drawn in a lower panel sharing the x axis when non-empty.
    std::vector<Series> residuals;
    std::string residual_label = "residual";
};

/// Self-contained SVG document. Non-finite samples are skipped.
std::string render_svg(const Plot &plot);

} // namespace purcell::report

#endif // PURCELL_REPORT_SVG_HPP
