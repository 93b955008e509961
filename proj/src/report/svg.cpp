#include "purcell/report/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace purcell::report
{
namespace
{
constexpr double kWidth = 720.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kMainHeight = 320.0;
constexpr double kResidualHeight = 110.0;
constexpr double kGap = 30.0;
constexpr double kBottom = 50.0;

struct Range
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v)
    {
        if (std::isfinite(v))
        {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish(bool pad)
    {
        if (!(hi >= lo))
        {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi)))
        {
            const double d = std::max(std::abs(hi) * 0.05, 0.5);
            lo -= d;
            hi += d;
        }
        else if (pad)
        {
            const double d = 0.05 * (hi - lo);
            lo -= d;
            hi += d;
        }
    }
};

std::string escape(const std::string &s)
{
    std::string out;
    for (const char c : s)
    {
        switch (c)
        {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

std::vector<double> ticks(const Range &r)
{
    const double raw = (r.hi - r.lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (const double m : {1.0, 2.0, 5.0, 10.0})
    {
        step = m * mag;
        if (raw <= step)
        {
            break;
        }
    }
    std::vector<double> out;
    for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-9 * step; t += step)
    {
        out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    }
    return out;
}

struct Panel
{
    double top;
    double height;
    Range x;
    Range y;

    double px(double v) const { return kLeft + (v - x.lo) / (x.hi - x.lo) * (kWidth - kLeft - kRight); }
    double py(double v) const { return top + height - (v - y.lo) / (y.hi - y.lo) * height; }
};

void draw_panel(std::string &svg, const Panel &p, const std::vector<Series> &series, const std::string &y_label,
                bool x_labels)
{
    svg += fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="{:.1f}" height="{:.1f}" fill="none" stroke="#333"/>)"
                       "\n",
                       kLeft, p.top, kWidth - kLeft - kRight, p.height);
    for (const double t : ticks(p.y))
    {
        svg += fmt::format(R"(<line x1="{:.1f}" y1="{:.1f}" x2="{:.1f}" y2="{:.1f}" stroke="#ddd"/>)"
                           R"(<text x="{:.1f}" y="{:.1f}" font-size="11" text-anchor="end">{:g}</text>)"
                           "\n",
                           kLeft, p.py(t), kWidth - kRight, p.py(t), kLeft - 5, p.py(t) + 4, t);
    }
    for (const double t : ticks(p.x))
    {
        svg += fmt::format(R"(<line x1="{:.1f}" y1="{:.1f}" x2="{:.1f}" y2="{:.1f}" stroke="#eee"/>)" "\n",
                           p.px(t), p.top, p.px(t), p.top + p.height);
        if (x_labels)
        {
            svg += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="11" text-anchor="middle">{:g}</text>)"
                               "\n",
                               p.px(t), p.top + p.height + 15, t);
        }
    }
    svg += fmt::format(R"svg(<text x="15" y="{:.1f}" font-size="12" transform="rotate(-90 15 {:.1f})" )svg"
                       R"(text-anchor="middle">{}</text>)"
                       "\n",
                       p.top + p.height / 2, p.top + p.height / 2, escape(y_label));

    for (const auto &s : series)
    {
        svg += fmt::format(R"(<g data-series="{}">)" "\n", escape(s.name));
        const std::size_t n = std::min(s.x.size(), s.y.size());
        if (s.style == SeriesStyle::line)
        {
            std::string d;
            bool pen_down = false;
            for (std::size_t i = 0; i < n; ++i)
            {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                {
                    pen_down = false;
                    continue;
                }
                d += fmt::format("{}{:.2f},{:.2f} ", pen_down ? "L" : "M", p.px(s.x[i]), p.py(s.y[i]));
                pen_down = true;
            }
            svg += fmt::format(R"(<path d="{}" fill="none" stroke="{}" stroke-width="1.5"/>)" "\n", d, s.color);
        }
        else if (s.style == SeriesStyle::points)
        {
            for (std::size_t i = 0; i < n; ++i)
            {
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                {
                    svg += fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="2" fill="{}"/>)" "\n", p.px(s.x[i]),
                                       p.py(s.y[i]), s.color);
                }
            }
        }
        else
        {
            for (std::size_t i = 0; i < n; ++i)
            {
                const double w = (i + 1 < n) ? s.x[i + 1] - s.x[i] : (n > 1 ? s.x[i] - s.x[i - 1] : 1.0);
                const double x0 = p.px(s.x[i]);
                const double x1 = p.px(s.x[i] + w);
                const double y0 = p.py(std::max(p.y.lo, 0.0));
                const double y1 = p.py(s.y[i]);
                svg += fmt::format(
                    R"(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" fill="{}" stroke="#fff"/>)" "\n",
                    x0, std::min(y0, y1), std::max(x1 - x0, 0.5), std::abs(y0 - y1), s.color);
            }
        }
        svg += "</g>\n";
    }
}
} // namespace

std::string render_svg(const Plot &plot)
{
    Range xr;
    Range yr;
    Range rr;
    bool has_bars = false;
    for (const auto &s : plot.series)
    {
        for (std::size_t i = 0; i < s.x.size(); ++i)
        {
            xr.add(s.x[i]);
        }
        for (const double v : s.y)
        {
            yr.add(v);
        }
        if (s.style == SeriesStyle::bars && !s.x.empty())
        {
            has_bars = true;
            yr.add(0.0);
            xr.add(s.x.back() + (s.x.size() > 1 ? s.x.back() - s.x[s.x.size() - 2] : 1.0));
        }
    }
    for (const auto &s : plot.residuals)
    {
        for (const double v : s.x)
        {
            xr.add(v);
        }
        for (const double v : s.y)
        {
            rr.add(v);
        }
    }
    xr.finish(!has_bars);
    yr.finish(true);
    rr.finish(true);

    const bool with_residuals = !plot.residuals.empty();
    const double height =
        kTop + kMainHeight + (with_residuals ? kGap + kResidualHeight : 0.0) + kBottom;
    std::string svg = fmt::format(
        R"(<svg xmlns="http://www.w3.org/2000/svg" width="{:.0f}" height="{:.0f}" viewBox="0 0 {:.0f} {:.0f}" )"
        R"(font-family="sans-serif">)"
        "\n<title>{}</title>\n"
        R"(<rect width="100%" height="100%" fill="#fff"/>)"
        "\n"
        R"(<text x="{:.1f}" y="22" font-size="14" text-anchor="middle">{}</text>)"
        "\n",
        kWidth, height, kWidth, height, escape(plot.title), kWidth / 2, escape(plot.title));

    const Panel main{kTop, kMainHeight, xr, yr};
    draw_panel(svg, main, plot.series, plot.y_label, !with_residuals);
    double x_axis_bottom = kTop + kMainHeight;
    if (with_residuals)
    {
        const Panel lower{kTop + kMainHeight + kGap, kResidualHeight, xr, rr};
        draw_panel(svg, lower, plot.residuals, plot.residual_label, true);
        x_axis_bottom = lower.top + lower.height;
    }
    svg += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="12" text-anchor="middle">{}</text>)" "\n",
                       (kLeft + kWidth - kRight) / 2, x_axis_bottom + 35, escape(plot.x_label));

    double ly = kTop + 15;
    for (const auto &s : plot.series)
    {
        svg += fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="10" height="10" fill="{}"/>)"
                           R"(<text x="{:.1f}" y="{:.1f}" font-size="11">{}</text>)"
                           "\n",
                           kWidth - kRight - 170, ly - 9, s.color, kWidth - kRight - 155, ly, escape(s.name));
        ly += 15;
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace purcell::report
