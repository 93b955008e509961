#include "purcell/fitting/fits.hpp"

#include "purcell/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace purcell::fit
{
namespace
{
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kPeriodGrid = 4000;

double sinusoid(double x, std::span<const double> p)
{
    return p[0] * std::cos(kTwoPi * (x - p[1]) / p[2]) + p[3];
}

struct LinearFit
{
    double rss = INFINITY;
    double amplitude = 0.0;
    double phase_deg = 0.0;
    double offset = 0.0;
};

// For a fixed period the model is linear in (cos, sin, 1).
LinearFit fit_fixed_period(std::span<const double> x, std::span<const double> y, double period)
{
    Eigen::MatrixXd a(static_cast<Eigen::Index>(x.size()), 3);
    Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const auto r = static_cast<Eigen::Index>(i);
        a(r, 0) = std::cos(kTwoPi * x[i] / period);
        a(r, 1) = std::sin(kTwoPi * x[i] / period);
        a(r, 2) = 1.0;
        b[r] = y[i];
    }
    const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
    LinearFit out;
    out.rss = (a * c - b).squaredNorm();
    out.amplitude = std::hypot(c[0], c[1]);
    out.phase_deg = std::atan2(c[1], c[0]) * period / kTwoPi;
    out.offset = c[2];
    return out;
}
} // namespace

FitResult fit_sinusoid(std::span<const double> angles_deg, std::span<const double> amplitude)
{
    const std::size_t n = angles_deg.size();
    if (n != amplitude.size())
    {
        throw FitError("angle and amplitude arrays differ in length");
    }
    if (n < 8)
    {
        throw FitError("sinusoid fit needs at least 8 samples");
    }
    std::vector<double> x(angles_deg.begin(), angles_deg.end());
    std::vector<double> y(amplitude.begin(), amplitude.end());
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        xs[i] = x[order[i]];
        ys[i] = y[order[i]];
    }

    const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
    double tss = 0.0;
    for (double v : ys)
    {
        tss += (v - mean) * (v - mean);
    }
    const double scale = std::max(std::abs(mean), *std::max_element(ys.begin(), ys.end()) - *std::min_element(ys.begin(), ys.end()));
    if (tss <= 1e-24 * std::max(scale * scale, 1e-300) * static_cast<double>(n) || tss == 0.0)
    {
        throw DegenerateError("flat data: period unidentifiable");
    }

    const double span = xs.back() - xs.front();
    std::vector<double> gaps;
    for (std::size_t i = 1; i < n; ++i)
    {
        if (xs[i] > xs[i - 1])
        {
            gaps.push_back(xs[i] - xs[i - 1]);
        }
    }
    if (gaps.empty())
    {
        throw DegenerateError("all samples at one angle: period unidentifiable");
    }
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
    const double p_min = 2.0 * gaps[gaps.size() / 2];
    const double p_max = span;
    if (!(p_max > p_min))
    {
        throw DegenerateError("samples do not span a resolvable period");
    }

    LinearFit best;
    double best_period = p_min;
    const double ratio = std::log(p_max / p_min);
    for (std::size_t k = 0; k <= kPeriodGrid; ++k)
    {
        const double period = p_min * std::exp(ratio * static_cast<double>(k) / kPeriodGrid);
        const LinearFit f = fit_fixed_period(xs, ys, period);
        if (f.rss < best.rss)
        {
            best = f;
            best_period = period;
        }
    }
    // A periodic component must explain a non-trivial share of the variance.
    if (!(best.rss < 0.5 * tss))
    {
        throw DegenerateError("no periodic component explains the data");
    }

    Model model{"sinusoid", {"amplitude", "x0_deg", "period_deg", "offset"}, sinusoid};
    Bounds bounds{{0.0, -INFINITY, p_min, -INFINITY}, {INFINITY, INFINITY, 2.0 * span, INFINITY}};
    NllsOptions options;
    options.param_scale = {best.amplitude, best_period, best_period, std::max(std::abs(best.offset), best.amplitude)};
    FitResult r = nlls_fit(model, FitData{xs, ys, {}}, {best.amplitude, best.phase_deg, best_period, best.offset},
                           bounds, options);
    r.set_derived("period_deg", r.params[2], r.sigma[2]);
    return r;
}

} // namespace purcell::fit
