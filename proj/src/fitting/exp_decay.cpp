#include "purcell/fitting/fits.hpp"

#include "purcell/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace purcell::fit
{
namespace
{
constexpr std::size_t kSmoothWidth = 5;
constexpr double kWindowStartNs = 0.5;
constexpr std::size_t kMinWindowBins = 10;
constexpr double kMinSpanBins = 64.0;

std::vector<double> moving_average(const LifetimeTrace &trace)
{
    const std::size_t n = trace.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
    {
        const std::size_t lo = i >= kSmoothWidth / 2 ? i - kSmoothWidth / 2 : 0;
        const std::size_t hi = std::min(n, i + kSmoothWidth / 2 + 1);
        double sum = 0.0;
        for (std::size_t k = lo; k < hi; ++k)
        {
            sum += static_cast<double>(trace.counts[k]);
        }
        out[i] = sum / static_cast<double>(hi - lo);
    }
    return out;
}

double decay_model(double t, std::span<const double> p)
{
    return p[0] * std::exp(-t / p[1]) + p[2];
}

// Mean of the bins ahead of the excitation rise, or of the trace tail when the
// rise sits too close to bin zero.
double initial_background(const LifetimeTrace &trace, const std::vector<double> &smooth, double peak_value)
{
    std::size_t rise = 0;
    while (rise < smooth.size() && smooth[rise] < 0.5 * peak_value)
    {
        ++rise;
    }
    const auto margin = static_cast<std::size_t>(std::ceil(1000.0 / trace.bin_width_ps));
    std::size_t lo = 0;
    std::size_t hi = rise > margin ? rise - margin : 0;
    if (hi < kMinWindowBins)
    {
        lo = trace.size() - std::max<std::size_t>(trace.size() / 10, 1);
        hi = trace.size();
    }
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
    {
        sum += static_cast<double>(trace.counts[i]);
    }
    return sum / static_cast<double>(hi - lo);
}
} // namespace

double decay_peak_time_ns(const LifetimeTrace &trace)
{
    trace.validate();
    if (trace.size() == 0)
    {
        throw FitError("empty lifetime trace");
    }
    const std::vector<double> smooth = moving_average(trace);
    const auto peak = static_cast<std::size_t>(std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
    const double top = smooth[peak];
    const double threshold =
        std::max(top - 3.0 * std::sqrt(std::max(top, 1.0) / static_cast<double>(kSmoothWidth)), 0.5 * top);
    std::size_t last = peak;
    for (std::size_t i = peak; i < smooth.size(); ++i)
    {
        if (smooth[i] >= threshold)
        {
            last = i;
        }
    }
    return trace.time_ns(last);
}

FitResult fit_exp_decay(const LifetimeTrace &trace, std::optional<DecayWindow> window)
{
    trace.validate();
    if (trace.size() < kMinWindowBins || trace.total() == 0)
    {
        throw FitError("lifetime trace too short or empty");
    }
    const std::vector<double> smooth = moving_average(trace);
    const double peak_value = *std::max_element(smooth.begin(), smooth.end());
    const double t_peak = decay_peak_time_ns(trace);
    const double t_end = trace.time_ns(trace.size() - 1);
    const double c0 = initial_background(trace, smooth, peak_value);

    auto bin_of = [&](double t_ns) {
        const double b = (t_ns * 1e3 - trace.t0_offset_ps) / trace.bin_width_ps - 0.5;
        return static_cast<std::size_t>(std::clamp(std::ceil(b - 1e-9), 0.0, static_cast<double>(trace.size() - 1)));
    };

    // Log-linear pre-fit over the first decade above background.
    const std::size_t start = bin_of(t_peak + kWindowStartNs);
    const double level0 = smooth[start] - c0;
    double tau_hat = 0.25 * (t_end - t_peak);
    {
        double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
        std::size_t used = 0;
        for (std::size_t i = start; i < trace.size(); ++i)
        {
            const double excess = smooth[i] - c0;
            if (!(excess > 0.1 * level0) || level0 <= 0.0)
            {
                break;
            }
            const double t = trace.time_ns(i) - t_peak;
            const double w = excess; // var(ln y) ~ 1/y
            sw += w;
            st += w * t;
            sy += w * std::log(excess);
            stt += w * t * t;
            sty += w * t * std::log(excess);
            ++used;
        }
        const double det = sw * stt - st * st;
        if (used >= 3 && det > 0.0)
        {
            const double slope = (sw * sty - st * sy) / det;
            if (slope < 0.0)
            {
                tau_hat = -1.0 / slope;
            }
        }
    }

    const DecayWindow win = window.value_or(
        DecayWindow{t_peak + kWindowStartNs,
                    t_peak + std::min(std::max(4.0 * tau_hat, kWindowStartNs + kMinSpanBins * trace.bin_width_ps * 1e-3),
                                      t_end - t_peak)});
    if (!(win.t_hi_ns > win.t_lo_ns))
    {
        throw FitError("empty lifetime fit window");
    }

    std::vector<double> ts, ys, sig;
    for (std::size_t i = 0; i < trace.size(); ++i)
    {
        const double t = trace.time_ns(i);
        if (t >= win.t_lo_ns && t <= win.t_hi_ns)
        {
            const double n = static_cast<double>(trace.counts[i]);
            ts.push_back(t - t_peak);
            ys.push_back(n);
            sig.push_back(std::sqrt(std::max(n, 1.0)));
        }
    }
    if (ts.size() < kMinWindowBins)
    {
        throw FitError("lifetime fit window holds " + std::to_string(ts.size()) + " bins; at least 10 needed");
    }

    const double a0 = std::max((ys.front() - c0) * std::exp(ts.front() / tau_hat), 1.0);
    Model model{"exp_decay", {"amplitude", "tau_ns", "background"}, decay_model};
    Bounds bounds{{-INFINITY, 1e-6, -INFINITY}, {INFINITY, INFINITY, INFINITY}};
    NllsOptions options;
    options.param_scale = {a0, tau_hat, std::max(std::abs(c0), 1.0)};
    FitResult r = nlls_fit(model, FitData{ts, ys, sig}, {a0, tau_hat, c0}, bounds, options);

    // Observed-count weights pull the fit towards low bins; repeat with the
    // variance taken from the fitted model instead.
    for (std::size_t i = 0; i < ts.size(); ++i)
    {
        sig[i] = std::sqrt(std::max(decay_model(ts[i], r.params), 1.0));
    }
    r = nlls_fit(model, FitData{ts, ys, sig}, r.params, bounds, options);
    r.fit_window = {win.t_lo_ns, win.t_hi_ns};

    const double tau = r.params[1];
    const double sigma_tau = r.sigma[1];
    r.set_derived("tau_ns", tau, sigma_tau);
    r.set_derived("rate_per_ns", 1.0 / tau, sigma_tau / (tau * tau));
    r.set_derived("t_peak_ns", t_peak, 0.0);
    r.set_derived("background_ratio", r.params[2] / r.params[0], 0.0);
    return r;
}

} // namespace purcell::fit
