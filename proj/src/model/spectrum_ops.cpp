#include "purcell/traces.hpp"

#include "purcell/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace purcell
{
void SpectrumTrace::validate() const
{
    if (wavelength_nm.size() != counts.size())
    {
        throw DomainError("spectrum wavelength and count arrays differ in length");
    }
    if (background_counts && background_counts->size() != counts.size())
    {
        throw DomainError("spectrum background array differs in length");
    }
    for (std::size_t i = 1; i < wavelength_nm.size(); ++i)
    {
        if (!(wavelength_nm[i] > wavelength_nm[i - 1]))
        {
            throw DomainError("spectrum wavelengths must be strictly increasing (index " +
                              std::to_string(i) + ")");
        }
    }
}

void TuningSeries::validate() const
{
    if (rate.size() != cavity_wavelength_nm.size() || rate_sigma.size() != cavity_wavelength_nm.size())
    {
        throw DomainError("tuning series arrays differ in length");
    }
    for (std::size_t i = 0; i < rate.size(); ++i)
    {
        if (!(rate[i] > 0.0))
        {
            throw DomainError("tuning series rates must be positive (index " + std::to_string(i) + ")");
        }
        if (!(rate_sigma[i] > 0.0))
        {
            throw DomainError("tuning series sigmas must be positive (index " + std::to_string(i) + ")");
        }
    }
}

std::uint64_t LifetimeTrace::total() const
{
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

void LifetimeTrace::validate() const
{
    if (!(bin_width_ps > 0.0))
    {
        throw DomainError("bin width must be positive");
    }
}

namespace
{
struct WindowPeak
{
    double amplitude = 0.0;
    double noise = 0.0;
};

// Peak height above the straight line joining the mean of the first and last
// few samples of the window, plus an edge-scatter noise estimate.
WindowPeak window_peak(const SpectrumTrace &s, double lo, double hi)
{
    const auto first = std::lower_bound(s.wavelength_nm.begin(), s.wavelength_nm.end(), lo);
    const auto last = std::upper_bound(s.wavelength_nm.begin(), s.wavelength_nm.end(), hi);
    const auto i0 = static_cast<std::size_t>(first - s.wavelength_nm.begin());
    const auto i1 = static_cast<std::size_t>(last - s.wavelength_nm.begin());
    const std::size_t n = i1 - i0;
    if (n < 7)
    {
        throw DomainError("spectrum does not cover the requested window");
    }
    const std::size_t edge = std::max<std::size_t>(1, n / 10);

    auto mean_of = [&](std::size_t a, std::size_t b, const std::vector<double> &v) {
        return std::accumulate(v.begin() + a, v.begin() + b, 0.0) / static_cast<double>(b - a);
    };
    const double x_left = mean_of(i0, i0 + edge, s.wavelength_nm);
    const double y_left = mean_of(i0, i0 + edge, s.counts);
    const double x_right = mean_of(i1 - edge, i1, s.wavelength_nm);
    const double y_right = mean_of(i1 - edge, i1, s.counts);
    const double slope = (y_right - y_left) / (x_right - x_left);

    WindowPeak out;
    double sum_sq = 0.0;
    std::size_t n_edge = 0;
    for (std::size_t i = i0; i < i1; ++i)
    {
        const double residual = s.counts[i] - (y_left + slope * (s.wavelength_nm[i] - x_left));
        out.amplitude = std::max(out.amplitude, residual);
        if (i < i0 + edge || i >= i1 - edge)
        {
            sum_sq += residual * residual;
            ++n_edge;
        }
    }
    out.noise = std::sqrt(sum_sq / static_cast<double>(n_edge));
    return out;
}
} // namespace

double pl_enhancement(const SpectrumTrace &on_resonance, const SpectrumTrace &off_resonance,
                      double line_nm, double window_nm)
{
    if (!(window_nm > 0.0))
    {
        throw DomainError("window must be positive");
    }
    on_resonance.validate();
    off_resonance.validate();
    const double lo = line_nm - 0.5 * window_nm;
    const double hi = line_nm + 0.5 * window_nm;
    const WindowPeak on = window_peak(on_resonance, lo, hi);
    const WindowPeak off = window_peak(off_resonance, lo, hi);
    if (!(off.amplitude > 3.0 * off.noise) || !(off.amplitude > 0.0))
    {
        throw DomainError("off-resonance peak is within the noise floor; enhancement ratio unreliable");
    }
    return on.amplitude / off.amplitude;
}

} // namespace purcell
