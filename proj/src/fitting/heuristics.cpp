#include "purcell/fitting/fits.hpp"

#include "purcell/errors.hpp"

#include <algorithm>
#include <cmath>

namespace purcell::fit
{
double fano_value(double x, double amplitude, double q, double center, double fwhm, double offset)
{
    const double d = x - center;
    const double half = 0.5 * fwhm;
    const double num = q * half + d;
    return amplitude * num * num / (half * half + d * d) + offset;
}

double lorentzian_unit(double x, double center, double fwhm)
{
    const double half = 0.5 * fwhm;
    const double d = x - center;
    return half * half / (d * d + half * half);
}

SpectrumTrace crop(const SpectrumTrace &spectrum, double lo_nm, double hi_nm)
{
    SpectrumTrace out;
    for (std::size_t i = 0; i < spectrum.size(); ++i)
    {
        const double w = spectrum.wavelength_nm[i];
        if (w >= lo_nm && w <= hi_nm)
        {
            out.wavelength_nm.push_back(w);
            out.counts.push_back(spectrum.counts[i]);
            if (spectrum.background_counts)
            {
                if (!out.background_counts)
                {
                    out.background_counts.emplace();
                }
                out.background_counts->push_back((*spectrum.background_counts)[i]);
            }
        }
    }
    return out;
}

SpectrumTrace background_correct(const SpectrumTrace &signal, const SpectrumTrace &background, BackgroundMode mode)
{
    signal.validate();
    background.validate();
    if (signal.size() == 0 || background.size() == 0)
    {
        throw DomainError("background correction needs non-empty spectra");
    }
    const double bg_lo = background.wavelength_nm.front();
    const double bg_hi = background.wavelength_nm.back();
    if (signal.wavelength_nm.back() < bg_lo || signal.wavelength_nm.front() > bg_hi)
    {
        throw DomainError("signal and background wavelength ranges are disjoint");
    }

    constexpr double kFloor = 1e-9;
    SpectrumTrace out;
    out.background_counts.emplace();
    for (std::size_t i = 0; i < signal.size(); ++i)
    {
        const double w = signal.wavelength_nm[i];
        if (w < bg_lo || w > bg_hi)
        {
            continue;
        }
        const auto it = std::lower_bound(background.wavelength_nm.begin(), background.wavelength_nm.end(), w);
        const auto k = static_cast<std::size_t>(it - background.wavelength_nm.begin());
        double bg = 0.0;
        if (background.wavelength_nm[k] == w || k == 0)
        {
            bg = background.counts[k];
        }
        else
        {
            const double w0 = background.wavelength_nm[k - 1];
            const double w1 = background.wavelength_nm[k];
            const double t = (w - w0) / (w1 - w0);
            bg = (1.0 - t) * background.counts[k - 1] + t * background.counts[k];
        }
        out.wavelength_nm.push_back(w);
        out.background_counts->push_back(bg);
        out.counts.push_back(mode == BackgroundMode::divide ? signal.counts[i] / std::max(bg, kFloor)
                                                            : signal.counts[i] - bg);
    }
    return out;
}

std::vector<double> median_filter5(std::span<const double> y)
{
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
    {
        const std::size_t lo = i >= 2 ? i - 2 : 0;
        const std::size_t hi = std::min(y.size(), i + 3);
        std::vector<double> w(y.begin() + static_cast<std::ptrdiff_t>(lo), y.begin() + static_cast<std::ptrdiff_t>(hi));
        const auto mid = w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2);
        std::nth_element(w.begin(), mid, w.end());
        if (w.size() % 2 == 1)
        {
            out[i] = *mid;
        }
        else
        {
            const double upper = *mid;
            const double lower = *std::max_element(w.begin(), mid);
            out[i] = 0.5 * (upper + lower);
        }
    }
    return out;
}

std::vector<std::size_t> find_peaks(std::span<const double> y)
{
    const std::vector<double> smooth = median_filter5(y);
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < smooth.size(); ++i)
    {
        const double left = i > 0 ? smooth[i - 1] : -INFINITY;
        const double right = i + 1 < smooth.size() ? smooth[i + 1] : -INFINITY;
        // Plateaus report their first sample.
        if (smooth[i] > left && smooth[i] >= right)
        {
            peaks.push_back(i);
        }
    }
    std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return smooth[a] > smooth[b]; });
    return peaks;
}

std::optional<double> half_max_width(std::span<const double> x, std::span<const double> y, std::size_t peak_index,
                                     double baseline)
{
    const double half = baseline + 0.5 * (y[peak_index] - baseline);
    std::optional<double> left;
    std::optional<double> right;
    for (std::size_t i = peak_index; i > 0; --i)
    {
        if (y[i - 1] <= half)
        {
            const double t = (half - y[i - 1]) / (y[i] - y[i - 1]);
            left = x[i - 1] + t * (x[i] - x[i - 1]);
            break;
        }
    }
    for (std::size_t i = peak_index; i + 1 < y.size(); ++i)
    {
        if (y[i + 1] <= half)
        {
            const double t = (y[i] - half) / (y[i] - y[i + 1]);
            right = x[i] + t * (x[i + 1] - x[i]);
            break;
        }
    }
    if (left && right)
    {
        return *right - *left;
    }
    if (left)
    {
        return 2.0 * (x[peak_index] - *left);
    }
    if (right)
    {
        return 2.0 * (*right - x[peak_index]);
    }
    return std::nullopt;
}

} // namespace purcell::fit
