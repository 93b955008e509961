#include "purcell/fitting/fits.hpp"

#include "purcell/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace purcell::fit
{
namespace
{
double multi_lorentzian(double x, std::span<const double> p)
{
    double y = p[0];
    for (std::size_t i = 1; i + 2 < p.size(); i += 3)
    {
        y += p[i] * lorentzian_unit(x, p[i + 1], p[i + 2]);
    }
    return y;
}

double median_of(std::span<const double> v)
{
    std::vector<double> w(v.begin(), v.end());
    const auto mid = w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2);
    std::nth_element(w.begin(), mid, w.end());
    return *mid;
}

std::size_t nearest_index(std::span<const double> x, double value)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
    {
        if (std::abs(x[i] - value) < std::abs(x[best] - value))
        {
            best = i;
        }
    }
    return best;
}
} // namespace

FitResult fit_lorentzians(std::span<const double> x, std::span<const double> y, std::span<const double> sigma,
                          std::size_t n_peaks, std::span<const double> init_centers)
{
    if (n_peaks == 0 || init_centers.size() != n_peaks)
    {
        throw FitError("need one initial center per Lorentzian peak");
    }
    const std::size_t n = x.size();
    if (n < 1 + 3 * n_peaks)
    {
        throw FitError("fewer samples than Lorentzian parameters");
    }
    for (std::size_t i = 1; i < n; ++i)
    {
        if (!(x[i] > x[i - 1]))
        {
            throw FitError("Lorentzian abscissa must be strictly increasing");
        }
    }
    const double x_ref = 0.5 * (x.front() + x.back());
    const double span = x.back() - x.front();
    const double spacing = span / static_cast<double>(n - 1);
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        xs[i] = x[i] - x_ref;
    }

    const std::vector<double> smooth = median_filter5(y);
    const double b0 = median_of(y);
    std::vector<double> init{b0};
    std::vector<double> scale{std::max(std::abs(b0), 1e-300)};
    Bounds bounds{{-INFINITY}, {INFINITY}};
    std::vector<std::string> names{"background"};
    std::vector<std::string> warnings;
    for (std::size_t k = 0; k < n_peaks; ++k)
    {
        const std::size_t idx = nearest_index(x, init_centers[k]);
        const double a0 = smooth[idx] - b0;
        std::vector<double> oriented(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            oriented[i] = a0 >= 0.0 ? smooth[i] : 2.0 * b0 - smooth[i];
        }
        double g0 = half_max_width(xs, oriented, idx, b0).value_or(0.1 * span);
        if (!(g0 > 0.0))
        {
            g0 = 0.1 * span;
        }
        if (g0 < 3.0 * spacing)
        {
            warnings.push_back("peak " + std::to_string(k + 1) + " initial width spans fewer than 3 samples");
            g0 = std::max(g0, spacing);
        }
        g0 = std::min(g0, span);
        init.insert(init.end(), {a0, init_centers[k] - x_ref, g0});
        scale.insert(scale.end(), {std::max({std::abs(a0), 1e-3 * std::abs(b0), 1e-300}), g0, g0});
        bounds.lower.insert(bounds.lower.end(), {-INFINITY, xs.front(), 0.25 * spacing});
        bounds.upper.insert(bounds.upper.end(), {INFINITY, xs.back(), 2.0 * span});
        const std::string tag = std::to_string(k + 1);
        names.insert(names.end(), {"amplitude_" + tag, "center_" + tag + "_nm", "fwhm_" + tag + "_nm"});
    }
    for (std::size_t k = 0; k < n_peaks; ++k)
    {
        init[2 + 3 * k] = std::clamp(init[2 + 3 * k], xs.front(), xs.back());
    }

    Model model{"lorentzian_x" + std::to_string(n_peaks), names, multi_lorentzian};
    NllsOptions options;
    options.param_scale = scale;
    FitResult r = nlls_fit(model, FitData{xs, y, sigma}, init, bounds, options);

    for (std::size_t k = 0; k < n_peaks; ++k)
    {
        r.params[2 + 3 * k] += x_ref;
    }
    r.fit_window = {x.front(), x.back()};
    r.warnings.insert(r.warnings.end(), warnings.begin(), warnings.end());

    const double b = r.params[0];
    for (std::size_t k = 0; k < n_peaks; ++k)
    {
        const auto ia = static_cast<Eigen::Index>(1 + 3 * k);
        const double a = r.params[1 + 3 * k];
        const double zeta = (b + a) / b;
        const double d_b = -a / (b * b);
        const double d_a = 1.0 / b;
        const double var = d_b * d_b * r.covariance(0, 0) + d_a * d_a * r.covariance(ia, ia) +
                           2.0 * d_a * d_b * r.covariance(0, ia);
        r.set_derived("zeta_" + std::to_string(k + 1), zeta, std::sqrt(std::max(var, 0.0)));
    }
    for (std::size_t i = 0; i < n_peaks; ++i)
    {
        for (std::size_t j = i + 1; j < n_peaks; ++j)
        {
            const double sep = std::abs(r.params[2 + 3 * i] - r.params[2 + 3 * j]);
            if (sep < std::max(r.params[3 + 3 * i], r.params[3 + 3 * j]))
            {
                r.warnings.push_back("peaks " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                     " overlap within one linewidth; amplitudes ill-conditioned");
            }
        }
    }
    return r;
}

FitResult fit_multi_lorentzian(const TuningSeries &series, std::size_t n_peaks, std::span<const double> init_centers)
{
    series.validate();
    const FitResult first =
        fit_lorentzians(series.cavity_wavelength_nm, series.rate, series.rate_sigma, n_peaks, init_centers);

    // Rate errors scale with the measured rate itself, so a low fluctuation
    // also earns a small sigma. Refit with each point's relative error applied
    // to the fitted curve instead of the measurement.
    std::vector<double> sigma(series.size());
    std::vector<double> centers(n_peaks);
    for (std::size_t k = 0; k < n_peaks; ++k)
    {
        centers[k] = first.params[2 + 3 * k];
    }
    for (std::size_t i = 0; i < series.size(); ++i)
    {
        double model = first.params[0];
        for (std::size_t k = 0; k < n_peaks; ++k)
        {
            model += first.params[1 + 3 * k] *
                     lorentzian_unit(series.cavity_wavelength_nm[i], first.params[2 + 3 * k], first.params[3 + 3 * k]);
        }
        const double relative = series.rate_sigma[i] / std::abs(series.rate[i]);
        sigma[i] = std::isfinite(relative) && model > 0.0 ? relative * model : series.rate_sigma[i];
    }
    return fit_lorentzians(series.cavity_wavelength_nm, series.rate, sigma, n_peaks, centers);
}

FitResult fit_linewidth(const SpectrumTrace &spectrum)
{
    spectrum.validate();
    const std::size_t n = spectrum.size();
    if (n < 8)
    {
        throw FitError("linewidth fit needs at least 8 samples");
    }
    const std::vector<double> smooth = median_filter5(spectrum.counts);
    const auto peak = static_cast<std::size_t>(std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
    const double spacing = (spectrum.wavelength_nm.back() - spectrum.wavelength_nm.front()) / static_cast<double>(n - 1);
    const double base = *std::min_element(smooth.begin(), smooth.end());
    const auto width = half_max_width(spectrum.wavelength_nm, smooth, peak, base);
    if (!(smooth[peak] > base) || !width || *width < 3.0 * spacing)
    {
        throw FitError("line under-resolved: width spans fewer than 3 wavelength samples");
    }
    const double center0 = spectrum.wavelength_nm[peak];
    FitResult r = fit_lorentzians(spectrum.wavelength_nm, spectrum.counts, {}, 1, std::span<const double>(&center0, 1));
    const double fwhm_nm = r.params[3];
    const double sigma_fwhm = r.sigma[3];
    const double lambda = r.params[2];
    if (fwhm_nm < 3.0 * spacing)
    {
        throw FitError("line under-resolved: fitted width spans fewer than 3 wavelength samples");
    }
    // d nu = c d lambda / lambda^2, nm in and Hz out
    const double to_hz = kSpeedOfLight * 1e9 / (lambda * lambda);
    r.set_derived("fwhm_pm", fwhm_nm * 1e3, sigma_fwhm * 1e3);
    r.set_derived("fwhm_mhz", fwhm_nm * to_hz * 1e-6, sigma_fwhm * to_hz * 1e-6);
    r.set_derived("fwhm_ghz", fwhm_nm * to_hz * 1e-9, sigma_fwhm * to_hz * 1e-9);
    return r;
}

} // namespace purcell::fit
