#include "purcell/fitting/fits.hpp"

#include "purcell/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace purcell::fit
{
namespace
{
// Internally the Fano profile is written as C + P (G/2 + s d)^2 / ((G/2)^2 + d^2)
// with s = 1/q and P = A q^2. The Lorentzian limit q -> inf is then s = 0,
// which keeps the parameterization regular across every lineshape.
double fano_internal(double d, std::span<const double> p)
{
    const double peak = p[0];
    const double s = p[1];
    const double dd = d - p[2];
    const double half = 0.5 * p[3];
    const double num = half + s * dd;
    return peak * num * num / (half * half + dd * dd) + p[4];
}

double median(std::vector<double> v)
{
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}
} // namespace

FitResult fit_fano(const SpectrumTrace &spectrum, std::pair<double, double> window_nm)
{
    spectrum.validate();
    const SpectrumTrace win = crop(spectrum, window_nm.first, window_nm.second);
    const std::size_t n = win.size();
    if (n < 8)
    {
        throw FitError("Fano window holds fewer than 8 samples");
    }
    const double x_ref = 0.5 * (win.wavelength_nm.front() + win.wavelength_nm.back());
    const double span = win.wavelength_nm.back() - win.wavelength_nm.front();
    const double spacing = span / static_cast<double>(n - 1);
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        xs[i] = win.wavelength_nm[i] - x_ref;
    }

    const std::size_t edge = std::max<std::size_t>(2, n / 10);
    std::vector<double> edges(win.counts.begin(), win.counts.begin() + static_cast<std::ptrdiff_t>(edge));
    edges.insert(edges.end(), win.counts.end() - static_cast<std::ptrdiff_t>(edge), win.counts.end());
    const double c0 = median(edges);

    const std::vector<double> smooth = median_filter5(win.counts);
    std::size_t k_ext = 0;
    for (std::size_t i = 1; i < n; ++i)
    {
        if (std::abs(smooth[i] - c0) > std::abs(smooth[k_ext] - c0))
        {
            k_ext = i;
        }
    }
    const double p0 = smooth[k_ext] - c0;
    if (p0 == 0.0)
    {
        throw FitError("no resonance feature inside the Fano window");
    }
    std::vector<double> oriented(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        oriented[i] = p0 > 0.0 ? smooth[i] : 2.0 * c0 - smooth[i];
    }
    const double width0 = half_max_width(xs, oriented, k_ext, c0).value_or(0.25 * span);
    if (width0 < 3.0 * spacing)
    {
        throw FitError("resonance under-resolved: width " + std::to_string(width0) + " nm spans fewer than 3 samples");
    }

    Model model{"fano", {"peak_amplitude", "asymmetry", "center_nm", "fwhm_nm", "offset"}, fano_internal};
    Bounds bounds{{-INFINITY, -10.0, xs.front(), 0.1 * spacing, -INFINITY},
                  {INFINITY, 10.0, xs.back(), 4.0 * span, INFINITY}};
    NllsOptions options;
    options.param_scale = {std::abs(p0), 1.0, width0, width0, std::max(std::abs(c0), std::abs(p0))};
    const FitData data{xs, win.counts, {}};

    FitResult best;
    bool have_best = false;
    for (double s0 : {0.0, 0.5, -0.5})
    {
        try
        {
            FitResult r = nlls_fit(model, data, {p0, s0, xs[k_ext], width0, c0}, bounds, options);
            if (!have_best || r.chi2 < best.chi2)
            {
                best = std::move(r);
                have_best = true;
            }
        }
        catch (const FitError &)
        {
        }
    }
    if (!have_best)
    {
        throw FitError("Fano fit failed from every starting asymmetry");
    }

    // q and -1/q describe the same shape; report the |q| >= 1 representative.
    const double s = best.params[1];
    if (std::abs(s) > 1.0)
    {
        const double peak = best.params[0];
        const double s_alt = -1.0 / s;
        const double peak_alt = -peak * s * s;
        const double offset_alt = best.params[4] + peak * s * s + peak;
        FitResult alt = nlls_fit(model, data, {peak_alt, s_alt, best.params[2], best.params[3], offset_alt}, bounds,
                                 options);
        if (alt.chi2 <= best.chi2 * (1.0 + 1e-9) + 1e-300)
        {
            best = std::move(alt);
        }
    }

    best.params[2] += x_ref;
    best.fit_window = {win.wavelength_nm.front(), win.wavelength_nm.back()};

    const double center = best.params[2];
    const double fwhm = best.params[3];
    if (fwhm < 3.0 * spacing)
    {
        throw FitError("resonance under-resolved: fitted width spans fewer than 3 samples");
    }
    const double var_c = best.covariance(2, 2);
    const double var_g = best.covariance(3, 3);
    const double cov_cg = best.covariance(2, 3);
    const double q_factor = center / fwhm;
    const double var_q = q_factor * q_factor *
                         (var_c / (center * center) + var_g / (fwhm * fwhm) - 2.0 * cov_cg / (center * fwhm));
    best.set_derived("Q", q_factor, std::sqrt(std::max(var_q, 0.0)));

    const double asym = best.params[1];
    const double sigma_s = best.sigma[1];
    if (asym != 0.0)
    {
        best.set_derived("q", 1.0 / asym, sigma_s / (asym * asym));
    }
    else
    {
        best.set_derived("q", INFINITY, INFINITY);
    }
    best.set_derived("amplitude", best.params[0] * asym * asym, 0.0);
    return best;
}

} // namespace purcell::fit
