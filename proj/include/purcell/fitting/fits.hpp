#ifndef PURCELL_FITTING_FITS_HPP
#define PURCELL_FITTING_FITS_HPP

#include "purcell/fitting/nlls.hpp"
#include "purcell/traces.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace purcell::fit
{
inline constexpr double kSpeedOfLight = 299792458.0; // m/s

// ---------------------------------------------------------------------------
// Lineshapes

/// Standard Fano profile A (q G/2 + d)^2 / ((G/2)^2 + d^2) + C, d = x - x0, G = FWHM.
double fano_value(double x, double amplitude, double q, double center, double fwhm, double offset);

/// Peak-normalized Lorentzian (FWHM parameterization): 1 at x = center.
double lorentzian_unit(double x, double center, double fwhm);

// ---------------------------------------------------------------------------
// Spectrum preprocessing

enum class BackgroundMode
{
    divide,   // reflectivity normalization (default)
    subtract,
};

/// Normalizes a signal spectrum by a broadband background. The background is
/// linearly interpolated onto the signal grid; the result is restricted to
/// the overlap of the two ranges. Division floors the background at 1e-9.
/// Throws DomainError for disjoint ranges.
SpectrumTrace background_correct(const SpectrumTrace &signal, const SpectrumTrace &background,
                                 BackgroundMode mode = BackgroundMode::divide);

/// Sub-trace with lo <= wavelength <= hi.
SpectrumTrace crop(const SpectrumTrace &spectrum, double lo_nm, double hi_nm);

// ---------------------------------------------------------------------------
// Initial-guess heuristics

/// 5-point running median (edges use the available neighbours).
std::vector<double> median_filter5(std::span<const double> y);

/// Indices of local maxima of the median-filtered data, strongest first.
std::vector<std::size_t> find_peaks(std::span<const double> y);

/// Full width at half maximum around peak_index measured above baseline,
/// by linear interpolation of the half-max crossings. Returns nullopt when
/// neither crossing exists.
std::optional<double> half_max_width(std::span<const double> x, std::span<const double> y, std::size_t peak_index,
                                     double baseline);

// ---------------------------------------------------------------------------
// Model-family fits

/// Fano fit on the window. Parameters: peak_amplitude P, asymmetry s, center_nm,
/// fwhm_nm, offset C for C + P (G/2 + s d)^2 / ((G/2)^2 + d^2), i.e. s = 1/q and
/// P = A q^2, reported with |s| <= 1. Derived: Q = center / fwhm, q, amplitude. Throws FitError when the width is narrower than
/// three wavelength samples.
FitResult fit_fano(const SpectrumTrace &spectrum, std::pair<double, double> window_nm);

/// Background plus N Lorentzians (FWHM): B + sum A_i L(x; x_i, g_i).
/// Parameters: background, then amplitude_i, center_i, fwhm_i per peak.
/// Derived: zeta_i = (B + A_i) / B with first-order sigma. The series is fitted
/// twice; the second pass keeps each point's relative rate error but applies
/// it to the first-pass curve.
FitResult fit_multi_lorentzian(const TuningSeries &series, std::size_t n_peaks, std::span<const double> init_centers);

/// Same model on arbitrary x/y (unit weights when sigma is empty).
FitResult fit_lorentzians(std::span<const double> x, std::span<const double> y, std::span<const double> sigma,
                          std::size_t n_peaks, std::span<const double> init_centers);

/// Single Lorentzian linewidth. Derived: fwhm_pm, fwhm_mhz, fwhm_ghz (c dl / l^2).
FitResult fit_linewidth(const SpectrumTrace &spectrum);

struct DecayWindow
{
    double t_lo_ns = 0.0;
    double t_hi_ns = 0.0;
};

/// Background-corrected single exponential A exp(-(t - t_peak)/tau) + C.
/// A first pass weights bins by sqrt(max(n,1)); the reported fit is refitted
/// with sqrt(max(model,1)). Default window [t_peak + 0.5 ns,
/// t_peak + min(4 tau_hat, end)], tau_hat from a log-linear pre-fit over the
/// first decade. Derived: tau_ns, rate_per_ns, t_peak_ns, background_ratio (C/A).
FitResult fit_exp_decay(const LifetimeTrace &trace, std::optional<DecayWindow> window = std::nullopt);

/// Falling-edge time used as the decay origin: the last bin, after the global
/// maximum of the smoothed trace, still within three standard errors of it.
double decay_peak_time_ns(const LifetimeTrace &trace);

/// y = a cos(2 pi (x - x0) / P) + c. Derived: period_deg. Throws
/// DegenerateError for data with no periodic component.
FitResult fit_sinusoid(std::span<const double> angles_deg, std::span<const double> amplitude);

/// Evaluates the fitted curve of any result returned above at x (nm, ns or
/// degrees as fitted). Throws FitError for an unknown model id.
double fitted_curve(const FitResult &result, double x);

} // namespace purcell::fit

#endif // PURCELL_FITTING_FITS_HPP
