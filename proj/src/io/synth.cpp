#include "purcell/io/synth.hpp"

#include "purcell/errors.hpp"
#include "purcell/fitting/fits.hpp"
#include "purcell/io/rng.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

namespace purcell::io
{
namespace
{
constexpr std::uint8_t kSyncChannel = 0;
constexpr std::uint8_t kPhotonChannel = 1;

void check_pulse_window(std::vector<std::string> &errors, const PulseParams &pulse, double delay_ns,
                        double bin_width_ps)
{
    if (!(pulse.pulse_width_ns > 0.0 && pulse.pulse_width_ns < pulse.period_ns))
    {
        errors.emplace_back("pulse.pulse_width_ns: must satisfy 0 < width < period");
    }
    if (!(delay_ns >= 0.0 && delay_ns + pulse.pulse_width_ns < pulse.period_ns))
    {
        errors.emplace_back("pulse_delay_ns: pulse must end within one period");
    }
    if (!(bin_width_ps > 0.0 && bin_width_ps <= pulse.period_ns * 1e3))
    {
        errors.emplace_back("bin_width_ps: must be positive and not exceed the period");
    }
}

// Probability that a box-excited exponential arrival, folded on the period,
// lands at a phase in [0, t) (ns). The pulse starts at `start` and lasts `width`.
double folded_cdf(double t, double rate, double start, double width, double period)
{
    auto h = [rate](double s) { return s > 0.0 ? s + std::expm1(-rate * s) / rate : 0.0; };
    auto cdf = [&](double s) { return (h(s) - h(s - width)) / width; };
    double total = 0.0;
    for (int k = 0; k < 1000; ++k)
    {
        const double s0 = k * period - start;
        total += cdf(s0 + t) - cdf(s0);
        const double s1 = s0 + period;
        if (s1 > width && std::exp(-rate * (s1 - width)) < 1e-18)
        {
            break;
        }
    }
    return total;
}
} // namespace

std::vector<std::string> SynthScenario::validation_errors() const
{
    std::vector<std::string> errors;
    if (!(physics.gamma_c > 0.0 && physics.gamma_d > 0.0 && physics.gamma_psb > 0.0))
    {
        errors.emplace_back("physics: all three rates must be positive");
    }
    if (geometries.empty())
    {
        errors.emplace_back("geometries: at least one device is required");
    }
    if (f_peak.size() != geometries.size())
    {
        errors.emplace_back("f_peak: one value per device is required");
    }
    for (std::size_t i = 0; i < f_peak.size(); ++i)
    {
        if (!(f_peak[i] > 0.0) || !std::isfinite(f_peak[i]))
        {
            errors.emplace_back("f_peak[" + std::to_string(i) + "]: must be positive");
        }
    }
    if (!(cavity_fwhm_nm > 0.0))
    {
        errors.emplace_back("cavity_fwhm_nm: must be positive");
    }
    if (!(transition_wavelengths_nm.first > 0.0 && transition_wavelengths_nm.second > 0.0))
    {
        errors.emplace_back("transition_wavelengths_nm: must be positive");
    }
    if (counts_per_trace == 0)
    {
        errors.emplace_back("counts_per_trace: must be positive");
    }
    if (!(background_fraction >= 0.0 && background_fraction < 1.0))
    {
        errors.emplace_back("background_fraction: must lie in [0, 1)");
    }
    if (rng_seed == 0)
    {
        errors.emplace_back("rng_seed: must be positive");
    }
    check_pulse_window(errors, pulse, pulse_delay_ns, bin_width_ps);
    return errors;
}

void SynthScenario::validate() const
{
    const auto errors = validation_errors();
    if (!errors.empty())
    {
        std::string msg = "invalid scenario:";
        for (const auto &e : errors)
        {
            msg += "\n  " + e;
        }
        throw DomainError(msg);
    }
}

SynthScenario replica_scenario(double eta_br, double phi_deg, bool second_emitter)
{
    SynthScenario s;
    s.physics = EmitterPhysics::from_fractions(1.0 / 9.412, kDefaultEtaDw, eta_br);

    DeviceGeometry parallel;
    parallel.pattern_angle_deg = 0.0;
    parallel.fab_offset_deg = phi_deg;
    parallel.quality_factor = 6032.0;
    DeviceGeometry angled = parallel;
    angled.pattern_angle_deg = 55.0;
    angled.quality_factor = 3942.0;

    const auto f_for_c = [](const DeviceGeometry &g, double f_c) {
        return f_c / std::cos(theta_from_geometry(g) * std::numbers::pi / 180.0);
    };
    s.geometries = {parallel, angled};
    s.f_peak = {f_for_c(parallel, 9.243), f_for_c(angled, 26.21)};
    if (second_emitter)
    {
        DeviceGeometry other = angled;
        other.dipole_family = DipoleFamily::orthogonal;
        s.geometries.push_back(other);
        s.f_peak.push_back(8.796 / std::sin(theta_from_geometry(other) * std::numbers::pi / 180.0));
    }
    return s;
}

PurcellFactors cavity_purcell_factors(const SynthScenario &scenario, std::size_t device_index,
                                      double cavity_wavelength_nm)
{
    if (device_index >= scenario.geometries.size() || device_index >= scenario.f_peak.size())
    {
        throw DomainError("device index out of range");
    }
    const double theta = theta_from_geometry(scenario.geometries[device_index]) * std::numbers::pi / 180.0;
    const double f = scenario.f_peak[device_index];
    const auto [lambda_c, lambda_d] = scenario.transition_wavelengths_nm;
    const double lc = fit::lorentzian_unit(cavity_wavelength_nm, lambda_c, scenario.cavity_fwhm_nm);
    const double ld = fit::lorentzian_unit(cavity_wavelength_nm, lambda_d, scenario.cavity_fwhm_nm);
    return {1.0 + (f * std::cos(theta) - 1.0) * lc, 1.0 + (f * std::sin(theta) - 1.0) * ld};
}

double cavity_rate(const SynthScenario &scenario, std::size_t device_index, double cavity_wavelength_nm)
{
    const auto pf = cavity_purcell_factors(scenario, device_index, cavity_wavelength_nm);
    return total_rate(scenario.physics, pf.f_c, pf.f_d);
}

std::vector<TimeTagRecord> synth_timetags(const SynthScenario &scenario, std::size_t device_index,
                                          double cavity_wavelength_nm)
{
    scenario.validate();
    const double rate = cavity_rate(scenario, device_index, cavity_wavelength_nm);
    Rng rng(derive_seed(scenario.rng_seed, device_index, std::bit_cast<std::uint64_t>(cavity_wavelength_nm)));

    const std::uint64_t period_ps = scenario.pulse.period_ps();
    const double period_ns = static_cast<double>(period_ps) * 1e-3;
    const auto n = scenario.counts_per_trace;
    const auto n_background =
        static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * scenario.background_fraction));

    std::vector<TimeTagRecord> tags;
    tags.reserve(2 * n);
    for (std::uint64_t k = 0; k < n; ++k)
    {
        double phase_ns = 0.0;
        if (k < n_background)
        {
            phase_ns = period_ns * rng.uniform();
        }
        else
        {
            const double excite = scenario.pulse_delay_ns + scenario.pulse.pulse_width_ns * rng.uniform();
            phase_ns = std::fmod(excite + rng.exponential(rate), period_ns);
        }
        auto phase_ps = static_cast<std::uint64_t>(phase_ns * 1e3);
        phase_ps = std::min(phase_ps, period_ps - 1);
        const std::uint64_t sync = k * period_ps;
        tags.push_back({kSyncChannel, sync});
        tags.push_back({kPhotonChannel, sync + phase_ps});
    }
    return tags;
}

LifetimeTrace synth_lifetime(const SynthScenario &scenario, std::size_t device_index, double cavity_wavelength_nm)
{
    const auto tags = synth_timetags(scenario, device_index, cavity_wavelength_nm);
    return bin_timetags(tags, scenario.pulse, scenario.bin_width_ps, {kPhotonChannel, kSyncChannel});
}

TuningSeries synth_tuning_series(const SynthScenario &scenario, std::size_t device_index,
                                 std::span<const double> wavelength_grid)
{
    scenario.validate();
    const std::size_t n = wavelength_grid.size();
    TuningSeries series;
    series.cavity_wavelength_nm.assign(wavelength_grid.begin(), wavelength_grid.end());
    series.rate.assign(n, 0.0);
    series.rate_sigma.assign(n, 0.0);
    std::vector<std::exception_ptr> failures(n);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++)
        {
            try
            {
                const auto trace = synth_lifetime(scenario, device_index, wavelength_grid[i]);
                const auto fit = fit::fit_exp_decay(trace);
                const double tau = fit.value("tau_ns");
                series.rate[i] = 1.0 / tau;
                series.rate_sigma[i] = fit.error("tau_ns") / (tau * tau);
            }
            catch (...)
            {
                failures[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < std::min(n_workers, n); ++w)
    {
        pool.emplace_back(worker);
    }
    worker();
    for (auto &t : pool)
    {
        t.join();
    }
    for (const auto &f : failures)
    {
        if (f)
        {
            std::rethrow_exception(f);
        }
    }
    return series;
}

std::vector<double> default_tuning_grid(const SynthScenario &scenario, std::size_t points_per_line)
{
    if (points_per_line < 5)
    {
        throw DomainError("tuning grid needs at least 5 points per line");
    }
    const double w = scenario.cavity_fwhm_nm;
    const auto [lc, ld] = scenario.transition_wavelengths_nm;
    const double lo = std::min(lc, ld);
    const double hi = std::max(lc, ld);
    const double step = 8.0 * w / static_cast<double>(points_per_line - 1);
    std::vector<double> grid;
    for (const double line : {lc, ld})
    {
        for (std::size_t k = 0; k < points_per_line; ++k)
        {
            grid.push_back(line - 4.0 * w + step * static_cast<double>(k));
        }
    }
    const std::size_t n_base = points_per_line / 4;
    const double base_step = 20.0 * w / static_cast<double>(n_base);
    for (std::size_t k = 0; k < n_base; ++k)
    {
        grid.push_back(lo - 30.0 * w + base_step * static_cast<double>(k));
        grid.push_back(hi + 12.0 * w + base_step * static_cast<double>(k));
    }
    if (hi - lo > 10.0 * w)
    {
        for (int k = 1; k < 6; ++k)
        {
            const double x = lo + (hi - lo) * k / 6.0;
            if (std::abs(x - lo) > 4.5 * w && std::abs(x - hi) > 4.5 * w)
            {
                grid.push_back(x);
            }
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(), [&](double a, double b) { return b - a < 1e-3 * w; }),
               grid.end());
    return grid;
}

LifetimeTrace synth_decay_histogram(const DecayHistogramParams &params, std::uint64_t seed)
{
    std::vector<std::string> errors;
    check_pulse_window(errors, params.pulse, params.pulse_delay_ns, params.bin_width_ps);
    if (!(params.tau_ns > 0.0))
    {
        errors.emplace_back("tau_ns: must be positive");
    }
    if (!(params.expected_counts >= 0.0))
    {
        errors.emplace_back("expected_counts: must be non-negative");
    }
    if (!(params.background_fraction >= 0.0 && params.background_fraction < 1.0))
    {
        errors.emplace_back("background_fraction: must lie in [0, 1)");
    }
    if (!errors.empty())
    {
        throw DomainError(errors.front());
    }

    const double period_ns = static_cast<double>(params.pulse.period_ps()) * 1e-3;
    const double bin_ns = params.bin_width_ps * 1e-3;
    const auto n_bins = static_cast<std::size_t>(std::ceil(period_ns / bin_ns - 1e-9));
    const double rate = 1.0 / params.tau_ns;
    const double n_signal = params.expected_counts * (1.0 - params.background_fraction);
    const double n_background = params.expected_counts * params.background_fraction;

    Rng rng(seed);
    LifetimeTrace trace;
    trace.bin_width_ps = params.bin_width_ps;
    trace.counts.resize(n_bins);
    double cdf_lo = folded_cdf(0.0, rate, params.pulse_delay_ns, params.pulse.pulse_width_ns, period_ns);
    for (std::size_t i = 0; i < n_bins; ++i)
    {
        const double t_hi = std::min(period_ns, static_cast<double>(i + 1) * bin_ns);
        const double cdf_hi = folded_cdf(t_hi, rate, params.pulse_delay_ns, params.pulse.pulse_width_ns, period_ns);
        const double width = t_hi - static_cast<double>(i) * bin_ns;
        const double mean = n_signal * std::max(0.0, cdf_hi - cdf_lo) + n_background * width / period_ns;
        trace.counts[i] = rng.poisson(mean);
        cdf_lo = cdf_hi;
    }
    return trace;
}

SpectrumTrace synth_spectrum(SpectrumKind kind, const SpectrumParams &params, const NoiseModel &noise,
                             std::uint64_t seed)
{
    if (params.n_points < 2 || !(params.hi_nm > params.lo_nm))
    {
        throw DomainError("spectrum grid needs n_points >= 2 and hi_nm > lo_nm");
    }
    if (kind == SpectrumKind::fano && !(params.fwhm_nm > 0.0))
    {
        throw DomainError("fano fwhm_nm must be positive");
    }
    Rng rng(seed);
    auto apply_noise = [&](double clean) {
        switch (noise.kind)
        {
        case NoiseKind::gaussian:
            return clean + noise.sigma * rng.normal();
        case NoiseKind::poisson:
            return static_cast<double>(rng.poisson(std::max(clean, 0.0)));
        case NoiseKind::none:
            break;
        }
        return clean;
    };

    SpectrumTrace s;
    s.wavelength_nm.resize(params.n_points);
    s.counts.resize(params.n_points);
    if (params.lamp)
    {
        s.background_counts.emplace(params.n_points);
    }
    const double step = (params.hi_nm - params.lo_nm) / static_cast<double>(params.n_points - 1);
    for (std::size_t i = 0; i < params.n_points; ++i)
    {
        const double x = params.lo_nm + step * static_cast<double>(i);
        double y = 0.0;
        if (kind == SpectrumKind::fano)
        {
            y = fit::fano_value(x, params.amplitude, params.q, params.center_nm, params.fwhm_nm, params.offset);
        }
        else
        {
            y = params.offset;
            for (const auto &p : params.peaks)
            {
                y += p.amplitude * fit::lorentzian_unit(x, p.center_nm, p.fwhm_nm);
            }
        }
        double envelope = 1.0;
        if (params.lamp)
        {
            const double d = (x - params.lamp->center_nm) / params.lamp->width_nm;
            envelope = 1.0 + params.lamp->depth * std::exp(-0.5 * d * d);
        }
        s.wavelength_nm[i] = x;
        s.counts[i] = apply_noise(params.count_scale * y * envelope);
        if (params.lamp)
        {
            (*s.background_counts)[i] = apply_noise(params.count_scale * envelope);
        }
    }
    return s;
}

} // namespace purcell::io
