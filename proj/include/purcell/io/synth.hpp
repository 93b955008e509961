#ifndef PURCELL_IO_SYNTH_HPP
#define PURCELL_IO_SYNTH_HPP

#include "purcell/io/timetags.hpp"
#include "purcell/model.hpp"
#include "purcell/traces.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace purcell::io
{
// Forward-model harness. Each entry of `geometries` is one emitter in one
// device; the emitters share `physics`.
struct SynthScenario
{
    EmitterPhysics physics;
    std::vector<DeviceGeometry> geometries;
    std::vector<double> f_peak; // on-resonance F per entry, F_C = F cos(theta), F_D = F sin(theta)
    double cavity_fwhm_nm = 0.1;
    std::pair<double, double> transition_wavelengths_nm{619.0, 620.1}; // (C, D)
    std::uint64_t counts_per_trace = 100000;
    double background_fraction = 0.01;
    std::uint64_t rng_seed = 1;

    PulseParams pulse;
    double bin_width_ps = 32.0;
    double pulse_delay_ns = 20.0; // excitation start relative to the sync edge

    // One message per offending field; empty when valid.
    std::vector<std::string> validation_errors() const;
    // Throws DomainError listing every message.
    void validate() const;
};

/// Two-device replica of the published system: parallel (pattern 0) and
/// angled (pattern 55) devices at fabrication offset phi, F chosen so the
/// on-resonance F_C are 9.243 and 26.21. With `second_emitter`, an
/// orthogonal-family emitter in the angled device is appended (F_D = 8.796).
SynthScenario replica_scenario(double eta_br = 0.7815, double phi_deg = 1.1, bool second_emitter = false);

/// Purcell factors with the cavity at cavity_wavelength_nm:
/// f_X = 1 + (F_X - 1) L(cavity - lambda_X), L a unit-peak Lorentzian of the cavity FWHM.
PurcellFactors cavity_purcell_factors(const SynthScenario &scenario, std::size_t device_index,
                                      double cavity_wavelength_nm);

/// Emission rate (1/ns) of one entry with the cavity at the given wavelength.
double cavity_rate(const SynthScenario &scenario, std::size_t device_index, double cavity_wavelength_nm);

/// Photon-level realization: one sync tag (channel 0) per detected photon's
/// pulse and one photon tag (channel 1). Excitation time uniform over the
/// pulse width, exponential delay at the cavity rate, background uniform
/// over the period.
std::vector<TimeTagRecord> synth_timetags(const SynthScenario &scenario, std::size_t device_index,
                                          double cavity_wavelength_nm);

/// synth_timetags folded and binned at the scenario bin width.
LifetimeTrace synth_lifetime(const SynthScenario &scenario, std::size_t device_index, double cavity_wavelength_nm);

/// Per grid point: synth_lifetime, fit_exp_decay, rate = 1/tau. Points are
/// fitted concurrently; every point has its own seed so the output does
/// not depend on scheduling.
TuningSeries synth_tuning_series(const SynthScenario &scenario, std::size_t device_index,
                                 std::span<const double> wavelength_grid);

/// Grid spanning both transitions: points_per_line samples within 4 FWHM of
/// each line plus half as many off-resonance baseline samples on each side.
std::vector<double> default_tuning_grid(const SynthScenario &scenario, std::size_t points_per_line = 33);

struct DecayHistogramParams
{
    double tau_ns = 9.412;
    double expected_counts = 1e5;
    double background_fraction = 0.01;
    PulseParams pulse;
    double bin_width_ps = 32.0;
    double pulse_delay_ns = 20.0;
};

/// Histogram-level realization of the same decay model: each bin is an
/// independent Poisson draw around its exact expected count. Cost does not
/// grow with the number of counts.
LifetimeTrace synth_decay_histogram(const DecayHistogramParams &params, std::uint64_t seed);

enum class SpectrumKind
{
    fano,
    lorentzian_peaks,
};

enum class NoiseKind
{
    none,
    gaussian,
    poisson,
};

struct NoiseModel
{
    NoiseKind kind = NoiseKind::none;
    double sigma = 0.0; // gaussian only, in signal units
};

struct LorentzPeak
{
    double amplitude = 1.0;
    double center_nm = 0.0;
    double fwhm_nm = 0.1;
};

// Broad lamp envelope 1 + depth * exp(-(x - center)^2 / (2 width^2)). The
// signal is multiplied by it and the background trace carries it alone.
struct LampShape
{
    double center_nm = 619.0;
    double width_nm = 5.0;
    double depth = 0.5;
};

struct SpectrumParams
{
    double lo_nm = 618.0;
    double hi_nm = 620.0;
    std::size_t n_points = 801;

    // fano
    double amplitude = 1.0;
    double q = 2.0;
    double center_nm = 619.0;
    double fwhm_nm = 619.0 / 6032.0;
    double offset = 0.0;

    // lorentzian_peaks (offset is the baseline)
    std::vector<LorentzPeak> peaks;

    std::optional<LampShape> lamp;
    double count_scale = 1.0; // multiplies the noiseless signal before noise
};

SpectrumTrace synth_spectrum(SpectrumKind kind, const SpectrumParams &params, const NoiseModel &noise,
                             std::uint64_t seed);

} // namespace purcell::io

#endif // PURCELL_IO_SYNTH_HPP
