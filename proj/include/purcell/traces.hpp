#ifndef PURCELL_TRACES_HPP
#define PURCELL_TRACES_HPP

#include <cstdint>
#include <optional>
#include <vector>

namespace purcell
{
// Counts (or reflectivity) vs wavelength. Wavelengths strictly increasing.
struct SpectrumTrace
{
    std::vector<double> wavelength_nm;
    std::vector<double> counts;
    std::optional<std::vector<double>> background_counts;

    std::size_t size() const { return wavelength_nm.size(); }
    void validate() const;
};

// Emission rate vs cavity resonance wavelength, one point per lifetime trace.
struct TuningSeries
{
    std::vector<double> cavity_wavelength_nm;
    std::vector<double> rate;       // 1/ns
    std::vector<double> rate_sigma; // 1/ns

    std::size_t size() const { return cavity_wavelength_nm.size(); }
    void validate() const;
};

// TCSPC histogram folded on the excitation period.
struct LifetimeTrace
{
    double bin_width_ps = 0.0;
    std::vector<std::uint64_t> counts;
    double t0_offset_ps = 0.0; // time of bin zero relative to the sync edge

    // Set by downsample() when a trailing partial bin was discarded.
    bool dropped_partial_bin = false;
    std::uint64_t dropped_counts = 0;

    std::size_t size() const { return counts.size(); }
    std::uint64_t total() const;
    // Bin centre in ns.
    double time_ns(std::size_t bin) const
    {
        return (t0_offset_ps + (static_cast<double>(bin) + 0.5) * bin_width_ps) * 1e-3;
    }
    void validate() const;
};

/// Ratio of baseline-subtracted peak amplitudes of two spectra around one line.
/// A linear baseline through the window edges is removed from each spectrum
/// first. Throws DomainError when the off-resonance peak is within the noise floor.
double pl_enhancement(const SpectrumTrace &on_resonance, const SpectrumTrace &off_resonance,
                      double line_nm, double window_nm);

} // namespace purcell

#endif // PURCELL_TRACES_HPP
