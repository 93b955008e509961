#ifndef PURCELL_IO_TIMETAGS_HPP
#define PURCELL_IO_TIMETAGS_HPP

#include "purcell/traces.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace purcell::io
{
struct TimeTagRecord
{
    std::uint8_t channel = 0;
    std::uint64_t timestamp_ps = 0;

    friend bool operator==(const TimeTagRecord &, const TimeTagRecord &) = default;
};

struct PulseParams
{
    double period_ns = 303.03; // 3.3 MHz repetition
    double pulse_width_ns = 16.0;

    void validate() const;
    std::uint64_t period_ps() const;
};

// Binary time-tag stream: this 16-byte magic, then packed 9-byte records of
// (u8 channel, u64 timestamp in ps), little-endian, no padding.
inline constexpr std::string_view kTimeTagMagic{"PURCELL-TTAG-V01", 16};
inline constexpr std::size_t kTimeTagRecordBytes = 9;

void write_timetags_binary(std::ostream &out, std::span<const TimeTagRecord> tags);
void write_timetags_csv(std::ostream &out, std::span<const TimeTagRecord> tags);

/// Streams records one at a time; detects binary (magic) vs CSV
/// (header "channel,timestamp_ps"). Throws ParseError on malformed input or
/// when a channel's timestamps decrease.
void for_each_timetag(std::istream &in, const std::function<void(const TimeTagRecord &)> &visit);
std::vector<TimeTagRecord> read_timetags(std::istream &in);
std::vector<TimeTagRecord> read_timetags(const std::filesystem::path &path);

struct BinningOptions
{
    std::optional<std::uint8_t> photon_channel; // unset: every non-sync channel
    std::optional<std::uint8_t> sync_channel;   // unset: fold absolute time modulo the period
};

// Single-pass histogrammer: tags are folded on the excitation period and
// counted as they arrive.
class TimeTagHistogrammer
{
public:
    TimeTagHistogrammer(const PulseParams &pulse, double bin_width_ps, BinningOptions options = {});

    void add(const TimeTagRecord &tag);
    LifetimeTrace trace() const;

    std::uint64_t accepted() const { return accepted_; }
    // Photon tags seen before the first sync edge (sync mode only).
    std::uint64_t skipped() const { return skipped_; }

private:
    std::uint64_t period_ps_;
    double bin_width_ps_;
    BinningOptions options_;
    std::vector<std::uint64_t> counts_;
    std::optional<std::uint64_t> last_sync_;
    std::uint64_t accepted_ = 0;
    std::uint64_t skipped_ = 0;
};

/// Folds tags modulo the sync period and histograms them. The last bin is
/// partial when the bin width does not divide the period. Total counts are
/// conserved. Empty input yields an all-zero trace.
LifetimeTrace bin_timetags(std::span<const TimeTagRecord> tags, const PulseParams &pulse, double bin_width_ps,
                           BinningOptions options = {});

/// Streaming variant reading straight from a file.
LifetimeTrace bin_timetag_file(const std::filesystem::path &path, const PulseParams &pulse, double bin_width_ps,
                               BinningOptions options = {});

/// Sums `factor` adjacent bins. A trailing partial group is dropped and
/// recorded in dropped_partial_bin / dropped_counts.
LifetimeTrace downsample(const LifetimeTrace &trace, std::size_t factor);

} // namespace purcell::io

#endif // PURCELL_IO_TIMETAGS_HPP
