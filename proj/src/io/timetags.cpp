#include "purcell/io/timetags.hpp"

#include "purcell/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace purcell::io
{
void PulseParams::validate() const
{
    if (!(pulse_width_ns > 0.0 && pulse_width_ns < period_ns))
    {
        throw DomainError("pulse width must satisfy 0 < width < period");
    }
}

std::uint64_t PulseParams::period_ps() const
{
    return static_cast<std::uint64_t>(std::llround(period_ns * 1e3));
}

void write_timetags_binary(std::ostream &out, std::span<const TimeTagRecord> tags)
{
    out.write(kTimeTagMagic.data(), static_cast<std::streamsize>(kTimeTagMagic.size()));
    std::array<char, kTimeTagRecordBytes> buf{};
    for (const auto &tag : tags)
    {
        buf[0] = static_cast<char>(tag.channel);
        for (int b = 0; b < 8; ++b)
        {
            buf[1 + b] = static_cast<char>((tag.timestamp_ps >> (8 * b)) & 0xff);
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

void write_timetags_csv(std::ostream &out, std::span<const TimeTagRecord> tags)
{
    out << "channel,timestamp_ps\n";
    for (const auto &tag : tags)
    {
        out << static_cast<unsigned>(tag.channel) << ',' << tag.timestamp_ps << '\n';
    }
}

namespace
{
class MonotonicCheck
{
public:
    void check(const TimeTagRecord &tag, std::uint64_t record_index)
    {
        auto [it, inserted] = last_.try_emplace(tag.channel, tag.timestamp_ps);
        if (!inserted)
        {
            if (tag.timestamp_ps < it->second)
            {
                throw ParseError("time tags decrease on channel " + std::to_string(tag.channel) + " at record " +
                                 std::to_string(record_index));
            }
            it->second = tag.timestamp_ps;
        }
    }

private:
    std::map<std::uint8_t, std::uint64_t> last_;
};

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char *what)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
    {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    {
        text.remove_suffix(1);
    }
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
    {
        throw ParseError("line " + std::to_string(line) + ": invalid " + what + " '" + std::string(text) + "'");
    }
    return value;
}
} // namespace

void for_each_timetag(std::istream &in, const std::function<void(const TimeTagRecord &)> &visit)
{
    std::array<char, 16> head{};
    in.read(head.data(), static_cast<std::streamsize>(head.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    MonotonicCheck monotonic;
    std::uint64_t index = 0;

    if (got == head.size() && std::string_view(head.data(), head.size()) == kTimeTagMagic)
    {
        std::array<unsigned char, kTimeTagRecordBytes> buf{};
        while (true)
        {
            in.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
            const auto n = static_cast<std::size_t>(in.gcount());
            if (n == 0)
            {
                break;
            }
            if (n != buf.size())
            {
                throw ParseError("truncated time-tag record " + std::to_string(index));
            }
            TimeTagRecord tag;
            tag.channel = buf[0];
            for (int b = 0; b < 8; ++b)
            {
                tag.timestamp_ps |= static_cast<std::uint64_t>(buf[1 + b]) << (8 * b);
            }
            monotonic.check(tag, index++);
            visit(tag);
        }
        return;
    }

    // CSV: re-assemble the sniffed prefix with the rest of the stream.
    std::string pending(head.data(), got);
    std::string rest;
    std::size_t line_no = 0;
    bool header_seen = false;
    auto handle_line = [&](std::string_view line) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
        {
            line.remove_suffix(1);
        }
        if (line.empty() || line.front() == '#')
        {
            return;
        }
        if (!header_seen)
        {
            header_seen = true;
            if (line.find_first_not_of("0123456789, \t") != std::string_view::npos)
            {
                if (line.find("channel") == std::string_view::npos)
                {
                    throw ParseError("line " + std::to_string(line_no) + ": expected header 'channel,timestamp_ps'");
                }
                return;
            }
        }
        const auto comma = line.find(',');
        if (comma == std::string_view::npos)
        {
            throw ParseError("line " + std::to_string(line_no) + ": expected 'channel,timestamp_ps'");
        }
        const auto channel = parse_field<unsigned>(line.substr(0, comma), line_no, "channel");
        if (channel > 255)
        {
            throw ParseError("line " + std::to_string(line_no) + ": channel out of range");
        }
        TimeTagRecord tag{static_cast<std::uint8_t>(channel),
                          parse_field<std::uint64_t>(line.substr(comma + 1), line_no, "timestamp")};
        monotonic.check(tag, index++);
        visit(tag);
    };
    std::string line;
    std::getline(in, rest);
    pending += rest;
    handle_line(pending);
    while (std::getline(in, line))
    {
        handle_line(line);
    }
}

std::vector<TimeTagRecord> read_timetags(std::istream &in)
{
    std::vector<TimeTagRecord> tags;
    for_each_timetag(in, [&](const TimeTagRecord &t) { tags.push_back(t); });
    return tags;
}

std::vector<TimeTagRecord> read_timetags(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw ParseError("cannot open time-tag file " + path.string());
    }
    try
    {
        return read_timetags(in);
    }
    catch (const ParseError &e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
}

TimeTagHistogrammer::TimeTagHistogrammer(const PulseParams &pulse, double bin_width_ps, BinningOptions options)
    : period_ps_(pulse.period_ps()), bin_width_ps_(bin_width_ps), options_(options)
{
    if (!(bin_width_ps > 0.0))
    {
        throw DomainError("bin width must be positive");
    }
    if (period_ps_ == 0 || bin_width_ps > static_cast<double>(period_ps_))
    {
        throw DomainError("bin width exceeds the sync period");
    }
    counts_.assign(static_cast<std::size_t>(std::ceil(static_cast<double>(period_ps_) / bin_width_ps - 1e-9)), 0);
}

void TimeTagHistogrammer::add(const TimeTagRecord &tag)
{
    if (options_.sync_channel && tag.channel == *options_.sync_channel)
    {
        last_sync_ = tag.timestamp_ps;
        return;
    }
    if (options_.photon_channel && tag.channel != *options_.photon_channel)
    {
        return;
    }
    std::uint64_t phase = 0;
    if (options_.sync_channel)
    {
        if (!last_sync_ || tag.timestamp_ps < *last_sync_)
        {
            ++skipped_;
            return;
        }
        phase = (tag.timestamp_ps - *last_sync_) % period_ps_;
    }
    else
    {
        phase = tag.timestamp_ps % period_ps_;
    }
    auto bin = static_cast<std::size_t>(static_cast<double>(phase) / bin_width_ps_);
    bin = std::min(bin, counts_.size() - 1);
    ++counts_[bin];
    ++accepted_;
}

LifetimeTrace TimeTagHistogrammer::trace() const
{
    LifetimeTrace t;
    t.bin_width_ps = bin_width_ps_;
    t.counts = counts_;
    return t;
}

LifetimeTrace bin_timetags(std::span<const TimeTagRecord> tags, const PulseParams &pulse, double bin_width_ps,
                           BinningOptions options)
{
    TimeTagHistogrammer h(pulse, bin_width_ps, options);
    for (const auto &tag : tags)
    {
        h.add(tag);
    }
    return h.trace();
}

LifetimeTrace bin_timetag_file(const std::filesystem::path &path, const PulseParams &pulse, double bin_width_ps,
                               BinningOptions options)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw ParseError("cannot open time-tag file " + path.string());
    }
    TimeTagHistogrammer h(pulse, bin_width_ps, options);
    try
    {
        for_each_timetag(in, [&](const TimeTagRecord &t) { h.add(t); });
    }
    catch (const ParseError &e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
    return h.trace();
}

LifetimeTrace downsample(const LifetimeTrace &trace, std::size_t factor)
{
    if (factor < 1)
    {
        throw DomainError("downsample factor must be at least 1");
    }
    LifetimeTrace out;
    out.bin_width_ps = trace.bin_width_ps * static_cast<double>(factor);
    out.t0_offset_ps = trace.t0_offset_ps;
    out.dropped_partial_bin = trace.dropped_partial_bin;
    out.dropped_counts = trace.dropped_counts;
    const std::size_t full = trace.size() / factor;
    out.counts.assign(full, 0);
    for (std::size_t i = 0; i < full * factor; ++i)
    {
        out.counts[i / factor] += trace.counts[i];
    }
    if (full * factor < trace.size())
    {
        out.dropped_partial_bin = true;
        for (std::size_t i = full * factor; i < trace.size(); ++i)
        {
            out.dropped_counts += trace.counts[i];
        }
    }
    return out;
}

} // namespace purcell::io
