#include "purcell/report/survey.hpp"

#include "purcell/errors.hpp"
#include "purcell/io/csv.hpp"

#include <cmath>

namespace purcell::report
{
SampleStats sample_stats(const std::vector<double> &values)
{
    SampleStats s;
    s.n = values.size();
    if (values.empty())
    {
        return s;
    }
    double mean = 0.0;
    for (const double v : values)
    {
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    s.mean = mean;
    if (values.size() >= 2)
    {
        double ss = 0.0;
        for (const double v : values)
        {
            ss += (v - mean) * (v - mean);
        }
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::vector<DeviceSurveyRow> read_survey_csv(const std::filesystem::path &path)
{
    const io::CsvTable t = io::read_csv(path);
    const std::vector<std::string> expected{"device_id", "lattice_constant_nm", "resonance_wavelength_nm",
                                            "quality_factor"};
    if (t.header != expected)
    {
        throw ParseError(t.source + ": expected header device_id,lattice_constant_nm,resonance_wavelength_nm,quality_factor");
    }
    std::vector<DeviceSurveyRow> rows;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
    {
        const auto &f = t.rows[r];
        if (f.size() != 4)
        {
            throw ParseError(t.location(r) + ": expected 4 columns, found " + std::to_string(f.size()));
        }
        DeviceSurveyRow row;
        row.device_id = f[0];
        row.lattice_constant_nm = t.number(r, 1);
        if (!f[2].empty())
        {
            row.resonance_wavelength_nm = t.number(r, 2);
        }
        if (!f[3].empty())
        {
            row.quality_factor = t.number(r, 3);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

SurveyStats survey_statistics(const std::vector<DeviceSurveyRow> &rows)
{
    if (rows.empty())
    {
        throw DomainError("survey table holds no rows");
    }
    std::vector<double> wl;
    std::vector<double> q;
    std::map<double, std::pair<std::vector<double>, std::vector<double>>> groups;
    std::map<double, std::size_t> group_sizes;
    for (const auto &row : rows)
    {
        auto &g = groups[row.lattice_constant_nm];
        ++group_sizes[row.lattice_constant_nm];
        if (row.resonance_wavelength_nm)
        {
            wl.push_back(*row.resonance_wavelength_nm);
            g.first.push_back(*row.resonance_wavelength_nm);
        }
        if (row.quality_factor)
        {
            q.push_back(*row.quality_factor);
            g.second.push_back(*row.quality_factor);
        }
    }
    SurveyStats stats;
    stats.overall = {sample_stats(wl), sample_stats(q), rows.size()};
    for (const auto &[a, values] : groups)
    {
        stats.by_lattice_constant[a] = {sample_stats(values.first), sample_stats(values.second), group_sizes[a]};
    }
    return stats;
}

Histogram histogram(const std::vector<double> &values, double bin_width)
{
    if (!(bin_width > 0.0))
    {
        throw DomainError("histogram bin width must be positive");
    }
    Histogram h;
    h.bin_width = bin_width;
    if (values.empty())
    {
        return h;
    }
    double lo = values.front();
    double hi = values.front();
    for (const double v : values)
    {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double first = std::floor(lo / bin_width) * bin_width;
    const auto n = static_cast<std::size_t>(std::floor((hi - first) / bin_width)) + 1;
    h.counts.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i)
    {
        h.left_edges.push_back(first + bin_width * static_cast<double>(i));
    }
    for (const double v : values)
    {
        const auto i = std::min(n - 1, static_cast<std::size_t>(std::floor((v - first) / bin_width)));
        ++h.counts[i];
    }
    return h;
}

} // namespace purcell::report
