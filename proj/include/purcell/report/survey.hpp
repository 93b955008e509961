#ifndef PURCELL_REPORT_SURVEY_HPP
#define PURCELL_REPORT_SURVEY_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace purcell::report
{
struct DeviceSurveyRow
{
    std::string device_id;
    double lattice_constant_nm = 0.0;
    std::optional<double> resonance_wavelength_nm;
    std::optional<double> quality_factor;
};

// Mean and sample standard deviation; std is absent below two values.
struct SampleStats
{
    std::size_t n = 0;
    std::optional<double> mean;
    std::optional<double> stddev;
};

SampleStats sample_stats(const std::vector<double> &values);

struct SurveyGroup
{
    SampleStats wavelength;
    SampleStats quality;
    std::size_t n_devices = 0;
};

struct SurveyStats
{
    SurveyGroup overall;
    std::map<double, SurveyGroup> by_lattice_constant;
};

struct Histogram
{
    std::vector<double> left_edges;
    std::vector<std::size_t> counts;
    double bin_width = 0.0;
};

/// Columns device_id, lattice_constant_nm, resonance_wavelength_nm,
/// quality_factor; the last two may be empty.
std::vector<DeviceSurveyRow> read_survey_csv(const std::filesystem::path &path);

/// Throws DomainError for an empty table.
SurveyStats survey_statistics(const std::vector<DeviceSurveyRow> &rows);

/// Equal-width bins aligned to multiples of bin_width.
Histogram histogram(const std::vector<double> &values, double bin_width);

} // namespace purcell::report

#endif // PURCELL_REPORT_SURVEY_HPP
