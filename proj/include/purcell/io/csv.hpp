#ifndef PURCELL_IO_CSV_HPP
#define PURCELL_IO_CSV_HPP

#include "purcell/traces.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace purcell::io
{
// Comma-separated numeric table. Blank lines and lines starting with '#' are
// skipped; a first row containing non-numeric text is taken as the header.
struct CsvTable
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; // source line of each row, 1-based
    std::string source = "<stream>";

    std::size_t column(const std::string &name) const; // npos when absent
    double number(std::size_t row, std::size_t col) const;
    std::string location(std::size_t row) const; // "file:line"
};

CsvTable read_csv(std::istream &in, const std::string &source = "<stream>");
CsvTable read_csv(const std::filesystem::path &path);

// Schemas:
//   spectrum  wavelength_nm,counts[,background]
//   tuning    cavity_wavelength_nm,rate_per_ns,sigma
//   lifetime  bin_ps,count
// Readers accept the columns in this order with or without the header row.
// Errors are ParseError with "file:line" context.
SpectrumTrace read_spectrum_csv(const std::filesystem::path &path);
TuningSeries read_tuning_csv(const std::filesystem::path &path);
LifetimeTrace read_lifetime_csv(const std::filesystem::path &path);

SpectrumTrace parse_spectrum_csv(const CsvTable &table);
TuningSeries parse_tuning_csv(const CsvTable &table);
LifetimeTrace parse_lifetime_csv(const CsvTable &table);

void write_spectrum_csv(std::ostream &out, const SpectrumTrace &spectrum);
void write_tuning_csv(std::ostream &out, const TuningSeries &series);
void write_lifetime_csv(std::ostream &out, const LifetimeTrace &trace);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

} // namespace purcell::io

#endif // PURCELL_IO_CSV_HPP
