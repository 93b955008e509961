#include "purcell/io/csv.hpp"

#include "purcell/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace purcell::io
{
namespace
{
std::string trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    {
        s.remove_suffix(1);
    }
    return std::string(s);
}

std::vector<std::string> split(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true)
    {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos)
        {
            break;
        }
        start = comma + 1;
    }
    return out;
}

bool parse_number(const std::string &text, double &value)
{
    if (text.empty())
    {
        return false;
    }
    const char *first = text.data();
    if (*first == '+')
    {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
    return ec == std::errc() && ptr == text.data() + text.size();
}

bool looks_numeric(const std::vector<std::string> &fields)
{
    for (const auto &f : fields)
    {
        double v = 0.0;
        if (!parse_number(f, v))
        {
            return false;
        }
    }
    return true;
}

void require_columns(const CsvTable &t, std::size_t min_cols, std::size_t max_cols)
{
    for (std::size_t r = 0; r < t.rows.size(); ++r)
    {
        const auto n = t.rows[r].size();
        if (n < min_cols || n > max_cols)
        {
            throw ParseError(t.location(r) + ": expected " + std::to_string(min_cols) +
                             (min_cols == max_cols ? "" : "-" + std::to_string(max_cols)) + " columns, found " +
                             std::to_string(n));
        }
    }
}

} // namespace

std::size_t CsvTable::column(const std::string &name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
    {
        if (header[i] == name)
        {
            return i;
        }
    }
    return std::string::npos;
}

std::string CsvTable::location(std::size_t row) const
{
    return source + ":" + std::to_string(line_numbers.at(row));
}

double CsvTable::number(std::size_t row, std::size_t col) const
{
    const auto &fields = rows.at(row);
    if (col >= fields.size())
    {
        throw ParseError(location(row) + ": missing column " + std::to_string(col + 1));
    }
    double v = 0.0;
    if (!parse_number(fields[col], v))
    {
        throw ParseError(location(row) + ": not a number '" + fields[col] + "'");
    }
    return v;
}

CsvTable read_csv(std::istream &in, const std::string &source)
{
    CsvTable t;
    t.source = source;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line))
    {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#')
        {
            continue;
        }
        auto fields = split(stripped);
        if (first)
        {
            first = false;
            if (!looks_numeric(fields))
            {
                t.header = std::move(fields);
                continue;
            }
        }
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(line_no);
    }
    return t;
}

CsvTable read_csv(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw ParseError("cannot open " + path.string());
    }
    return read_csv(in, path.string());
}

SpectrumTrace parse_spectrum_csv(const CsvTable &t)
{
    require_columns(t, 2, 3);
    SpectrumTrace s;
    const bool has_bg = !t.rows.empty() && t.rows.front().size() == 3;
    if (has_bg)
    {
        s.background_counts.emplace();
    }
    for (std::size_t r = 0; r < t.rows.size(); ++r)
    {
        if ((t.rows[r].size() == 3) != has_bg)
        {
            throw ParseError(t.location(r) + ": inconsistent column count");
        }
        s.wavelength_nm.push_back(t.number(r, 0));
        s.counts.push_back(t.number(r, 1));
        if (has_bg)
        {
            s.background_counts->push_back(t.number(r, 2));
        }
        if (r > 0 && !(s.wavelength_nm[r] > s.wavelength_nm[r - 1]))
        {
            throw ParseError(t.location(r) + ": wavelengths must be strictly increasing");
        }
    }
    return s;
}

TuningSeries parse_tuning_csv(const CsvTable &t)
{
    require_columns(t, 3, 3);
    TuningSeries s;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
    {
        s.cavity_wavelength_nm.push_back(t.number(r, 0));
        s.rate.push_back(t.number(r, 1));
        const double sigma = t.number(r, 2);
        if (!(sigma > 0.0))
        {
            throw ParseError(t.location(r) + ": sigma must be positive");
        }
        s.rate_sigma.push_back(sigma);
    }
    return s;
}

LifetimeTrace parse_lifetime_csv(const CsvTable &t)
{
    require_columns(t, 2, 2);
    LifetimeTrace trace;
    if (t.rows.size() < 2)
    {
        throw ParseError(t.source + ": lifetime trace needs at least two bins");
    }
    const double b0 = t.number(0, 0);
    trace.bin_width_ps = t.number(1, 0) - b0;
    if (!(trace.bin_width_ps > 0.0))
    {
        throw ParseError(t.location(1) + ": bin times must increase");
    }
    trace.t0_offset_ps = b0;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
    {
        const double expected = b0 + static_cast<double>(r) * trace.bin_width_ps;
        if (std::abs(t.number(r, 0) - expected) > 1e-6 * trace.bin_width_ps + 1e-9)
        {
            throw ParseError(t.location(r) + ": bins must be uniformly spaced");
        }
        const double c = t.number(r, 1);
        if (c < 0.0 || c != std::floor(c))
        {
            throw ParseError(t.location(r) + ": count must be a non-negative integer");
        }
        trace.counts.push_back(static_cast<std::uint64_t>(c));
    }
    return trace;
}

SpectrumTrace read_spectrum_csv(const std::filesystem::path &path)
{
    return parse_spectrum_csv(read_csv(path));
}

TuningSeries read_tuning_csv(const std::filesystem::path &path)
{
    return parse_tuning_csv(read_csv(path));
}

LifetimeTrace read_lifetime_csv(const std::filesystem::path &path)
{
    return parse_lifetime_csv(read_csv(path));
}

std::string format_double(double value)
{
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_spectrum_csv(std::ostream &out, const SpectrumTrace &s)
{
    const bool bg = s.background_counts.has_value();
    out << (bg ? "wavelength_nm,counts,background\n" : "wavelength_nm,counts\n");
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        out << format_double(s.wavelength_nm[i]) << ',' << format_double(s.counts[i]);
        if (bg)
        {
            out << ',' << format_double((*s.background_counts)[i]);
        }
        out << '\n';
    }
}

void write_tuning_csv(std::ostream &out, const TuningSeries &s)
{
    out << "cavity_wavelength_nm,rate_per_ns,sigma\n";
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        out << format_double(s.cavity_wavelength_nm[i]) << ',' << format_double(s.rate[i]) << ','
            << format_double(s.rate_sigma[i]) << '\n';
    }
}

void write_lifetime_csv(std::ostream &out, const LifetimeTrace &t)
{
    out << "bin_ps,count\n";
    for (std::size_t i = 0; i < t.size(); ++i)
    {
        out << format_double(t.t0_offset_ps + static_cast<double>(i) * t.bin_width_ps) << ',' << t.counts[i] << '\n';
    }
}

} // namespace purcell::io
