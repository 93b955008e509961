#include "purcell/report/config.hpp"

#include "purcell/errors.hpp"
#include "purcell/io/csv.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace purcell::report
{
namespace
{
double to_double(const std::string &key, const std::string &text)
{
    const std::string t = boost::algorithm::trim_copy(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    {
        throw ParseError("config key '" + key + "': not a number '" + text + "'");
    }
    return v;
}
} // namespace

Config Config::parse(const std::string &text, const std::string &source)
{
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try
    {
        boost::property_tree::ini_parser::read_ini(in, tree);
    }
    catch (const boost::property_tree::ini_parser_error &e)
    {
        throw ParseError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    Config c;
    c.source_ = source;
    for (const auto &[section, body] : tree)
    {
        if (body.empty())
        {
            c.values_[section] = body.data();
            c.file_keys_.insert(section);
            continue;
        }
        c.section_order_.push_back(section);
        for (const auto &[key, value] : body)
        {
            c.values_[section + "." + key] = value.data();
            c.file_keys_.insert(section + "." + key);
        }
    }
    return c;
}

Config Config::load(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw ParseError("cannot open config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    Config c = parse(text.str(), path.string());
    c.base_dir_ = path.parent_path();
    return c;
}

void Config::set(const std::string &key, const std::string &value)
{
    values_[key] = value;
    file_keys_.erase(key);
    const auto dot = key.rfind('.');
    if (dot != std::string::npos)
    {
        const std::string section = key.substr(0, dot);
        if (std::find(section_order_.begin(), section_order_.end(), section) == section_order_.end())
        {
            section_order_.push_back(section);
        }
    }
}

bool Config::has(const std::string &key) const
{
    return values_.count(key) != 0;
}

std::optional<std::string> Config::find_string(const std::string &key) const
{
    const auto it = values_.find(key);
    if (it == values_.end())
    {
        return std::nullopt;
    }
    resolved_[key] = it->second;
    return it->second;
}

std::optional<double> Config::find_double(const std::string &key) const
{
    const auto s = find_string(key);
    if (!s)
    {
        return std::nullopt;
    }
    return to_double(key, *s);
}

std::string Config::get_string(const std::string &key, const std::string &fallback) const
{
    const auto s = find_string(key);
    if (s)
    {
        return *s;
    }
    resolved_[key] = fallback;
    return fallback;
}

double Config::get_double(const std::string &key, double fallback) const
{
    const auto v = find_double(key);
    if (v)
    {
        return *v;
    }
    resolved_[key] = io::format_double(fallback);
    return fallback;
}

long long Config::get_int(const std::string &key, long long fallback) const
{
    const auto s = find_string(key);
    if (!s)
    {
        resolved_[key] = std::to_string(fallback);
        return fallback;
    }
    const std::string t = boost::algorithm::trim_copy(*s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    {
        throw ParseError("config key '" + key + "': not an integer '" + *s + "'");
    }
    return v;
}

std::vector<double> Config::get_list(const std::string &key, const std::vector<double> &fallback) const
{
    const auto s = find_string(key);
    if (!s)
    {
        std::string text;
        for (std::size_t i = 0; i < fallback.size(); ++i)
        {
            text += (i ? "," : "") + io::format_double(fallback[i]);
        }
        resolved_[key] = text;
        return fallback;
    }
    std::vector<std::string> parts;
    boost::algorithm::split(parts, *s, boost::algorithm::is_any_of(",; "), boost::algorithm::token_compress_on);
    std::vector<double> out;
    for (const auto &p : parts)
    {
        if (!boost::algorithm::trim_copy(p).empty())
        {
            out.push_back(to_double(key, p));
        }
    }
    return out;
}

std::vector<std::string> Config::sections_with_prefix(const std::string &prefix) const
{
    std::vector<std::string> out;
    for (const auto &s : section_order_)
    {
        if (boost::algorithm::starts_with(s, prefix))
        {
            out.push_back(s);
        }
    }
    return out;
}

std::optional<std::filesystem::path> Config::find_path(const std::string &key) const
{
    const auto s = find_string(key);
    if (!s || s->empty())
    {
        return std::nullopt;
    }
    std::filesystem::path p(*s);
    if (p.is_relative() && file_keys_.count(key) && !base_dir_.empty())
    {
        p = base_dir_ / p;
    }
    return p;
}

std::string Config::resolved_ini() const
{
    return to_ini(resolved_);
}

std::string to_ini(const std::map<std::string, std::string> &values)
{
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
    std::vector<std::pair<std::string, std::string>> top;
    for (const auto &[key, value] : values)
    {
        const auto dot = key.rfind('.');
        if (dot == std::string::npos)
        {
            top.emplace_back(key, value);
        }
        else
        {
            sections[key.substr(0, dot)].emplace_back(key.substr(dot + 1), value);
        }
    }
    std::ostringstream out;
    for (const auto &[k, v] : top)
    {
        out << k << " = " << v << '\n';
    }
    for (const auto &[section, entries] : sections)
    {
        out << '[' << section << "]\n";
        for (const auto &[k, v] : entries)
        {
            out << k << " = " << v << '\n';
        }
        out << '\n';
    }
    return out.str();
}

} // namespace purcell::report
