#ifndef PURCELL_REPORT_CONFIG_HPP
#define PURCELL_REPORT_CONFIG_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace purcell::report
{
// Flat sectioned key=value configuration. Keys are addressed as
// "section.key". Values from the file are overlaid by command-line
// overrides. Every lookup records the value actually used, defaults
// included, so the resolved set can be echoed into reports.
class Config
{
public:
    Config() = default;

    /// Parses an INI file. Throws ParseError naming the file on failure.
    static Config load(const std::filesystem::path &path);
    static Config parse(const std::string &text, const std::string &source = "<string>");

    void set(const std::string &key, const std::string &value);
    bool has(const std::string &key) const;

    std::string get_string(const std::string &key, const std::string &fallback) const;
    double get_double(const std::string &key, double fallback) const;
    long long get_int(const std::string &key, long long fallback) const;
    std::vector<double> get_list(const std::string &key, const std::vector<double> &fallback) const;

    std::optional<std::string> find_string(const std::string &key) const;
    std::optional<double> find_double(const std::string &key) const;

    /// Section names starting with prefix, in file order (e.g. "device.").
    std::vector<std::string> sections_with_prefix(const std::string &prefix) const;

    /// Every key that was looked up, with the value in effect.
    const std::map<std::string, std::string> &resolved() const { return resolved_; }
    /// Resolved keys rendered back to INI text.
    std::string resolved_ini() const;

    std::string source() const { return source_; }

    /// A path value: relative paths read from a config file are taken
    /// relative to that file, overrides relative to the working directory.
    std::optional<std::filesystem::path> find_path(const std::string &key) const;

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> file_keys_;
    std::filesystem::path base_dir_;
    std::vector<std::string> section_order_;
    mutable std::map<std::string, std::string> resolved_;
    std::string source_ = "<defaults>";
};

/// Renders a section.key map as INI text, sections in sorted order.
std::string to_ini(const std::map<std::string, std::string> &values);

} // namespace purcell::report

#endif // PURCELL_REPORT_CONFIG_HPP
