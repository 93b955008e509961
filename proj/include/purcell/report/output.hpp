#ifndef PURCELL_REPORT_OUTPUT_HPP
#define PURCELL_REPORT_OUTPUT_HPP

#include <filesystem>
#include <string>
#include <string_view>

namespace purcell::report
{
/// Writes the file through a temporary sibling and a rename, so readers
/// never observe a partial file. Creates parent directories.
void write_file_atomic(const std::filesystem::path &path, std::string_view contents);

} // namespace purcell::report

#endif // PURCELL_REPORT_OUTPUT_HPP
