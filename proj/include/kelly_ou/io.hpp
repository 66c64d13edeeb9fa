#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kelly_ou/report.hpp"
#include "kelly_ou/wealth_sim.hpp"

namespace kelly_ou {

/// 17 significant digits, '.' as separator, independent of the C locale.
std::string format_double(double v);

/// Header row plus one LF-terminated line per row.
std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

/// Columns t, S_1..S_n, f_1..f_n, V, logV.
std::string recorded_path_csv(const PathEnsemble& ensemble, std::size_t index);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// FNV-1a 64-bit, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace kelly_ou
