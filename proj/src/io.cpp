#include "kelly_ou/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace kelly_ou {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (res.ec != std::errc()) throw std::runtime_error("float formatting failed");
  return std::string(buf, res.ptr);
}

std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out += ',';
    out += header[j];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

std::string recorded_path_csv(const PathEnsemble& ensemble, std::size_t index) {
  const RecordedPath& path = ensemble.recorded.at(index);
  const Index n = path.x.cols();
  std::vector<std::string> header{"t"};
  for (Index i = 0; i < n; ++i) header.push_back("S_" + std::to_string(i + 1));
  for (Index i = 0; i < n; ++i) header.push_back("f_" + std::to_string(i + 1));
  header.push_back("V");
  header.push_back("logV");

  std::vector<std::vector<double>> rows;
  rows.reserve(ensemble.times.size());
  for (std::size_t k = 0; k < ensemble.times.size(); ++k) {
    const Index r = static_cast<Index>(k);
    std::vector<double> row{ensemble.times[k]};
    for (Index i = 0; i < n; ++i) row.push_back(std::exp(path.x(r, i)));
    for (Index i = 0; i < n; ++i) row.push_back(path.f(r, i));
    row.push_back(path.wealth(r));
    row.push_back(path.log_wealth(r));
    rows.push_back(std::move(row));
  }
  return to_csv(header, rows);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace kelly_ou
