#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace loadlab::csv {

/// Line-oriented reader for the plain comma-separated files used by the
/// pipeline (no quoting, no embedded commas).
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  /// Reads the header line and checks it matches `expected` exactly.
  void expect_header(std::string_view expected);

  /// Reads the next non-empty record. Returns false at end of file.
  bool next(std::vector<std::string_view>& fields);

  std::size_t line_number() const { return line_no_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

void split(std::string_view line, std::vector<std::string_view>& fields);

bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);
bool parse_bool(std::string_view text, bool& out);

/// Fixed-point with `decimals` digits; used where file formats pin precision.
void append_fixed(std::string& out, double value, int decimals);
/// Shortest representation that round-trips.
void append_double(std::string& out, double value);

std::ofstream open_output(const std::filesystem::path& path);

}  // namespace loadlab::csv
