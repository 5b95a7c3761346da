#include "loadlab/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "loadlab/error.hpp"

namespace loadlab::csv {

Reader::Reader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) throw DataError("cannot open " + path.string());
}

void Reader::expect_header(std::string_view expected) {
  if (!std::getline(in_, line_)) throw DataError(path_.string() + ": empty file");
  ++line_no_;
  if (!line_.empty() && line_.back() == '\r') line_.pop_back();
  // Tolerate a UTF-8 byte order mark.
  std::string_view header = line_;
  if (header.substr(0, 3) == "\xEF\xBB\xBF") header.remove_prefix(3);
  if (header != expected)
    throw DataError(path_.string() + ": unexpected header '" + std::string(header) +
                    "', expected '" + std::string(expected) + "'");
}

bool Reader::next(std::vector<std::string_view>& fields) {
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    if (line_.empty()) continue;
    split(line_, fields);
    return true;
  }
  return false;
}

void split(std::string_view line, std::vector<std::string_view>& fields) {
  fields.clear();
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

bool parse_int(std::string_view text, long long& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

bool parse_bool(std::string_view text, bool& out) {
  if (text == "1" || text == "true" || text == "TRUE" || text == "True") {
    out = true;
    return true;
  }
  if (text == "0" || text == "false" || text == "FALSE" || text == "False") {
    out = false;
    return true;
  }
  return false;
}

void append_fixed(std::string& out, double value, int decimals) {
  char buf[64];
  if (value == 0.0) value = 0.0;  // no "-0.000000"
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
  if (ec != std::errc{}) {
    int n = std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    out.append(buf, static_cast<std::size_t>(n));
    return;
  }
  out.append(buf, ptr);
}

void append_double(std::string& out, double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  out.append(buf, ptr);
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace loadlab::csv
