#include "loadlab/time.hpp"

#include <charconv>
#include <cstdio>

namespace loadlab {
namespace {

bool parse_fixed(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  auto first = text.data() + pos;
  auto last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && out >= 0;
}

bool make_date(int y, int m, int d, LocalDate& out) {
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return false;
  out = LocalDate{std::chrono::sys_days{ymd}.time_since_epoch()};
  return true;
}

}  // namespace

bool parse_date(std::string_view text, LocalDate& out) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  if (!parse_fixed(text, 0, 4, y) || !parse_fixed(text, 5, 2, m) || !parse_fixed(text, 8, 2, d))
    return false;
  return make_date(y, m, d, out);
}

bool parse_utc_timestamp(std::string_view text, UtcSeconds& out) {
  if (text.size() < 19 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':' ||
      text[16] != ':')
    return false;
  LocalDate date;
  if (!parse_date(text.substr(0, 10), date)) return false;
  int hh = 0, mm = 0, ss = 0;
  if (!parse_fixed(text, 11, 2, hh) || !parse_fixed(text, 14, 2, mm) ||
      !parse_fixed(text, 17, 2, ss))
    return false;
  if (hh > 23 || mm > 59 || ss > 59) return false;
  auto rest = text.substr(19);
  if (!(rest.empty() || rest == "Z" || rest == "+00:00" || rest == "+0000")) return false;
  out = UtcSeconds{date.time_since_epoch()} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
        std::chrono::seconds{ss};
  return true;
}

std::string format_date(LocalDate d) {
  std::chrono::year_month_day ymd{std::chrono::sys_days{d.time_since_epoch()}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_utc_timestamp(UtcSeconds t) {
  auto day = std::chrono::floor<std::chrono::days>(t);
  auto secs = (t - day).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lldZ",
                format_date(LocalDate{day.time_since_epoch()}).c_str(),
                static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

bool is_weekday(LocalDate d) {
  std::chrono::weekday wd{std::chrono::sys_days{d.time_since_epoch()}};
  return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

}  // namespace loadlab
