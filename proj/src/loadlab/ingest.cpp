#include "loadlab/ingest.hpp"

#include <algorithm>
#include <sstream>

#include "loadlab/csv.hpp"
#include "loadlab/error.hpp"

namespace loadlab {
namespace {

constexpr std::string_view kTelemetryHeader = "household_id,timestamp_utc,voltage_v,current_a";
constexpr std::string_view kCreditHeader = "household_id,date,days_remaining";
constexpr std::string_view kMetaHeader =
    "household_id,country_code,utc_offset_minutes,activation_date,appliance_power_w,has_tv,"
    "flexible_appliance_count";

std::string where(const csv::Reader& reader) {
  return reader.path().string() + ":" + std::to_string(reader.line_number());
}

void report(ParseMode mode, const csv::Reader& reader, std::vector<RowError>& errors,
            std::string message) {
  if (mode == ParseMode::Strict) throw DataError(where(reader) + ": " + message);
  errors.push_back({reader.line_number(), std::move(message)});
}

}  // namespace

std::string profiles_csv_header() {
  std::string h = "household_id,date,age_days,complete";
  for (std::size_t i = 0; i < kHoursPerDay; ++i) {
    h += i < 10 ? ",h0" : ",h";
    h += std::to_string(i);
  }
  return h;
}

void write_profiles_csv(const std::filesystem::path& path,
                        const std::vector<DailyProfile>& profiles) {
  auto out = csv::open_output(path);
  std::string buf = profiles_csv_header() + "\n";
  for (const auto& p : profiles) {
    buf += p.household_id;
    buf += ',';
    buf += format_date(p.date);
    buf += ',';
    buf += std::to_string(p.age_days);
    buf += p.complete ? ",1" : ",0";
    for (double v : p.hours) {
      buf += ',';
      csv::append_fixed(buf, v, 6);
    }
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<DailyProfile> read_profiles_csv(const std::filesystem::path& path) {
  csv::Reader reader(path);
  reader.expect_header(profiles_csv_header());
  std::vector<DailyProfile> profiles;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f.size() != 4 + kHoursPerDay) throw DataError(where(reader) + ": expected 28 fields");
    DailyProfile p;
    p.household_id = std::string(f[0]);
    long long age = 0;
    if (p.household_id.empty() || !parse_date(f[1], p.date) || !csv::parse_int(f[2], age) ||
        age < 0 || !csv::parse_bool(f[3], p.complete))
      throw DataError(where(reader) + ": malformed profile key fields");
    p.age_days = static_cast<int>(age);
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      if (!csv::parse_double(f[4 + h], p.hours[h]) || p.hours[h] < 0.0)
        throw DataError(where(reader) + ": bad hourly value in column " + std::to_string(4 + h));
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

void write_keys_csv(const std::filesystem::path& path, const std::vector<ProfileKey>& keys) {
  auto out = csv::open_output(path);
  out << "household_id,date\n";
  for (const auto& k : keys) out << k.household_id << ',' << format_date(k.date) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<ProfileKey> read_keys_csv(const std::filesystem::path& path) {
  csv::Reader reader(path);
  reader.expect_header("household_id,date");
  std::vector<ProfileKey> keys;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    ProfileKey k;
    if (f.size() != 2 || f[0].empty() || !parse_date(f[1], k.date))
      throw DataError(where(reader) + ": malformed key row");
    k.household_id = std::string(f[0]);
    keys.push_back(std::move(k));
  }
  return keys;
}

MetaTable parse_meta(const std::filesystem::path& path) {
  csv::Reader reader(path);
  reader.expect_header(kMetaHeader);
  MetaTable table;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f.size() != 7) throw DataError(where(reader) + ": expected 7 fields");
    HouseholdMeta m;
    m.household_id = std::string(f[0]);
    m.country_code = std::string(f[1]);
    long long offset = 0, flex = 0;
    if (m.household_id.empty()) throw DataError(where(reader) + ": empty household_id");
    if (!csv::parse_int(f[2], offset) || offset < -720 || offset > 840)
      throw DataError(where(reader) + ": utc_offset_minutes out of range");
    if (!parse_date(f[3], m.activation_date))
      throw DataError(where(reader) + ": bad activation_date");
    if (!csv::parse_double(f[4], m.appliance_power_w) || m.appliance_power_w < 0.0)
      throw DataError(where(reader) + ": bad appliance_power_w");
    if (!csv::parse_bool(f[5], m.has_tv)) throw DataError(where(reader) + ": bad has_tv");
    if (!csv::parse_int(f[6], flex) || flex < 0)
      throw DataError(where(reader) + ": bad flexible_appliance_count");
    m.utc_offset_minutes = static_cast<int>(offset);
    m.flexible_appliance_count = static_cast<int>(flex);
    auto id = m.household_id;
    if (!table.emplace(id, std::move(m)).second)
      throw DataError(where(reader) + ": duplicate household " + id);
  }
  return table;
}

void write_meta_csv(const std::filesystem::path& path, const MetaTable& meta) {
  auto out = csv::open_output(path);
  std::string buf(kMetaHeader);
  buf += '\n';
  for (const auto& [id, m] : meta) {
    buf += id + ',' + m.country_code + ',' + std::to_string(m.utc_offset_minutes) + ',' +
           format_date(m.activation_date) + ',';
    csv::append_double(buf, m.appliance_power_w);
    buf += m.has_tv ? ",1," : ",0,";
    buf += std::to_string(m.flexible_appliance_count);
    buf += '\n';
  }
  out << buf;
}

void normalize_samples(std::vector<RawSample>& samples) {
  std::stable_sort(samples.begin(), samples.end(),
                   [](const RawSample& a, const RawSample& b) { return a.time < b.time; });
  // Keep the last record of each run of identical timestamps.
  std::size_t out = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i + 1 < samples.size() && samples[i + 1].time == samples[i].time) continue;
    samples[out++] = samples[i];
  }
  samples.resize(out);
}

TelemetryData parse_telemetry(const std::filesystem::path& path, const MetaTable& meta,
                              ParseMode mode) {
  csv::Reader reader(path);
  reader.expect_header(kTelemetryHeader);
  TelemetryData data;
  std::map<std::string, std::vector<RawSample>, std::less<>> grouped;
  std::vector<std::string> unknown;
  std::vector<std::string_view> f;

  std::string last_id;
  std::vector<RawSample>* last_bucket = nullptr;
  int last_offset = 0;
  while (reader.next(f)) {
    if (f.size() != 4) {
      report(mode, reader, data.errors, "expected 4 fields, got " + std::to_string(f.size()));
      continue;
    }
    UtcSeconds t;
    double v = 0.0, i = 0.0;
    if (f[0].empty()) {
      report(mode, reader, data.errors, "empty household_id");
      continue;
    }
    if (!parse_utc_timestamp(f[1], t)) {
      report(mode, reader, data.errors, "bad timestamp '" + std::string(f[1]) + "'");
      continue;
    }
    if (!csv::parse_double(f[2], v)) {
      report(mode, reader, data.errors, "bad voltage");
      continue;
    }
    if (!csv::parse_double(f[3], i)) {
      report(mode, reader, data.errors, "bad current");
      continue;
    }
    if (v < 0.0) {
      report(mode, reader, data.errors, "negative voltage");
      continue;
    }
    if (i < 0.0) {
      report(mode, reader, data.errors, "negative current");
      continue;
    }
    if (last_bucket == nullptr || f[0] != last_id) {
      auto m = meta.find(f[0]);
      if (m == meta.end()) {
        std::string id(f[0]);
        if (std::find(unknown.begin(), unknown.end(), id) == unknown.end()) unknown.push_back(id);
        last_bucket = nullptr;
        continue;
      }
      last_id = std::string(f[0]);
      last_bucket = &grouped[last_id];
      last_offset = m->second.utc_offset_minutes;
    }
    last_bucket->push_back({to_local(t, last_offset), v, i});
  }
  if (!unknown.empty()) {
    std::ostringstream msg;
    msg << path.string() << ": household_id not in metadata:";
    for (std::size_t k = 0; k < unknown.size() && k < 20; ++k) msg << ' ' << unknown[k];
    if (unknown.size() > 20) msg << " (+" << unknown.size() - 20 << " more)";
    throw DataError(msg.str());
  }
  data.households.reserve(grouped.size());
  for (auto& [id, samples] : grouped) {
    normalize_samples(samples);
    data.households.push_back({id, std::move(samples)});
  }
  return data;
}

HourlyEnergySeries integrate_hourly(std::span<const RawSample> samples,
                                    const IntegrationOptions& options) {
  HourlyEnergySeries series;
  if (samples.empty()) return series;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].time < samples[i - 1].time)
      throw DataError("integrate_hourly: samples out of order at index " + std::to_string(i));
  }
  const auto first = samples.front().time;
  const auto last = samples.back().time;
  series.start_hour = floor_hour(first);
  series.activation_date = date_of(first);
  const std::int64_t start = seconds_of(series.start_hour);
  std::int64_t end = seconds_of(floor_hour(last));
  if (end != seconds_of(last)) end += kSecondsPerHour;
  const auto n_hours = static_cast<std::size_t>((end - start) / kSecondsPerHour);
  series.energy_wh.assign(n_hours, 0.0);
  series.gap.assign(n_hours, 0);
  if (n_hours == 0) return series;

  auto hour_index = [&](std::int64_t t) {
    return static_cast<std::size_t>((t - start) / kSecondsPerHour);
  };
  // Hours touched by the open interval (a, b) become gaps.
  auto mark_gap = [&](std::int64_t a, std::int64_t b) {
    if (b <= a) return;
    std::size_t lo = hour_index(a);
    std::size_t hi = std::min(hour_index(b - 1), n_hours - 1);
    for (std::size_t h = lo; h <= hi; ++h) series.gap[h] = 1;
  };

  if (seconds_of(first) > start) series.gap[0] = 1;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::int64_t b = seconds_of(samples[i].time);
    std::int64_t e = i + 1 < samples.size() ? seconds_of(samples[i + 1].time) : end;
    if (e <= b) continue;
    if (e - b > options.max_hold_seconds) mark_gap(b + options.max_hold_seconds, e);
    const double power = instantaneous_power(samples[i]);
    std::size_t h = hour_index(b);
    while (b < e) {
      std::int64_t hour_end = start + static_cast<std::int64_t>(h + 1) * kSecondsPerHour;
      std::int64_t c = std::min(e, hour_end);
      series.energy_wh[h] += power * static_cast<double>(c - b) / kSecondsPerHour;
      b = c;
      ++h;
    }
  }
  return series;
}

std::vector<DailyProfile> slice_daily(const HourlyEnergySeries& series) {
  std::vector<DailyProfile> out;
  const std::size_t n = series.energy_wh.size();
  if (n == 0) return out;
  const std::int64_t start = seconds_of(series.start_hour);
  const std::int64_t end = start + static_cast<std::int64_t>(n) * kSecondsPerHour;
  const LocalDate first_day = date_of(series.start_hour);
  const LocalDate last_day = date_of(LocalSeconds{std::chrono::seconds{end - 1}});
  for (LocalDate d = first_day; d <= last_day; d += std::chrono::days{1}) {
    int age = days_between(series.activation_date, d);
    if (age < 0) continue;
    DailyProfile p;
    p.household_id = series.household_id;
    p.date = d;
    p.age_days = age;
    p.complete = true;
    const std::int64_t day_start = seconds_of(LocalSeconds{d.time_since_epoch()});
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      std::int64_t t = day_start + static_cast<std::int64_t>(h) * kSecondsPerHour;
      if (t < start || t >= end) {
        p.complete = false;
        continue;
      }
      auto idx = static_cast<std::size_t>((t - start) / kSecondsPerHour);
      p.hours[h] = series.energy_wh[idx];
      if (series.gap[idx]) p.complete = false;
    }
    out.push_back(std::move(p));
  }
  return out;
}

CreditData parse_credit(const std::filesystem::path& path, ParseMode mode) {
  csv::Reader reader(path);
  reader.expect_header(kCreditHeader);
  CreditData data;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f.size() != 3) {
      report(mode, reader, data.errors, "expected 3 fields, got " + std::to_string(f.size()));
      continue;
    }
    CreditRecord r;
    if (f[0].empty()) {
      report(mode, reader, data.errors, "empty household_id");
      continue;
    }
    if (!parse_date(f[1], r.date)) {
      report(mode, reader, data.errors, "bad date '" + std::string(f[1]) + "'");
      continue;
    }
    if (!csv::parse_double(f[2], r.days_remaining)) {
      report(mode, reader, data.errors, "bad days_remaining");
      continue;
    }
    if (r.days_remaining < 0.0) {
      report(mode, reader, data.errors, "negative days_remaining");
      continue;
    }
    r.household_id = std::string(f[0]);
    data.records.push_back(std::move(r));
  }
  data.records = fill_credit(std::move(data.records));
  return data;
}

std::vector<CreditRecord> fill_credit(std::vector<CreditRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.household_id, a.date) < std::tie(b.household_id, b.date);
  });
  std::vector<CreditRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i + 1 < records.size() && records[i + 1].household_id == r.household_id &&
        records[i + 1].date == r.date)
      continue;
    if (!out.empty() && out.back().household_id == r.household_id) {
      CreditRecord fill = out.back();
      for (fill.date += std::chrono::days{1}; fill.date < r.date; fill.date += std::chrono::days{1}) {
        fill.days_remaining = std::max(0.0, fill.days_remaining - 1.0);
        out.push_back(fill);
      }
    }
    out.push_back(r);
  }
  return out;
}

void write_credit_csv(const std::filesystem::path& path, const std::vector<CreditRecord>& records) {
  auto out = csv::open_output(path);
  std::string buf(kCreditHeader);
  buf += '\n';
  for (const auto& r : records) {
    buf += r.household_id;
    buf += ',';
    buf += format_date(r.date);
    buf += ',';
    csv::append_double(buf, r.days_remaining);
    buf += '\n';
  }
  out << buf;
}

}  // namespace loadlab
