#include "loadlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "loadlab/csv.hpp"
#include "loadlab/error.hpp"
#include "loadlab/parallel.hpp"
#include "loadlab/random.hpp"

namespace loadlab::synth {
namespace {

HourlyValues scaled(HourlyValues shape, double daily_total) {
  double sum = std::accumulate(shape.begin(), shape.end(), 0.0);
  for (auto& v : shape) v *= daily_total / sum;
  return shape;
}

HourlyValues fill(std::initializer_list<std::pair<int, double>> runs) {
  // runs: (first hour of run, value) in ascending hour order
  HourlyValues h{};
  std::vector<std::pair<int, double>> r(runs);
  for (std::size_t i = 0; i < r.size(); ++i) {
    int end = i + 1 < r.size() ? r[i + 1].first : 24;
    for (int t = r[i].first; t < end; ++t) h[static_cast<std::size_t>(t)] = r[i].second;
  }
  return h;
}

std::array<ArchetypeTemplate, kArchetypeCount> make_templates() {
  // Evening activity ends by 20:00 so a +2 h shift still leaves a quiet tail.
  return {{
      {Archetype::LowUse,
       scaled(fill({{0, 0.2}, {6, 0.4}, {7, 0.1}, {17, 1.0}, {18, 1.5}, {21, 0.3}}), 12.0), 12.0},
      {Archetype::ModerateUse,
       scaled(fill({{0, 0.3}, {6, 0.6}, {8, 0.3}, {16, 1.5}, {17, 5.0}, {21, 0.4}}), 39.0), 39.0},
      {Archetype::NighttimeUse,
       scaled(fill({{0, 4.5}, {5, 4.0}, {6, 2.0}, {7, 0.6}, {17, 1.5}, {18, 5.0}}), 73.0), 73.0},
      {Archetype::SinglePeak,
       scaled(fill({{0, 1.2}, {6, 2.0}, {16, 3.0}, {17, 6.0}, {18, 12.0}, {19, 18.0}, {20, 14.0},
                    {21, 1.5}}),
              102.0),
       102.0},
      {Archetype::DoublePeak,
       scaled(fill({{0, 1.0}, {6, 6.0}, {7, 14.0}, {8, 10.0}, {9, 3.0}, {10, 2.5}, {16, 3.0},
                    {17, 6.0}, {18, 14.0}, {19, 18.0}, {20, 12.0}, {21, 1.5}}),
              122.0),
       122.0},
  }};
}

template <std::size_t N>
std::size_t pick(Rng& rng, const std::array<double, N>& weights) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < N; ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return N - 1;
}

struct Country {
  const char* code;
  int offset_minutes;
  double weight;
};
constexpr std::array<Country, 4> kCountries{{{"KE", 180, 0.4}, {"TG", 0, 0.2}, {"CD", 60, 0.2}, {"RW", 120, 0.2}}};

// Probability that a day falls one archetype lower: high at first use, zero
// at day 96, then rising over the following two years.
double downshift_probability(int age) {
  if (age < 96) return 0.25 * (1.0 - age / 96.0);
  return 0.45 * std::min(1.0, (age - 96) / 634.0);
}

Archetype downshift(Archetype a) {
  switch (a) {
    case Archetype::DoublePeak: return Archetype::SinglePeak;
    case Archetype::SinglePeak: return Archetype::ModerateUse;
    case Archetype::NighttimeUse: return Archetype::ModerateUse;
    default: return Archetype::LowUse;
  }
}

double quantize(double value, double scale) { return std::round(value * scale) / scale; }

// Emits the samples of one local hour and returns the energy they embody.
// Power may switch once inside the hour; unchanged readings are repeated
// every 10 minutes.
double emit_hour(Rng& rng, LocalSeconds hour_start, double energy_wh,
                 std::vector<RawSample>& out) {
  struct Level {
    std::int64_t from;  // seconds into the hour
    double power;
  };
  std::vector<Level> levels;
  const double mean_power = energy_wh;  // 1 h interval: W == Wh
  if (energy_wh > 0.0 && uniform01(rng) < 0.5) {
    std::int64_t m = 10 + static_cast<std::int64_t>(uniform_index(rng, 31));
    double first = mean_power * (1.0 + uniform(rng, -0.3, 0.3));
    double second = (60.0 * mean_power - first * static_cast<double>(m)) / static_cast<double>(60 - m);
    levels.push_back({0, first});
    levels.push_back({m * 60, std::max(0.0, second)});
  } else {
    levels.push_back({0, mean_power});
  }
  const double voltage = quantize(12.4 + uniform(rng, -0.4, 0.6), 100.0);
  double embodied = 0.0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const std::int64_t end = l + 1 < levels.size() ? levels[l + 1].from : kSecondsPerHour;
    const double current = quantize(levels[l].power / voltage, 1e4);
    for (std::int64_t t = levels[l].from; t < end; t += 600)
      out.push_back({hour_start + std::chrono::seconds{t}, voltage, current});
    embodied += voltage * current * static_cast<double>(end - levels[l].from) / kSecondsPerHour;
  }
  return embodied;
}

}  // namespace

std::string_view archetype_name(Archetype a) {
  switch (a) {
    case Archetype::LowUse: return "low_use";
    case Archetype::ModerateUse: return "moderate_use";
    case Archetype::NighttimeUse: return "nighttime_use";
    case Archetype::SinglePeak: return "single_peak";
    case Archetype::DoublePeak: return "double_peak";
  }
  return "unknown";
}

const std::array<ArchetypeTemplate, kArchetypeCount>& archetype_templates() {
  static const auto templates = make_templates();
  return templates;
}

bool parse_scenario(std::string_view text, Scenario& out) {
  if (text == "clean") {
    out = Scenario::Clean;
    return true;
  }
  if (text == "paper-like") {
    out = Scenario::PaperLike;
    return true;
  }
  return false;
}

FleetParams FleetParams::for_scenario(Scenario scenario, std::size_t households, int horizon_days,
                                      std::uint64_t seed) {
  FleetParams p;
  p.households = households;
  p.horizon_days = horizon_days;
  p.seed = seed;
  p.scenario = scenario;
  if (scenario == Scenario::PaperLike) {
    p.noise = {0.08, 0.05, 2};
    p.outage_propensity = 0.18;
    p.ramp_outages = true;
    p.drift = true;
    p.varying_ownership = true;
  }
  return p;
}

SyntheticHousehold generate_household(const FleetParams& params, std::size_t index) {
  if (params.horizon_days < 1) throw ConfigError("synth: horizon_days must be >= 1");
  Rng rng = derive_rng(params.seed, static_cast<std::uint64_t>(index));
  const auto& templates = archetype_templates();
  SyntheticHousehold h;

  char id[32];
  std::snprintf(id, sizeof id, "H%05zu", index + 1);
  auto& meta = h.meta;
  meta.household_id = id;
  const auto& country = kCountries[pick(rng, std::array<double, 4>{0.4, 0.2, 0.2, 0.2})];
  meta.country_code = country.code;
  meta.utc_offset_minutes = country.offset_minutes;
  meta.activation_date = params.start_date + std::chrono::days{uniform_index(rng, 180)};
  meta.has_tv = uniform01(rng) < 0.43;
  if (meta.has_tv) {
    meta.appliance_power_w = std::round(uniform(rng, 75.0, 125.0));
    meta.flexible_appliance_count = 1 + static_cast<int>(uniform_index(rng, 3));
  } else {
    meta.appliance_power_w = std::round(uniform(rng, 25.0, 60.0));
    meta.flexible_appliance_count = static_cast<int>(uniform_index(rng, 2));
  }

  // Households without a TV never produce peak days.
  const std::array<double, 5> dominant_w =
      meta.has_tv ? std::array<double, 5>{0.04, 0.12, 0.14, 0.40, 0.30}
                  : std::array<double, 5>{0.12, 0.44, 0.44, 0.0, 0.0};
  const std::array<double, 5> other_w = meta.has_tv
                                            ? std::array<double, 5>{0.10, 0.25, 0.25, 0.20, 0.20}
                                            : std::array<double, 5>{0.20, 0.40, 0.40, 0.0, 0.0};
  const auto dominant = static_cast<Archetype>(pick(rng, dominant_w));
  const double homogeneity = uniform(rng, 0.45, 0.75);

  int days = params.horizon_days;
  if (params.varying_ownership)
    days = params.horizon_days / 2 +
           static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(params.horizon_days -
                                                                          params.horizon_days / 2 + 1)));
  days = std::max(1, days);

  // Two-state outage chain with mean outage spell of 6 days; the entry
  // probability is set so the stationary outage share equals the propensity.
  const double household_q = std::clamp(params.outage_propensity * uniform(rng, 0.0, 2.0), 0.0, 0.95);
  constexpr double exit_p = 1.0 / 6.0;
  std::vector<char> outage(static_cast<std::size_t>(days), 0);
  bool in_outage = false;
  for (int age = 0; age < days; ++age) {
    double q = household_q * (params.ramp_outages ? std::min(1.0, age / 365.0) : 1.0);
    double enter_p = q >= 1.0 ? 1.0 : q * exit_p / (1.0 - q);
    if (age > 0) in_outage = in_outage ? uniform01(rng) >= exit_p : uniform01(rng) < enter_p;
    outage[static_cast<std::size_t>(age)] = in_outage;
  }
  // Credit: a paid spell holds its remaining length in days; outage days are 0.
  std::vector<double> remaining(static_cast<std::size_t>(days), 0.0);
  for (int age = days - 1, left = 0; age >= 0; --age) {
    left = outage[static_cast<std::size_t>(age)] ? 0 : left + 1;
    remaining[static_cast<std::size_t>(age)] = left;
  }
  for (int age = 0; age < days; ++age) {
    auto a = static_cast<std::size_t>(age);
    bool top_up = !outage[a] && (age == 0 || outage[a - 1]);
    if (age == 0 || top_up || age == days - 1)
      h.credit.push_back({meta.household_id, meta.activation_date + std::chrono::days{age}, remaining[a]});
  }

  h.samples.reserve(static_cast<std::size_t>(days) * 160);
  h.profiles.reserve(static_cast<std::size_t>(days));
  h.truth.reserve(static_cast<std::size_t>(days));
  for (int age = 0; age < days; ++age) {
    const LocalDate date = meta.activation_date + std::chrono::days{age};
    HourlyValues target{};
    std::optional<Archetype> truth;
    if (!outage[static_cast<std::size_t>(age)]) {
      auto a = uniform01(rng) < homogeneity ? dominant : static_cast<Archetype>(pick(rng, other_w));
      if (params.drift && uniform01(rng) < downshift_probability(age)) a = downshift(a);
      truth = a;
      const auto& shape = templates[static_cast<std::size_t>(a)].base_shape;
      const auto& noise = params.noise;
      int shift = 0;
      if (noise.shift_jitter_hours > 0)
        shift = static_cast<int>(uniform_index(rng, 2 * noise.shift_jitter_hours + 1)) -
                noise.shift_jitter_hours;
      // Low-use days spread down towards zero so they blend with outage days.
      const double sigma = noise.amplitude_sigma * (a == Archetype::LowUse ? 4.0 : 1.0);
      double amp = std::max(0.05, 1.0 + sigma * standard_normal(rng));
      // Edge-clamped shift: evening load never wraps into the early morning.
      HourlyValues moved{};
      for (int t = 0; t < 24; ++t) moved[static_cast<std::size_t>(t)] = shape[static_cast<std::size_t>(std::clamp(t - shift, 0, 23))];
      amp *= std::accumulate(shape.begin(), shape.end(), 0.0) /
             std::accumulate(moved.begin(), moved.end(), 0.0);
      for (int t = 0; t < 24; ++t) {
        double v = moved[static_cast<std::size_t>(t)] * amp;
        if (noise.hourly_sigma > 0.0)
          v *= std::max(0.0, 1.0 + noise.hourly_sigma * standard_normal(rng));
        target[static_cast<std::size_t>(t)] = v;
      }
    }
    DailyProfile p;
    p.household_id = meta.household_id;
    p.date = date;
    p.age_days = age;
    p.complete = true;
    const LocalSeconds day_start{date.time_since_epoch()};
    for (std::size_t t = 0; t < kHoursPerDay; ++t)
      p.hours[t] = emit_hour(rng, day_start + std::chrono::hours{t}, target[t], h.samples);
    h.profiles.push_back(std::move(p));
    h.truth.push_back(truth);
  }
  return h;
}

void write_fleet(const FleetParams& params, const std::filesystem::path& out_dir,
                 unsigned threads) {
  std::filesystem::create_directories(out_dir);
  auto telemetry = csv::open_output(out_dir / "telemetry.csv");
  auto truth = csv::open_output(out_dir / "truth.csv");
  telemetry << "household_id,timestamp_utc,voltage_v,current_a\n";
  truth << "household_id,date,true_archetype\n";
  MetaTable meta;
  std::vector<CreditRecord> credit;

  const unsigned workers = resolve_threads(threads);
  const std::size_t batch = std::max<std::size_t>(4, workers);
  std::string buf;
  for (std::size_t first = 0; first < params.households; first += batch) {
    const std::size_t n = std::min(batch, params.households - first);
    std::vector<SyntheticHousehold> generated(n);
    parallel_for(n, threads, [&](std::size_t i) { generated[i] = generate_household(params, first + i); });
    for (auto& h : generated) {
      const auto& id = h.meta.household_id;
      const int offset = h.meta.utc_offset_minutes;
      buf.clear();
      std::int64_t cached_day = std::numeric_limits<std::int64_t>::min();
      std::string day_text;
      for (const auto& s : h.samples) {
        auto utc = to_utc(s.time, offset);
        auto secs = utc.time_since_epoch().count();
        auto day = secs >= 0 ? secs / kSecondsPerDay : (secs - kSecondsPerDay + 1) / kSecondsPerDay;
        if (day != cached_day) {
          cached_day = day;
          day_text = format_date(LocalDate{std::chrono::days{day}});
        }
        auto tod = secs - day * kSecondsPerDay;
        char t[16];
        std::snprintf(t, sizeof t, "T%02d:%02d:%02dZ,", static_cast<int>(tod / 3600),
                      static_cast<int>(tod / 60 % 60), static_cast<int>(tod % 60));
        buf += id;
        buf += ',';
        buf += day_text;
        buf += t;
        csv::append_fixed(buf, s.voltage_v, 2);
        buf += ',';
        csv::append_fixed(buf, s.current_a, 4);
        buf += '\n';
      }
      telemetry << buf;
      buf.clear();
      for (std::size_t d = 0; d < h.profiles.size(); ++d) {
        buf += id;
        buf += ',';
        buf += format_date(h.profiles[d].date);
        buf += ',';
        buf += h.truth[d] ? archetype_name(*h.truth[d]) : std::string_view("economic_outage");
        buf += '\n';
      }
      truth << buf;
      credit.insert(credit.end(), h.credit.begin(), h.credit.end());
      meta.emplace(id, h.meta);
    }
  }
  if (!telemetry || !truth) throw DataError("write failed in " + out_dir.string());
  write_credit_csv(out_dir / "credit.csv", credit);
  write_meta_csv(out_dir / "meta.csv", meta);
}

}  // namespace loadlab::synth
