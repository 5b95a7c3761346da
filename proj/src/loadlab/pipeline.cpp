#include "loadlab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>

#include "loadlab/analytics.hpp"
#include "loadlab/assign.hpp"
#include "loadlab/cluster.hpp"
#include "loadlab/csv.hpp"
#include "loadlab/dtw.hpp"
#include "loadlab/error.hpp"
#include "loadlab/ingest.hpp"
#include "loadlab/parallel.hpp"
#include "loadlab/random.hpp"
#include "loadlab/sampling.hpp"
#include "loadlab/synth.hpp"

namespace loadlab::pipeline {
namespace fs = std::filesystem;

namespace {

std::atomic<LogLevel> g_log_level{LogLevel::Info};
std::mutex g_log_mutex;

/// Typed access to a stage's option object.
class Options {
 public:
  Options(const Json& j, std::string stage, std::initializer_list<const char*> allowed)
      : j_(j), stage_(std::move(stage)) {
    if (!j_.is_object()) throw ConfigError(stage_ + ": options must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j_.items())
      if (!ok.count(key)) throw ConfigError(stage_ + ": unknown option '" + key + "'");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <class T>
  T get(const char* key, T fallback) const {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(stage_ + ": option '" + key + "' has the wrong type");
    }
  }

  std::string required(const char* key) const {
    std::string v = get<std::string>(key, "");
    if (v.empty()) throw ConfigError(stage_ + ": option '" + key + "' is required");
    return v;
  }

  std::optional<std::string> optional_path(const char* key) const {
    std::string v = get<std::string>(key, "");
    if (v.empty()) return std::nullopt;
    return v;
  }

  std::size_t positive(const char* key, std::size_t fallback) const {
    long long v = get<long long>(key, static_cast<long long>(fallback));
    if (v < 1) throw ConfigError(stage_ + ": option '" + std::string(key) + "' must be >= 1");
    return static_cast<std::size_t>(v);
  }

 private:
  const Json& j_;
  std::string stage_;
};

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path))
    throw DataError(std::string(what) + " not found: " + path.string());
}

fs::path sidecar_of(const fs::path& matrix) { return fs::path(matrix.string() + ".profiles.csv"); }

std::string now_iso() {
  auto t = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  return format_utc_timestamp(t);
}

AnalyticsConfig analytics_config(const Options& o) {
  AnalyticsConfig c;
  c.appliance_threshold_w = o.get("appliance_threshold_w", c.appliance_threshold_w);
  c.ur_high_threshold = o.get("ur_high", c.ur_high_threshold);
  c.ur_low_threshold = o.get("ur_low", c.ur_low_threshold);
  c.daytime_start_hour = o.get("daytime_start_hour", c.daytime_start_hour);
  c.daytime_end_hour = o.get("daytime_end_hour", c.daytime_end_hour);
  c.peak_min_wh = o.get("peak_min_wh", c.peak_min_wh);
  c.peak_min_separation_hours = o.get("peak_min_separation_hours", c.peak_min_separation_hours);
  c.min_households = o.positive("min_households", c.min_households);
  c.smoothing_window_days = o.get("smoothing_window_days", c.smoothing_window_days);
  if (c.daytime_start_hour < 0 || c.daytime_end_hour > 24 ||
      c.daytime_start_hour >= c.daytime_end_hour)
    throw ConfigError("analyze: daytime window must satisfy 0 <= start < end <= 24");
  if (c.ur_low_threshold > c.ur_high_threshold)
    throw ConfigError("analyze: ur_low must not exceed ur_high");
  return c;
}

Json model_json(const ClusterModel& m, const std::vector<DailyProfile>& members) {
  Json j;
  j["k"] = m.k;
  Json keys = Json::array(), shapes = Json::array();
  for (std::size_t idx : m.medoids) {
    keys.push_back({{"household_id", members[idx].household_id},
                    {"date", format_date(members[idx].date)}});
    shapes.push_back(members[idx].hours);
  }
  j["medoids"] = keys;
  j["medoid_indices"] = m.medoids;
  j["medoid_profiles"] = shapes;
  j["labels"] = m.labels;
  j["total_cost"] = m.total_cost;
  j["silhouette"] = std::isnan(m.silhouette) ? Json(nullptr) : Json(m.silhouette);
  j["proven_optimal"] = m.proven_optimal;
  j["gap"] = m.gap;
  j["solver"] = m.solver;
  return j;
}

}  // namespace

void set_log_level(LogLevel level) { g_log_level = level; }

void log_event(std::string_view stage, std::string_view message, const Json& fields) {
  if (g_log_level.load() == LogLevel::Quiet) return;
  Json line;
  line["time"] = now_iso();
  line["stage"] = stage;
  line["msg"] = message;
  for (const auto& [k, v] : fields.items()) line[k] = v;
  std::lock_guard lock(g_log_mutex);
  std::cerr << line.dump() << '\n';
}

std::string hash_text(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
  return buf;
}

std::string hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::string buf(1 << 16, '\0');
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

Json run_synth(const Json& options, unsigned threads) {
  Options o(options, "synth", {"households", "days", "scenario", "seed", "out_dir"});
  synth::Scenario scenario;
  std::string name = o.get<std::string>("scenario", "paper-like");
  if (!synth::parse_scenario(name, scenario))
    throw ConfigError("synth: scenario must be 'clean' or 'paper-like', got '" + name + "'");
  long long days = o.get<long long>("days", 730);
  if (days < 1) throw ConfigError("synth: days must be >= 1");
  auto params = synth::FleetParams::for_scenario(scenario, o.positive("households", 200),
                                                 static_cast<int>(days),
                                                 o.get<std::uint64_t>("seed", 1));
  fs::path out = o.required("out_dir");
  synth::write_fleet(params, out, threads);
  Json report{{"households", params.households}, {"days", params.horizon_days},
              {"scenario", name}, {"seed", params.seed}};
  log_event("synth", "fleet written", report);
  return report;
}

Json run_ingest(const Json& options, unsigned threads) {
  Options o(options, "ingest",
            {"telemetry", "meta", "credit", "out_dir", "strict", "max_hold_seconds"});
  fs::path telemetry = o.required("telemetry"), meta_path = o.required("meta");
  fs::path out = o.required("out_dir");
  require_file(telemetry, "telemetry file");
  require_file(meta_path, "meta file");
  IntegrationOptions integ;
  integ.max_hold_seconds = o.get<long long>("max_hold_seconds", integ.max_hold_seconds);
  if (integ.max_hold_seconds < 1) throw ConfigError("ingest: max_hold_seconds must be >= 1");
  const ParseMode mode = o.get("strict", false) ? ParseMode::Strict : ParseMode::Collect;

  MetaTable meta = parse_meta(meta_path);
  TelemetryData data = parse_telemetry(telemetry, meta, mode);
  std::vector<std::vector<DailyProfile>> per_household(data.households.size());
  parallel_for(data.households.size(), threads, [&](std::size_t i) {
    const auto& h = data.households[i];
    HourlyEnergySeries series = integrate_hourly(h.samples, integ);
    series.household_id = h.household_id;
    series.activation_date = meta.at(h.household_id).activation_date;
    per_household[i] = slice_daily(series);
  });
  std::vector<DailyProfile> profiles;
  for (auto& v : per_household)
    profiles.insert(profiles.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  fs::create_directories(out);
  write_profiles_csv(out / "profiles.csv", profiles);

  std::size_t errors = data.errors.size();
  if (auto credit = o.optional_path("credit")) {
    require_file(*credit, "credit file");
    CreditData c = parse_credit(*credit, mode);
    write_credit_csv(out / "credit_filled.csv", c.records);
    for (auto& e : c.errors) e.message = "credit: " + e.message;
    data.errors.insert(data.errors.end(), c.errors.begin(), c.errors.end());
    errors = data.errors.size();
  }
  {
    auto f = csv::open_output(out / "ingest_errors.csv");
    f << "line,message\n";
    for (const auto& e : data.errors) {
      std::string msg = e.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      f << e.line << ',' << msg << '\n';
    }
  }
  std::size_t complete = static_cast<std::size_t>(
      std::count_if(profiles.begin(), profiles.end(), [](const DailyProfile& p) { return p.complete; }));
  Json report{{"households", data.households.size()}, {"profiles", profiles.size()},
              {"complete_profiles", complete}, {"row_errors", errors}};
  log_event("ingest", "profiles written", report);
  return report;
}

Json run_sample(const Json& options, unsigned) {
  Options o(options, "sample",
            {"profiles", "out", "days_per_household", "stage2_target", "bins", "seed", "clamp_target"});
  fs::path in = o.required("profiles"), out = o.required("out");
  require_file(in, "profiles file");
  const std::size_t days = o.positive("days_per_household", 10);
  std::size_t target = o.positive("stage2_target", 2000);
  const std::size_t bins = o.positive("bins", 10);
  const auto seed = o.get<std::uint64_t>("seed", 1);
  const bool clamp = o.get("clamp_target", false);

  auto profiles = read_profiles_csv(in);
  std::size_t complete = static_cast<std::size_t>(
      std::count_if(profiles.begin(), profiles.end(), [](const DailyProfile& p) { return p.complete; }));
  if (complete == 0) throw DataError("sample: no complete profiles in " + in.string());
  if (clamp && target > complete) target = complete;
  auto plan = build_plan(profiles, bins, target, seed);
  auto first = stage_one(profiles, days, plan, seed);
  std::vector<DailyProfile> subset;
  subset.reserve(first.size());
  for (std::size_t i : first) subset.push_back(profiles[i]);
  if (clamp && target > subset.size()) {
    log_event("sample", "stage-two target clamped to the stage-one subset size",
              {{"requested", target}, {"subset", subset.size()}});
    target = subset.size();
  }
  auto second = stage_two(subset, plan, target, seed);
  std::vector<ProfileKey> keys;
  keys.reserve(second.size());
  for (std::size_t i : second) keys.push_back(subset[i].key());
  write_keys_csv(out, keys);
  Json report{{"population", complete}, {"stage_one", subset.size()}, {"selected", keys.size()},
              {"bins", plan.bin_count()}, {"seed", seed}};
  log_event("sample", "keys written", report);
  return report;
}

Json run_distances(const Json& options, unsigned threads) {
  Options o(options, "distances", {"profiles", "keys", "out", "export_csv"});
  fs::path in = o.required("profiles"), out = o.required("out");
  require_file(in, "profiles file");
  auto profiles = read_profiles_csv(in);
  std::vector<DailyProfile> members;
  if (auto keys_path = o.optional_path("keys")) {
    require_file(*keys_path, "keys file");
    auto keys = read_keys_csv(*keys_path);
    std::map<ProfileKey, const DailyProfile*> index;
    for (const auto& p : profiles) index[p.key()] = &p;
    for (const auto& k : keys) {
      auto it = index.find(k);
      if (it == index.end())
        throw DataError("distances: key " + k.household_id + "," + format_date(k.date) +
                        " not found in " + in.string());
      if (!it->second->complete)
        throw DataError("distances: profile " + k.household_id + "," + format_date(k.date) +
                        " is incomplete");
      members.push_back(*it->second);
    }
  } else {
    for (const auto& p : profiles)
      if (p.complete) members.push_back(p);
  }
  auto d = distance_matrix(members, threads);
  save_matrix(out, d);
  write_profiles_csv(sidecar_of(out), members);
  if (o.get("export_csv", false)) {
    fs::path csv_out = out;
    csv_out.replace_extension(".csv");
    export_matrix_csv(csv_out, d);
  }
  Json report{{"p", d.size()}, {"matrix", out.string()}};
  log_event("distances", "matrix written", report);
  return report;
}

Json run_cluster(const Json& options, unsigned threads) {
  Options o(options, "cluster", {"distances", "out", "k", "k_sweep", "select_k", "solver",
                                 "time_limit", "seed", "pam_restarts"});
  fs::path in = o.required("distances"), out = o.required("out");
  require_file(in, "distance matrix");
  require_file(sidecar_of(in), "profile sidecar of the distance matrix");
  const bool has_k = o.has("k"), has_sweep = o.has("k_sweep");
  if (has_k == has_sweep) throw ConfigError("cluster: give exactly one of k and k_sweep");
  std::string solver_name = o.get<std::string>("solver", "exact");
  const auto seed = o.get<std::uint64_t>("seed", 1);
  ExactOptions exact;
  exact.time_limit_seconds = o.get("time_limit", 600.0);
  exact.threads = threads;
  if (exact.time_limit_seconds <= 0) throw ConfigError("cluster: time_limit must be positive");

  std::unique_ptr<MedoidSolver> solver;
  if (solver_name == "exact")
    solver = std::make_unique<ExactSolver>(exact);
  else if (solver_name == "pam")
    solver = std::make_unique<PamSolver>(seed, o.positive("pam_restarts", 5));
  else
    throw ConfigError("cluster: solver must be 'exact' or 'pam', got '" + solver_name + "'");

  DistanceMatrix d = load_matrix(in);
  auto members = read_profiles_csv(sidecar_of(in));
  if (members.size() != d.size())
    throw DataError("cluster: sidecar has " + std::to_string(members.size()) +
                    " profiles but the matrix has p = " + std::to_string(d.size()));

  Json result;
  std::vector<ClusterModel> models;
  if (has_k) {
    const std::size_t k = o.positive("k", 5);
    if (k > d.size()) throw ConfigError("cluster: k exceeds the number of profiles");
    ClusterModel m = solver->solve(d, k);
    if (k >= 2 && k < d.size()) m.silhouette = silhouette(d, m.labels, threads);
    result = model_json(m, members);
    models.push_back(std::move(m));
  } else {
    std::string range = o.get<std::string>("k_sweep", "");
    std::size_t lo = 0, hi = 0;
    auto colon = range.find(':');
    long long a = 0, b = 0;
    if (colon == std::string::npos || !csv::parse_int(std::string_view(range).substr(0, colon), a) ||
        !csv::parse_int(std::string_view(range).substr(colon + 1), b) || a < 2 || b < a)
      throw ConfigError("cluster: k_sweep must look like 2:8 with 2 <= min <= max");
    lo = static_cast<std::size_t>(a);
    hi = static_cast<std::size_t>(b);
    if (hi >= d.size()) throw ConfigError("cluster: k_sweep maximum must be below the number of profiles");
    SweepResult sweep = k_sweep(d, lo, hi, *solver, threads);
    std::size_t chosen = sweep.best_k;
    if (o.has("select_k")) {
      long long s = o.get<long long>("select_k", 0);
      if (s > 0) chosen = static_cast<std::size_t>(s);
    }
    if (chosen < lo || chosen > hi) throw ConfigError("cluster: select_k outside the sweep range");
    result = model_json(sweep.models[chosen - lo], members);
    result["best_k"] = sweep.best_k;
    Json rows = Json::array();
    for (const auto& m : sweep.models)
      rows.push_back({{"k", m.k},
                      {"silhouette", std::isnan(m.silhouette) ? Json(nullptr) : Json(m.silhouette)},
                      {"total_cost", m.total_cost},
                      {"proven_optimal", m.proven_optimal},
                      {"gap", m.gap}});
    result["sweep"] = rows;
    models = std::move(sweep.models);
  }
  result["provenance"] = {{"version", kVersion}, {"seed", seed}, {"solver", solver_name},
                          {"distances", in.string()}, {"distances_hash", hash_file(in)}};
  {
    auto f = csv::open_output(out);
    f << result.dump(2) << '\n';
  }
  bool proven = solver_name != "exact" ||
                std::all_of(models.begin(), models.end(), [](const ClusterModel& m) { return m.proven_optimal; });
  Json report{{"k", result["k"]}, {"total_cost", result["total_cost"]},
              {"silhouette", result["silhouette"]}, {"proven_optimal", proven}};
  if (result.contains("best_k")) report["best_k"] = result["best_k"];
  log_event("cluster", "model written", report);
  if (!proven) throw SolverTimeout{report};
  return report;
}

Json run_assign(const Json& options, unsigned threads) {
  Options o(options, "assign", {"profiles", "model", "out"});
  fs::path in = o.required("profiles"), model_path = o.required("model"), out = o.required("out");
  require_file(in, "profiles file");
  require_file(model_path, "model file");
  Json model;
  try {
    std::ifstream f(model_path);
    model = Json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("assign: cannot parse model " + model_path.string() + ": " + e.what());
  }
  std::vector<HourlyValues> medoids;
  try {
    for (const auto& shape : model.at("medoid_profiles")) {
      auto v = shape.get<std::vector<double>>();
      if (v.size() != kHoursPerDay) throw DataError("assign: medoid profile must have 24 values");
      HourlyValues h{};
      std::copy(v.begin(), v.end(), h.begin());
      medoids.push_back(h);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("assign: model lacks medoid_profiles: ") + e.what());
  }
  if (medoids.empty()) throw DataError("assign: model has no medoids");
  auto profiles = read_profiles_csv(in);
  auto result = label_full_dataset(profiles, medoids, threads);
  write_labels_csv(out, result.labels);
  std::vector<std::size_t> counts(medoids.size(), 0);
  for (const auto& l : result.labels)
    if (l.cluster >= 0) ++counts[static_cast<std::size_t>(l.cluster)];
  Json report{{"profiles", profiles.size()}, {"unassigned", result.excluded_incomplete}, {"per_cluster", counts}};
  log_event("assign", "labels written", report);
  return report;
}

Json run_analyze(const Json& options, unsigned) {
  Options o(options, "analyze",
            {"labels", "profiles", "credit", "meta", "subset", "out_dir", "plots",
             "appliance_threshold_w", "ur_high", "ur_low", "daytime_start_hour", "daytime_end_hour",
             "peak_min_wh", "peak_min_separation_hours", "min_households", "smoothing_window_days"});
  AnalyticsConfig config = analytics_config(o);
  AnalysisInputs inputs;
  fs::path labels = o.required("labels"), profiles = o.required("profiles");
  fs::path credit = o.required("credit"), meta = o.required("meta");
  fs::path out = o.required("out_dir");
  for (const auto& [p, what] : {std::pair{labels, "labels file"}, {profiles, "profiles file"},
                                {credit, "credit file"}, {meta, "meta file"}})
    require_file(p, what);
  inputs.labels = read_labels_csv(labels);
  inputs.profiles = read_profiles_csv(profiles);
  inputs.credit = parse_credit(credit).records;
  inputs.meta = parse_meta(meta);
  if (auto subset = o.optional_path("subset")) {
    require_file(*subset, "subset file");
    inputs.subset = read_keys_csv(*subset);
  }
  AnalysisSummary s = run_analysis(inputs, config, out, o.get("plots", true));
  Json provenance{{"version", kVersion},
                  {"inputs", {{"labels", hash_file(labels)}, {"profiles", hash_file(profiles)},
                              {"credit", hash_file(credit)}, {"meta", hash_file(meta)}}}};
  {
    auto f = csv::open_output(out / "provenance.json");
    f << provenance.dump(2) << '\n';
  }
  Json report{{"peak_day", s.peak_day ? Json(*s.peak_day) : Json(nullptr)},
              {"decline_pct", s.decline_pct ? Json(*s.decline_pct) : Json(nullptr)},
              {"outage_days_relabeled", s.relabel.relabeled}};
  log_event("analyze", "tables written", report);
  return report;
}

Json default_config() {
  Json c;
  c["out_dir"] = "loadlab_run";
  c["seed"] = 1;
  c["threads"] = 0;
  c["inputs"] = {{"telemetry", ""}, {"meta", ""}, {"credit", ""}};
  c["synth"] = {{"households", 200}, {"days", 730}, {"scenario", "paper-like"}};
  c["ingest"] = {{"strict", false}, {"max_hold_seconds", 600}};
  c["sample"] = {{"days_per_household", 10}, {"stage2_target", 2000}, {"bins", 10}, {"clamp_target", true}};
  c["distances"] = {{"export_csv", false}};
  c["cluster"] = {{"k_min", 2}, {"k_max", 8}, {"k", 0}, {"solver", "exact"},
                  {"time_limit", 600.0}, {"pam_restarts", 5}};
  AnalyticsConfig a;
  c["analyze"] = {{"plots", true},
                  {"appliance_threshold_w", a.appliance_threshold_w},
                  {"ur_high", a.ur_high_threshold},
                  {"ur_low", a.ur_low_threshold},
                  {"daytime_start_hour", a.daytime_start_hour},
                  {"daytime_end_hour", a.daytime_end_hour},
                  {"peak_min_wh", a.peak_min_wh},
                  {"peak_min_separation_hours", a.peak_min_separation_hours},
                  {"min_households", a.min_households},
                  {"smoothing_window_days", a.smoothing_window_days}};
  return c;
}

namespace {

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return !(a.is_number_integer() && b.is_number_float());
  return a.type() == b.type();
}

void merge_into(Json& base, const Json& overrides, const std::string& where) {
  if (!overrides.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (const auto& [key, value] : overrides.items()) {
    std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw ConfigError("config: unknown key '" + path + "'");
    Json& slot = base[key];
    if (slot.is_object()) {
      merge_into(slot, value, path);
    } else {
      if (!same_kind(slot, value)) throw ConfigError("config: '" + path + "' has the wrong type");
      slot = value;
    }
  }
}

struct Stage {
  std::string name;
  Json params;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  std::function<Json()> run;
};

// Rethrows with the stage name prefixed, keeping the error category.
template <typename F>
auto in_stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const SolverTimeout&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError("stage " + name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError("stage " + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error("stage " + name + ": " + e.what());
  }
}

class Runner {
 public:
  Runner(const fs::path& dir, const Json& config, bool force) : dir_(dir), force_(force) {
    manifest_path_ = dir_ / "manifest.json";
    if (fs::is_regular_file(manifest_path_)) {
      try {
        std::ifstream f(manifest_path_);
        previous_ = Json::parse(f);
      } catch (const nlohmann::json::exception&) {
        previous_ = Json::object();
      }
    }
    manifest_["version"] = kVersion;
    manifest_["config_hash"] = hash_text(config.dump());
    manifest_["config"] = config;
    manifest_["seeds"] = {{"synth", config["seed"]}, {"sample", config["seed"]}, {"cluster", config["seed"]}};
    manifest_["stages"] = Json::array();
  }

  void execute(const Stage& stage) {
    std::string key_material = stage.params.dump();
    Json inputs = Json::object();
    for (const auto& p : stage.inputs) {
      std::string h = in_stage(stage.name, [&] { return hash_file(p); });
      inputs[p.string()] = h;
      key_material += '|' + p.string() + '=' + h;
    }
    const std::string key = hash_text(key_material);
    const Json* prev = find_previous(stage.name);
    bool any_output = false, all_outputs = true;
    for (const auto& p : stage.outputs) {
      bool exists = fs::exists(p);
      any_output |= exists;
      all_outputs &= exists;
    }

    if (all_outputs && prev && prev->value("key", "") == key && outputs_match(*prev, stage)) {
      Json entry = *prev;
      entry["skipped"] = true;
      record(entry);
      log_event(stage.name, "up to date, skipped");
      return;
    }
    if (any_output && !force_)
      throw DataError("stage " + stage.name +
                      ": stale intermediate (inputs, parameters or outputs changed since the "
                      "recorded run); rerun with --force");

    log_event(stage.name, "started");
    auto t0 = std::chrono::steady_clock::now();
    Json report;
    std::optional<SolverTimeout> timeout;
    try {
      report = in_stage(stage.name, stage.run);
    } catch (SolverTimeout& t) {
      timeout = std::move(t);
      report = timeout->result;
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Json outputs = Json::object();
    for (const auto& p : stage.outputs) outputs[p.string()] = hash_file(p);
    Json entry{{"name", stage.name}, {"key", key},     {"params", stage.params},
               {"inputs", inputs},   {"outputs", outputs}, {"seconds", seconds},
               {"report", report},   {"skipped", false}};
    record(entry);
    if (timeout) timed_out_ = true;
  }

  bool timed_out() const { return timed_out_; }
  const Json& manifest() const { return manifest_; }

 private:
  const Json* find_previous(const std::string& name) const {
    if (!previous_.contains("stages")) return nullptr;
    for (const auto& s : previous_["stages"])
      if (s.value("name", "") == name) return &s;
    return nullptr;
  }

  static bool outputs_match(const Json& prev, const Stage& stage) {
    if (!prev.contains("outputs")) return false;
    for (const auto& p : stage.outputs) {
      const auto& recorded = prev["outputs"];
      if (!recorded.contains(p.string()) || recorded[p.string()] != hash_file(p)) return false;
    }
    return true;
  }

  void record(const Json& entry) {
    manifest_["stages"].push_back(entry);
    manifest_["timed_out"] = timed_out_;
    auto f = csv::open_output(manifest_path_);
    f << manifest_.dump(2) << '\n';
  }

  fs::path dir_, manifest_path_;
  bool force_;
  Json previous_ = Json::object();
  Json manifest_;
  bool timed_out_ = false;
};

}  // namespace

Json resolve_config(const Json& config) {
  Json resolved = default_config();
  merge_into(resolved, config, "");
  return resolved;
}

Json run_pipeline(const Json& raw_config, const RunOptions& options) {
  const Json config = resolve_config(raw_config);
  const fs::path dir = config["out_dir"].get<std::string>();
  if (dir.empty()) throw ConfigError("config: out_dir must not be empty");
  long long cfg_threads = config["threads"].get<long long>();
  if (cfg_threads < 0) throw ConfigError("config: threads must be >= 0");
  const unsigned threads = options.threads ? options.threads : static_cast<unsigned>(cfg_threads);
  const auto seed = config["seed"].get<std::uint64_t>();
  fs::create_directories(dir);
  Runner runner(dir, config, options.force);

  fs::path telemetry = config["inputs"]["telemetry"].get<std::string>();
  fs::path meta = config["inputs"]["meta"].get<std::string>();
  fs::path credit = config["inputs"]["credit"].get<std::string>();
  if (telemetry.empty()) {
    const fs::path synth_dir = dir / "synth";
    Json params = config["synth"];
    params["seed"] = seed;
    params["out_dir"] = synth_dir.string();
    telemetry = synth_dir / "telemetry.csv";
    meta = synth_dir / "meta.csv";
    credit = synth_dir / "credit.csv";
    runner.execute({"synth", params, {},
                    {telemetry, meta, credit, synth_dir / "truth.csv"},
                    [=] { return run_synth(params, threads); }});
  } else if (meta.empty() || credit.empty()) {
    throw ConfigError("config: inputs.meta and inputs.credit are required with inputs.telemetry");
  }

  const fs::path ingest_dir = dir / "ingest";
  Json ingest = config["ingest"];
  ingest["telemetry"] = telemetry.string();
  ingest["meta"] = meta.string();
  ingest["credit"] = credit.string();
  ingest["out_dir"] = ingest_dir.string();
  const fs::path profiles = ingest_dir / "profiles.csv", credit_filled = ingest_dir / "credit_filled.csv";
  runner.execute({"ingest", ingest, {telemetry, meta, credit},
                  {profiles, credit_filled, ingest_dir / "ingest_errors.csv"},
                  [=] { return run_ingest(ingest, threads); }});

  const fs::path keys = dir / "sample" / "keys.csv";
  Json sample = config["sample"];
  sample["profiles"] = profiles.string();
  sample["out"] = keys.string();
  sample["seed"] = seed;
  runner.execute({"sample", sample, {profiles}, {keys}, [=] { return run_sample(sample, threads); }});

  const fs::path matrix = dir / "distances" / "dtw.bin";
  Json dist{{"profiles", profiles.string()}, {"keys", keys.string()}, {"out", matrix.string()},
            {"export_csv", config["distances"]["export_csv"]}};
  std::vector<fs::path> dist_outputs{matrix, sidecar_of(matrix)};
  if (dist["export_csv"].get<bool>()) dist_outputs.push_back(fs::path(matrix).replace_extension(".csv"));
  fs::create_directories(matrix.parent_path());
  runner.execute({"distances", dist, {profiles, keys}, dist_outputs,
                  [=] { return run_distances(dist, threads); }});

  const auto& cc = config["cluster"];
  const fs::path model = dir / "cluster" / "model.json";
  Json cluster{{"distances", matrix.string()},
               {"out", model.string()},
               {"k_sweep", std::to_string(cc["k_min"].get<long long>()) + ":" +
                               std::to_string(cc["k_max"].get<long long>())},
               {"select_k", cc["k"]},
               {"solver", cc["solver"]},
               {"time_limit", cc["time_limit"]},
               {"seed", seed},
               {"pam_restarts", cc["pam_restarts"]}};
  runner.execute({"cluster", cluster, {matrix, sidecar_of(matrix)}, {model},
                  [=] { return run_cluster(cluster, threads); }});

  const fs::path labels = dir / "assign" / "labels.csv";
  Json assign{{"profiles", profiles.string()}, {"model", model.string()}, {"out", labels.string()}};
  runner.execute({"assign", assign, {profiles, model}, {labels}, [=] { return run_assign(assign, threads); }});

  const fs::path analysis = dir / "analysis";
  Json analyze = config["analyze"];
  analyze["labels"] = labels.string();
  analyze["profiles"] = profiles.string();
  analyze["credit"] = credit_filled.string();
  analyze["meta"] = meta.string();
  analyze["subset"] = keys.string();
  analyze["out_dir"] = analysis.string();
  runner.execute({"analyze", analyze, {labels, profiles, credit_filled, meta, keys},
                  {analysis / "table1.csv", analysis / "table2.csv", analysis / "table3.csv",
                   analysis / "trend_consumption.csv", analysis / "trend_clusters.csv",
                   analysis / "ur_segments.csv", analysis / "summary.json"},
                  [=] { return run_analyze(analyze, threads); }});

  if (runner.timed_out()) throw SolverTimeout{runner.manifest()};
  return runner.manifest();
}

}  // namespace loadlab::pipeline
