// Command-line front end. Every subcommand maps onto a C API call.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "loadlab/loadlab.h"

namespace {

using Json = nlohmann::ordered_json;

struct Context {
  loadlab_context* ctx = loadlab_context_create();
  ~Context() { loadlab_context_destroy(ctx); }
};

int report(loadlab_context* ctx, loadlab_status status, char* text) {
  if (text) {
    std::cout << text << '\n';
    loadlab_string_free(text);
  }
  if (status != LOADLAB_OK) std::cerr << "loadlab: " << loadlab_last_error(ctx) << '\n';
  return static_cast<int>(status);
}

int run_stage(loadlab_context* ctx, const char* stage, const Json& options) {
  char* text = nullptr;
  loadlab_status status = loadlab_stage(ctx, stage, options.dump().c_str(), &text);
  return report(ctx, status, text);
}

void set_if(Json& j, const char* key, const std::string& value) {
  if (!value.empty()) j[key] = value;
}

unsigned threads_from_env() {
  const char* env = std::getenv("LOADLAB_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0') {
    std::cerr << "loadlab: ignoring invalid LOADLAB_THREADS='" << env << "'\n";
    return 0;
  }
  return static_cast<unsigned>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Household load-profile pipeline: resampling, sampling, DTW, k-medoids, analytics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(loadlab_version()));
  int threads = -1;
  bool quiet = false;
  app.add_option("--threads", threads, "Worker threads (0 = all cores; default LOADLAB_THREADS)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet", quiet, "Suppress structured log lines on stderr");

  Json opts = Json::object();
  std::string s1, s2, s3, s4, s5;
  long long households = 200, days = 730, seed = 1;
  std::string scenario = "paper-like";

  auto* synth = app.add_subcommand("synth", "Generate a synthetic fleet");
  synth->add_option("--households", households)->capture_default_str();
  synth->add_option("--days", days)->capture_default_str();
  synth->add_option("--scenario", scenario, "clean | paper-like")->capture_default_str();
  synth->add_option("--seed", seed)->capture_default_str();
  synth->add_option("--out-dir", s1)->required();

  bool strict = false;
  long long max_hold = 600;
  auto* ingest = app.add_subcommand("ingest", "Integrate telemetry into daily hourly-energy profiles");
  ingest->add_option("--telemetry", s1)->required();
  ingest->add_option("--meta", s2)->required();
  ingest->add_option("--credit", s3);
  ingest->add_option("--out-dir", s4)->required();
  ingest->add_flag("--strict", strict, "Fail on the first malformed row");
  ingest->add_option("--max-hold-seconds", max_hold)->capture_default_str();

  long long per_household = 10, target = 2000, bins = 10;
  auto* sample = app.add_subcommand("sample", "Two-stage stratified selection of profile keys");
  sample->add_option("--profiles", s1)->required();
  sample->add_option("--out", s2)->required();
  sample->add_option("--days-per-household", per_household)->capture_default_str();
  sample->add_option("--stage2-target", target)->capture_default_str();
  sample->add_option("--bins", bins)->capture_default_str();
  sample->add_option("--seed", seed)->capture_default_str();

  bool export_csv = false;
  auto* distances = app.add_subcommand("distances", "Pairwise DTW distance matrix");
  distances->add_option("--profiles", s1)->required();
  distances->add_option("--keys", s2, "Profile keys to include (default: all complete profiles)");
  distances->add_option("--out", s3)->required();
  distances->add_flag("--export-csv", export_csv);

  long long k = 0, restarts = 5;
  double time_limit = 600.0;
  std::string solver = "exact";
  auto* cluster = app.add_subcommand("cluster", "k-medoids clustering of a distance matrix");
  cluster->add_option("--distances", s1)->required();
  cluster->add_option("--out", s2)->required();
  auto* k_opt = cluster->add_option("--k", k);
  auto* sweep_opt = cluster->add_option("--k-sweep", s3, "Range such as 2:8");
  k_opt->excludes(sweep_opt);
  cluster->add_option("--solver", solver, "exact | pam")->capture_default_str();
  cluster->add_option("--time-limit", time_limit, "Seconds per solve")->capture_default_str();
  cluster->add_option("--seed", seed)->capture_default_str();
  cluster->add_option("--pam-restarts", restarts)->capture_default_str();

  auto* assign = app.add_subcommand("assign", "Label every complete profile with its nearest medoid");
  assign->add_option("--profiles", s1)->required();
  assign->add_option("--model", s2)->required();
  assign->add_option("--out", s3)->required();

  bool no_plots = false;
  double appliance_threshold = 50.0, ur_high = 0.9, ur_low = 0.5;
  auto* analyze = app.add_subcommand("analyze", "Tables, trends and plots");
  analyze->add_option("--labels", s1)->required();
  analyze->add_option("--profiles", s2)->required();
  analyze->add_option("--credit", s3)->required();
  analyze->add_option("--meta", s4)->required();
  analyze->add_option("--subset", s5, "Clustering subset keys for the subset columns");
  std::string out_dir;
  analyze->add_option("--out-dir", out_dir)->required();
  analyze->add_flag("--no-plots", no_plots);
  analyze->add_option("--appliance-threshold-w", appliance_threshold)->capture_default_str();
  analyze->add_option("--ur-high", ur_high)->capture_default_str();
  analyze->add_option("--ur-low", ur_low)->capture_default_str();

  bool print_config = false, force = false;
  auto* run = app.add_subcommand("run", "Run the whole pipeline from a JSON configuration");
  run->add_option("--config", s1, "JSON configuration (missing keys take defaults)");
  run->add_flag("--print-config", print_config, "Print the resolved configuration and exit");
  run->add_flag("--force", force, "Recompute stale intermediates instead of refusing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return LOADLAB_ERR_CONFIG;
  }

  loadlab_set_log_level(quiet ? 0 : 1);
  Context holder;
  loadlab_context* ctx = holder.ctx;
  if (!ctx) return LOADLAB_ERR_INTERNAL;
  loadlab_context_set_threads(ctx, threads >= 0 ? static_cast<unsigned>(threads) : threads_from_env());

  if (synth->parsed()) {
    opts = {{"households", households}, {"days", days}, {"scenario", scenario},
            {"seed", seed}, {"out_dir", s1}};
    return run_stage(ctx, "synth", opts);
  }
  if (ingest->parsed()) {
    opts = {{"telemetry", s1}, {"meta", s2}, {"out_dir", s4}, {"strict", strict},
            {"max_hold_seconds", max_hold}};
    set_if(opts, "credit", s3);
    return run_stage(ctx, "ingest", opts);
  }
  if (sample->parsed()) {
    opts = {{"profiles", s1}, {"out", s2}, {"days_per_household", per_household},
            {"stage2_target", target}, {"bins", bins}, {"seed", seed}};
    return run_stage(ctx, "sample", opts);
  }
  if (distances->parsed()) {
    opts = {{"profiles", s1}, {"out", s3}, {"export_csv", export_csv}};
    set_if(opts, "keys", s2);
    return run_stage(ctx, "distances", opts);
  }
  if (cluster->parsed()) {
    opts = {{"distances", s1}, {"out", s2}, {"solver", solver}, {"time_limit", time_limit},
            {"seed", seed}, {"pam_restarts", restarts}};
    if (k_opt->count()) opts["k"] = k;
    set_if(opts, "k_sweep", s3);
    return run_stage(ctx, "cluster", opts);
  }
  if (assign->parsed()) {
    opts = {{"profiles", s1}, {"model", s2}, {"out", s3}};
    return run_stage(ctx, "assign", opts);
  }
  if (analyze->parsed()) {
    opts = {{"labels", s1}, {"profiles", s2}, {"credit", s3}, {"meta", s4}, {"out_dir", out_dir},
            {"plots", !no_plots}, {"appliance_threshold_w", appliance_threshold},
            {"ur_high", ur_high}, {"ur_low", ur_low}};
    set_if(opts, "subset", s5);
    return run_stage(ctx, "analyze", opts);
  }

  // run
  std::string config_text;
  if (!s1.empty()) {
    std::ifstream in(s1);
    if (!in) {
      std::cerr << "loadlab: cannot read config " << s1 << '\n';
      return LOADLAB_ERR_CONFIG;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    config_text = buf.str();
  }
  char* text = nullptr;
  if (print_config) {
    loadlab_status status = loadlab_resolve_config(ctx, config_text.c_str(), &text);
    return report(ctx, status, text);
  }
  loadlab_status status = loadlab_run(ctx, config_text.c_str(), force ? 1 : 0, &text);
  if (text) loadlab_string_free(text);  // the manifest is also written to the run directory
  if (status != LOADLAB_OK) std::cerr << "loadlab: " << loadlab_last_error(ctx) << '\n';
  return static_cast<int>(status);
}
