#include "loadlab/loadlab.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "loadlab/cluster.hpp"
#include "loadlab/dtw.hpp"
#include "loadlab/error.hpp"
#include "loadlab/pipeline.hpp"

struct loadlab_context {
  unsigned threads = 0;
  std::string last_error;
};

struct loadlab_matrix {
  loadlab::DistanceMatrix d;
};

struct loadlab_model {
  loadlab::ClusterModel m;
};

namespace {

using loadlab::pipeline::Json;

template <class Fn>
loadlab_status guarded(loadlab_context* ctx, Fn&& fn) {
  if (!ctx) return LOADLAB_ERR_CONFIG;
  ctx->last_error.clear();
  try {
    return fn();
  } catch (const loadlab::ConfigError& e) {
    ctx->last_error = e.what();
    return LOADLAB_ERR_CONFIG;
  } catch (const loadlab::DataError& e) {
    ctx->last_error = e.what();
    return LOADLAB_ERR_DATA;
  } catch (const nlohmann::json::parse_error& e) {
    ctx->last_error = std::string("invalid JSON: ") + e.what();
    return LOADLAB_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    ctx->last_error = "out of memory";
    return LOADLAB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    ctx->last_error = e.what();
    return LOADLAB_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Json parse_or_empty(const char* text) {
  if (!text || !*text) return Json::object();
  return Json::parse(text);
}

}  // namespace

extern "C" {

const char* loadlab_version(void) { return loadlab::pipeline::kVersion; }

loadlab_context* loadlab_context_create(void) { return new (std::nothrow) loadlab_context(); }

void loadlab_context_destroy(loadlab_context* ctx) { delete ctx; }

void loadlab_context_set_threads(loadlab_context* ctx, unsigned threads) {
  if (ctx) ctx->threads = threads;
}

void loadlab_set_log_level(int level) {
  loadlab::pipeline::set_log_level(level <= 0 ? loadlab::pipeline::LogLevel::Quiet
                                              : loadlab::pipeline::LogLevel::Info);
}

const char* loadlab_last_error(const loadlab_context* ctx) {
  return ctx ? ctx->last_error.c_str() : "null context";
}

loadlab_status loadlab_dtw_distance(loadlab_context* ctx, const double* x, size_t nx,
                                    const double* y, size_t ny, double* out) {
  return guarded(ctx, [&] {
    if (!x || !y || !out) throw loadlab::ConfigError("null argument");
    *out = loadlab::dtw_distance({x, nx}, {y, ny});
    return LOADLAB_OK;
  });
}

loadlab_status loadlab_matrix_from_profiles(loadlab_context* ctx, const double* hours,
                                            size_t count, loadlab_matrix** out) {
  return guarded(ctx, [&] {
    if (!hours || !out) throw loadlab::ConfigError("null argument");
    std::vector<loadlab::HourlyValues> series(count);
    for (size_t i = 0; i < count; ++i)
      std::copy(hours + i * loadlab::kHoursPerDay, hours + (i + 1) * loadlab::kHoursPerDay,
                series[i].begin());
    *out = new loadlab_matrix{loadlab::distance_matrix(series, ctx->threads)};
    return LOADLAB_OK;
  });
}

loadlab_status loadlab_matrix_load(loadlab_context* ctx, const char* path, loadlab_matrix** out) {
  return guarded(ctx, [&] {
    if (!path || !out) throw loadlab::ConfigError("null argument");
    *out = new loadlab_matrix{loadlab::load_matrix(path)};
    return LOADLAB_OK;
  });
}

loadlab_status loadlab_matrix_save(loadlab_context* ctx, const loadlab_matrix* m, const char* path) {
  return guarded(ctx, [&] {
    if (!m || !path) throw loadlab::ConfigError("null argument");
    loadlab::save_matrix(path, m->d);
    return LOADLAB_OK;
  });
}

size_t loadlab_matrix_size(const loadlab_matrix* m) { return m ? m->d.size() : 0; }

double loadlab_matrix_get(const loadlab_matrix* m, size_t i, size_t j) {
  if (!m || i >= m->d.size() || j >= m->d.size()) return std::numeric_limits<double>::quiet_NaN();
  return m->d(i, j);
}

void loadlab_matrix_destroy(loadlab_matrix* m) { delete m; }

loadlab_status loadlab_model_solve(loadlab_context* ctx, const loadlab_matrix* m, size_t k,
                                   const char* solver, double time_limit, uint64_t seed,
                                   loadlab_model** out) {
  return guarded(ctx, [&] {
    if (!m || !out || !solver) throw loadlab::ConfigError("null argument");
    if (k < 1 || k > m->d.size()) throw loadlab::ConfigError("k must lie in [1, p]");
    std::string name = solver;
    loadlab::ClusterModel model;
    if (name == "exact") {
      if (!(time_limit > 0)) throw loadlab::ConfigError("time_limit must be positive");
      model = loadlab::solve_exact(m->d, k, {time_limit, ctx->threads});
    } else if (name == "pam") {
      model = loadlab::solve_pam(m->d, k, seed);
    } else {
      throw loadlab::ConfigError("solver must be 'exact' or 'pam'");
    }
    const bool timeout = name == "exact" && !model.proven_optimal;
    *out = new loadlab_model{std::move(model)};
    if (timeout) ctx->last_error = "time limit reached without an optimality proof";
    return timeout ? LOADLAB_ERR_TIMEOUT : LOADLAB_OK;
  });
}

size_t loadlab_model_k(const loadlab_model* model) { return model ? model->m.k : 0; }
size_t loadlab_model_size(const loadlab_model* model) { return model ? model->m.labels.size() : 0; }

size_t loadlab_model_medoid(const loadlab_model* model, size_t i) {
  return model && i < model->m.medoids.size() ? model->m.medoids[i] : SIZE_MAX;
}

size_t loadlab_model_label(const loadlab_model* model, size_t member) {
  return model && member < model->m.labels.size() ? model->m.labels[member] : SIZE_MAX;
}

double loadlab_model_total_cost(const loadlab_model* model) {
  return model ? model->m.total_cost : std::numeric_limits<double>::quiet_NaN();
}

loadlab_status loadlab_model_silhouette(loadlab_context* ctx, loadlab_model* model,
                                        const loadlab_matrix* m, double* out) {
  return guarded(ctx, [&] {
    if (!model || !m || !out) throw loadlab::ConfigError("null argument");
    if (model->m.labels.size() != m->d.size())
      throw loadlab::ConfigError("model and matrix sizes differ");
    model->m.silhouette = loadlab::silhouette(m->d, model->m.labels, ctx->threads);
    *out = model->m.silhouette;
    return LOADLAB_OK;
  });
}

int loadlab_model_proven_optimal(const loadlab_model* model) {
  return model && model->m.proven_optimal ? 1 : 0;
}

double loadlab_model_gap(const loadlab_model* model) { return model ? model->m.gap : 0.0; }

void loadlab_model_destroy(loadlab_model* model) { delete model; }

loadlab_status loadlab_stage(loadlab_context* ctx, const char* stage, const char* options_json,
                             char** report_json) {
  namespace p = loadlab::pipeline;
  return guarded(ctx, [&] {
    if (!stage) throw loadlab::ConfigError("null stage name");
    Json options = parse_or_empty(options_json);
    std::string name = stage;
    Json report;
    loadlab_status status = LOADLAB_OK;
    try {
      if (name == "synth") report = p::run_synth(options, ctx->threads);
      else if (name == "ingest") report = p::run_ingest(options, ctx->threads);
      else if (name == "sample") report = p::run_sample(options, ctx->threads);
      else if (name == "distances") report = p::run_distances(options, ctx->threads);
      else if (name == "cluster") report = p::run_cluster(options, ctx->threads);
      else if (name == "assign") report = p::run_assign(options, ctx->threads);
      else if (name == "analyze") report = p::run_analyze(options, ctx->threads);
      else throw loadlab::ConfigError("unknown stage '" + name + "'");
    } catch (p::SolverTimeout& t) {
      report = std::move(t.result);
      ctx->last_error = "stage cluster: time limit reached without an optimality proof";
      status = LOADLAB_ERR_TIMEOUT;
    }
    if (report_json) *report_json = dup_string(report.dump(2));
    return status;
  });
}

loadlab_status loadlab_run(loadlab_context* ctx, const char* config_json, int force,
                           char** manifest_json) {
  namespace p = loadlab::pipeline;
  return guarded(ctx, [&] {
    Json config = parse_or_empty(config_json);
    Json manifest;
    loadlab_status status = LOADLAB_OK;
    try {
      manifest = p::run_pipeline(config, {force != 0, ctx->threads});
    } catch (p::SolverTimeout& t) {
      manifest = std::move(t.result);
      ctx->last_error = "stage cluster: time limit reached without an optimality proof";
      status = LOADLAB_ERR_TIMEOUT;
    }
    if (manifest_json) *manifest_json = dup_string(manifest.dump(2));
    return status;
  });
}

loadlab_status loadlab_resolve_config(loadlab_context* ctx, const char* config_json, char** out_json) {
  return guarded(ctx, [&] {
    if (!out_json) throw loadlab::ConfigError("null argument");
    *out_json = dup_string(loadlab::pipeline::resolve_config(parse_or_empty(config_json)).dump(2));
    return LOADLAB_OK;
  });
}

void loadlab_string_free(char* s) { std::free(s); }

}  // extern "C"
