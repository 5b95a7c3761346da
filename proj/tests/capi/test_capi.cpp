// Exercises the shared library through its C header only.
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "loadlab/loadlab.h"
#include "support/temp_dir.hpp"

using loadlab::testing::TempDir;

namespace {

struct Context {
  loadlab_context* ctx = loadlab_context_create();
  ~Context() { loadlab_context_destroy(ctx); }
};

std::vector<double> profiles(std::size_t count) {
  std::vector<double> out(count * 24, 0.5);
  for (std::size_t p = 0; p < count; ++p) {
    double scale = p < count / 2 ? 2.0 : 20.0;
    for (std::size_t h = 18; h < 22; ++h) out[p * 24 + h] = scale + static_cast<double>(p % 3);
  }
  return out;
}

}  // namespace

TEST_SUITE("c api") {

TEST_CASE("version and dtw") {
  Context c;
  loadlab_set_log_level(0);
  CHECK(std::strlen(loadlab_version()) > 0);
  double x[] = {0, 2, 3}, y[] = {0, 3}, d = -1;
  CHECK(loadlab_dtw_distance(c.ctx, x, 3, y, 2, &d) == LOADLAB_OK);
  CHECK(d == 1.0);
  CHECK(loadlab_dtw_distance(c.ctx, x, 0, y, 2, &d) == LOADLAB_ERR_DATA);
  CHECK(std::strlen(loadlab_last_error(c.ctx)) > 0);
}

TEST_CASE("matrix, solve and silhouette") {
  Context c;
  loadlab_context_set_threads(c.ctx, 2);
  auto hours = profiles(12);
  loadlab_matrix* m = nullptr;
  REQUIRE(loadlab_matrix_from_profiles(c.ctx, hours.data(), 12, &m) == LOADLAB_OK);
  CHECK(loadlab_matrix_size(m) == 12);
  CHECK(loadlab_matrix_get(m, 3, 3) == 0.0);
  CHECK(loadlab_matrix_get(m, 2, 9) == loadlab_matrix_get(m, 9, 2));

  loadlab_model* model = nullptr;
  REQUIRE(loadlab_model_solve(c.ctx, m, 2, "exact", 60.0, 0, &model) == LOADLAB_OK);
  CHECK(loadlab_model_k(model) == 2);
  CHECK(loadlab_model_size(model) == 12);
  CHECK(loadlab_model_proven_optimal(model) == 1);
  CHECK(loadlab_model_gap(model) == 0.0);
  double s = 0.0;
  CHECK(loadlab_model_silhouette(c.ctx, model, m, &s) == LOADLAB_OK);
  CHECK(s > 0.5);
  CHECK(loadlab_model_label(model, 0) != loadlab_model_label(model, 11));

  loadlab_model* pam = nullptr;
  REQUIRE(loadlab_model_solve(c.ctx, m, 2, "pam", 0.0, 7, &pam) == LOADLAB_OK);
  CHECK(loadlab_model_total_cost(pam) >= loadlab_model_total_cost(model));
  loadlab_model_destroy(pam);

  loadlab_model* bad = nullptr;
  CHECK(loadlab_model_solve(c.ctx, m, 13, "exact", 60.0, 0, &bad) == LOADLAB_ERR_CONFIG);
  CHECK(loadlab_model_solve(c.ctx, m, 2, "milp", 60.0, 0, &bad) == LOADLAB_ERR_CONFIG);
  CHECK(bad == nullptr);

  TempDir dir;
  auto path = (dir / "m.bin").string();
  CHECK(loadlab_matrix_save(c.ctx, m, path.c_str()) == LOADLAB_OK);
  loadlab_matrix* back = nullptr;
  REQUIRE(loadlab_matrix_load(c.ctx, path.c_str(), &back) == LOADLAB_OK);
  CHECK(loadlab_matrix_get(back, 4, 10) == loadlab_matrix_get(m, 4, 10));
  CHECK(loadlab_matrix_load(c.ctx, (dir / "none.bin").string().c_str(), &back) == LOADLAB_ERR_DATA);

  loadlab_matrix_destroy(back);
  loadlab_model_destroy(model);
  loadlab_matrix_destroy(m);
}

TEST_CASE("config and stages") {
  Context c;
  char* cfg = nullptr;
  REQUIRE(loadlab_resolve_config(c.ctx, nullptr, &cfg) == LOADLAB_OK);
  CHECK(std::string(cfg).find("\"k_max\"") != std::string::npos);
  loadlab_string_free(cfg);
  CHECK(loadlab_resolve_config(c.ctx, "{\"nope\": 1}", &cfg) == LOADLAB_ERR_CONFIG);
  CHECK(loadlab_resolve_config(c.ctx, "{not json", &cfg) == LOADLAB_ERR_CONFIG);

  TempDir dir;
  std::string opts = "{\"households\": 3, \"days\": 5, \"seed\": 2, \"out_dir\": \"" +
                     (dir / "synth").string() + "\"}";
  char* report = nullptr;
  CHECK(loadlab_stage(c.ctx, "synth", opts.c_str(), &report) == LOADLAB_OK);
  REQUIRE(report != nullptr);
  loadlab_string_free(report);
  CHECK(loadlab_stage(c.ctx, "nonsense", "{}", nullptr) == LOADLAB_ERR_CONFIG);
}

}  // TEST_SUITE
