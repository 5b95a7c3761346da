#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace loadlab::pipeline {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

/// Raised when the exact solver stops at its time limit without a proof
/// (CLI exit code 4). Outputs are still written.
struct SolverTimeout {
  Json result;
};

/// Structured log lines (one JSON object per line) on stderr.
enum class LogLevel { Quiet, Info, Debug };
void set_log_level(LogLevel level);
void log_event(std::string_view stage, std::string_view message, const Json& fields = Json::object());

/// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string hash_file(const std::filesystem::path& path);
std::string hash_text(std::string_view text);

// Each stage takes an option object, rejects unknown keys with ConfigError and
// returns a small JSON report. `threads` = 0 means all hardware threads.
Json run_synth(const Json& options, unsigned threads);
Json run_ingest(const Json& options, unsigned threads);
Json run_sample(const Json& options, unsigned threads);
Json run_distances(const Json& options, unsigned threads);
/// Throws SolverTimeout (carrying the report) when a model is not proven optimal.
Json run_cluster(const Json& options, unsigned threads);
Json run_assign(const Json& options, unsigned threads);
Json run_analyze(const Json& options, unsigned threads);

/// Full configuration with every default spelled out.
Json default_config();

/// Validates `config` against the defaults and fills missing keys.
Json resolve_config(const Json& config);

struct RunOptions {
  bool force = false;  ///< rerun stages whose persisted outputs are stale
  unsigned threads = 0;
};

/// ingest, sample, distances, cluster (k-sweep), assign and analyze, plus synth
/// when no telemetry is given. Stages whose inputs and parameters are unchanged
/// are skipped; a manifest records hashes, seeds and timings. Returns the
/// manifest. Throws SolverTimeout after completing all stages if the solver
/// timed out.
Json run_pipeline(const Json& config, const RunOptions& options);

}  // namespace loadlab::pipeline
