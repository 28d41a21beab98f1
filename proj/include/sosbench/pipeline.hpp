#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sosbench/analysis.hpp"
#include "sosbench/backend.hpp"
#include "sosbench/config.hpp"
#include "sosbench/templating.hpp"

namespace sosbench::pipeline {

struct GenerateResult {
  std::size_t total_sos_sentences = 0;  // 2 per pair
  std::size_t total_honest_prompts = 0;
  std::string manifest_path;
};

// Expands datasets per (region, language), writes TSVs plus a manifest with
// counts and per-file content hashes. Idempotent: a rerun rewrites identical
// bytes.
GenerateResult cmd_generate(const RunConfig& cfg);

using BackendFactory =
    std::function<std::unique_ptr<Backend>(const BackendSpec&, BackendKind)>;

struct ScoreOptions {
  // Stop after this many newly scored units (0 = no limit); lets tests
  // exercise kill-and-resume without signals.
  std::size_t unit_limit = 0;
  // Replaces backend construction in tests.
  BackendFactory factory;
};

struct ScoreResult {
  std::size_t units_scored = 0;
  std::size_t units_skipped = 0;  // already present in the dump
  std::size_t units_failed = 0;
  std::vector<std::string> dump_paths;
  std::vector<std::string> result_paths;
};

// Scores datasets against every configured backend, appending to per-model
// keyed dumps; completed units are skipped on rerun. Aborts a job after
// cfg.failure_threshold consecutive transport failures.
ScoreResult cmd_score(const RunConfig& cfg, Task task, const ScoreOptions& opts = {});

struct ReportResult {
  std::vector<std::string> csv_paths;
  std::string summary;  // human-readable
  bool no_data = false;
};

// Recomputes every aggregate from the raw dumps; byte-stable given a fixed
// dump directory.
ReportResult cmd_report(const RunConfig& cfg);

// Dump rows at the finest granularity, used by cmd_report and by tests that
// re-aggregate independently.
std::vector<analysis::ScoredRecord> read_mlm_records(const std::string& output_dir);
std::vector<analysis::ScoredRecord> read_honest_records(const std::string& output_dir);

std::uint64_t file_content_hash(const std::string& path);

}  // namespace sosbench::pipeline
