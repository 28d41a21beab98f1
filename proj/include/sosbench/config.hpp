#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sosbench/metrics.hpp"
#include "sosbench/registry.hpp"

namespace sosbench {

// A backend as named in config: either the in-process mock ("mock") or a
// base URL. The kind is decided by the task at score time.
struct BackendSpec {
  std::string name;
  std::string target;  // "mock" or an http(s) URL
  int max_in_flight = 4;
  bool is_mock() const { return target == "mock"; }
};

enum class Task { kMlm, kHonest, kIfm };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct RunConfig {
  std::string registry_path;
  std::string template_path;
  std::map<LanguageCode, std::string> lexicon_paths;
  std::vector<BackendSpec> backends;
  std::set<std::string> region_filter;      // empty = all
  std::set<LanguageCode> language_filter;   // empty = all
  std::set<std::string> attribute_filter;   // empty = all
  int k = 20;
  int max_new_tokens = 20;
  InstructionLanguage instruction_language = InstructionLanguage::kEnglish;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  std::size_t top_k = 5;
  bool lenient_yes_no = false;
  bool f1_halluc_as_error = false;
  bool arabic_aggressive = false;
  int failure_threshold = 5;  // consecutive failures before a job aborts

  text::NormalizeOptions normalize_options() const {
    return {.arabic_aggressive = arabic_aggressive};
  }
};

// key = value config file ('#' comments, blank lines ignored). Recognized
// keys documented in the README. Unknown keys are a ConfigError.
RunConfig load_config_file(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

// Path and filter checks; throws ConfigError.
void validate_config(const RunConfig& cfg);

}  // namespace sosbench
