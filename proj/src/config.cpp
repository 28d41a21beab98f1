#include "sosbench/config.hpp"

#include <filesystem>
#include <fstream>

#include "sosbench/errors.hpp"

namespace sosbench {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string to_string(Task t) {
  switch (t) {
    case Task::kMlm: return "mlm";
    case Task::kHonest: return "honest";
    case Task::kIfm: return "ifm";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  if (s == "mlm") return Task::kMlm;
  if (s == "honest") return Task::kHonest;
  if (s == "ifm") return Task::kIfm;
  throw ConfigError("unknown task: " + s + " (expected mlm|honest|ifm)");
}

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "registry") {
    cfg.registry_path = value;
  } else if (key == "templates") {
    cfg.template_path = value;
  } else if (key.rfind("lexicon.", 0) == 0) {
    cfg.lexicon_paths[key.substr(8)] = value;
  } else if (key.rfind("backend.", 0) == 0) {
    cfg.backends.push_back({key.substr(8), value});
  } else if (key == "region") {
    cfg.region_filter.insert(value);
  } else if (key == "language") {
    cfg.language_filter.insert(value);
  } else if (key == "attribute") {
    cfg.attribute_filter.insert(value);
  } else if (key == "k") {
    cfg.k = std::stoi(value);
  } else if (key == "max_new_tokens") {
    cfg.max_new_tokens = std::stoi(value);
  } else if (key == "instruction_language") {
    if (value == "native") cfg.instruction_language = InstructionLanguage::kNative;
    else if (value == "english") cfg.instruction_language = InstructionLanguage::kEnglish;
    else throw ConfigError("instruction_language must be native|english");
  } else if (key == "seed") {
    cfg.seed = std::stoull(value);
  } else if (key == "out") {
    cfg.output_dir = value;
  } else if (key == "top_k") {
    cfg.top_k = std::stoul(value);
  } else if (key == "lenient_yes_no") {
    cfg.lenient_yes_no = value == "true" || value == "1";
  } else if (key == "f1_halluc_as_error") {
    cfg.f1_halluc_as_error = value == "true" || value == "1";
  } else if (key == "arabic_aggressive") {
    cfg.arabic_aggressive = value == "true" || value == "1";
  } else if (key == "failure_threshold") {
    cfg.failure_threshold = std::stoi(value);
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;  // sections are decorative
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      apply_config_line(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.k < 1) throw ConfigError("k must be >= 1");
  if (cfg.max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
  if (!cfg.registry_path.empty() && !fs::exists(cfg.registry_path))
    throw ConfigError("registry file not found: " + cfg.registry_path);
  if (!cfg.template_path.empty() && !fs::exists(cfg.template_path))
    throw ConfigError("template file not found: " + cfg.template_path);
  for (const auto& [lang, path] : cfg.lexicon_paths) {
    if (!is_valid_language_code(lang))
      throw ConfigError("bad lexicon language code: " + lang);
    if (!fs::exists(path)) throw ConfigError("lexicon file not found: " + path);
  }
  for (const auto& a : cfg.attribute_filter) {
    try {
      attribute_from_string(a);
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  }
}

}  // namespace sosbench
