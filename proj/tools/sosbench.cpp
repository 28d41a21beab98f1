#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sosbench/errors.hpp"
#include "sosbench/pipeline.hpp"

namespace {

using namespace sosbench;

// Exit codes: 0 success, 1 usage/config, 2 data error, 3 transport threshold.
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kTransport = 3;

struct CliArgs {
  std::string config_path;
  std::string registry;
  std::string templates;
  std::vector<std::string> lexicons;  // lang=path
  std::vector<std::string> backends;  // name=url|mock
  std::vector<std::string> regions;
  std::vector<std::string> languages;
  std::vector<std::string> attributes;
  int k = -1;
  int max_new_tokens = -1;
  std::string instruction_language;
  std::string seed;
  std::string out;
  long top_k = -1;
  bool lenient_yes_no = false;
  bool f1_halluc_as_error = false;
  bool arabic_aggressive = false;
  std::string task;
  std::size_t unit_limit = 0;
};

RunConfig build_config(const CliArgs& a) {
  RunConfig cfg;
  if (!a.config_path.empty()) cfg = load_config_file(a.config_path);
  // CLI flags override config-file values.
  if (!a.registry.empty()) cfg.registry_path = a.registry;
  if (!a.templates.empty()) cfg.template_path = a.templates;
  for (const auto& spec : a.lexicons) {
    auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--lexicon expects <lang>=<path>, got: " + spec);
    cfg.lexicon_paths[spec.substr(0, eq)] = spec.substr(eq + 1);
  }
  for (const auto& spec : a.backends) {
    auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--backend expects <name>=<url>|mock, got: " + spec);
    cfg.backends.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
  }
  for (const auto& r : a.regions) cfg.region_filter.insert(r);
  for (const auto& l : a.languages) cfg.language_filter.insert(l);
  for (const auto& at : a.attributes) cfg.attribute_filter.insert(at);
  if (a.k > 0) cfg.k = a.k;
  if (a.max_new_tokens > 0) cfg.max_new_tokens = a.max_new_tokens;
  if (!a.instruction_language.empty())
    apply_config_line(cfg, "instruction_language", a.instruction_language);
  if (!a.seed.empty()) cfg.seed = std::stoull(a.seed);
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.top_k > 0) cfg.top_k = static_cast<std::size_t>(a.top_k);
  if (a.lenient_yes_no) cfg.lenient_yes_no = true;
  if (a.f1_halluc_as_error) cfg.f1_halluc_as_error = true;
  if (a.arabic_aggressive) cfg.arabic_aggressive = true;
  return cfg;
}

void add_common_flags(CLI::App* cmd, CliArgs& a) {
  cmd->add_option("--config", a.config_path, "key=value config file");
  cmd->add_option("--registry", a.registry, "identity registry TSV");
  cmd->add_option("--templates", a.templates, "template TSV");
  cmd->add_option("--lexicon", a.lexicons, "<lang>=<path>, repeatable");
  cmd->add_option("--backend", a.backends, "<name>=<url>|mock, repeatable");
  cmd->add_option("--region", a.regions, "region filter, repeatable");
  cmd->add_option("--language", a.languages, "language filter, repeatable");
  cmd->add_option("--attribute", a.attributes, "attribute filter, repeatable");
  cmd->add_option("--k", a.k, "top-K completions (HONEST)");
  cmd->add_option("--max-new-tokens", a.max_new_tokens, "completion length cap");
  cmd->add_option("--instruction-language", a.instruction_language, "native|english");
  cmd->add_option("--seed", a.seed, "mock backend seed");
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--top-k", a.top_k, "rows per (attribute, region) in rankings");
  cmd->add_flag("--lenient-yes-no", a.lenient_yes_no,
                "first polarity wins on mixed yes/no responses");
  cmd->add_flag("--f1-halluc-as-error", a.f1_halluc_as_error,
                "count hallucinations as wrong predictions in F1");
  cmd->add_flag("--arabic-aggressive", a.arabic_aggressive,
                "fold alef variants and ta-marbuta during normalization");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sosbench: multilingual LM bias evaluation harness"};
  app.require_subcommand(1);
  CliArgs args;

  CLI::App* generate = app.add_subcommand("generate", "expand datasets from the registry");
  add_common_flags(generate, args);

  CLI::App* score = app.add_subcommand("score", "run a metric task against backends");
  add_common_flags(score, args);
  score->add_option("--task", args.task, "mlm|honest|ifm")->required();
  score->add_option("--unit-limit", args.unit_limit,
                    "stop after N newly scored units (testing aid)");

  CLI::App* report = app.add_subcommand("report", "aggregate raw dumps into analysis CSVs");
  add_common_flags(report, args);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = build_config(args);
    if (generate->parsed()) {
      auto res = pipeline::cmd_generate(cfg);
      std::cout << "generated " << res.total_sos_sentences << " SOS sentences and "
                << res.total_honest_prompts << " HONEST prompts\n"
                << "manifest: " << res.manifest_path << "\n"
                << "reference totals: 72000 SOS / ~28000 HONEST (full scale)\n";
    } else if (score->parsed()) {
      Task task = task_from_string(args.task);
      pipeline::ScoreOptions opts;
      opts.unit_limit = args.unit_limit;
      auto res = pipeline::cmd_score(cfg, task, opts);
      std::cout << "scored " << res.units_scored << " units (" << res.units_skipped
                << " already done, " << res.units_failed << " failed)\n";
      for (const auto& p : res.result_paths) std::cout << "result: " << p << "\n";
    } else if (report->parsed()) {
      auto res = pipeline::cmd_report(cfg);
      std::cout << res.summary;
      for (const auto& p : res.csv_paths) std::cout << "wrote: " << p << "\n";
      if (res.no_data) std::cout << "no data\n";
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const TransportError& e) {
    std::cerr << "transport failure: " << e.what() << "\n";
    return kTransport;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
}
