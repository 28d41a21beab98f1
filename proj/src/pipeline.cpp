#include "sosbench/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <set>
#include <sstream>

#include "sosbench/errors.hpp"
#include "sosbench/metrics.hpp"
#include "sosbench/mock_backend.hpp"

namespace sosbench::pipeline {

namespace fs = std::filesystem;
using analysis::format_double;

namespace {

bool region_selected(const RunConfig& cfg, const std::string& region) {
  return cfg.region_filter.empty() || cfg.region_filter.count(region);
}

bool language_selected(const RunConfig& cfg, const LanguageCode& lang) {
  return cfg.language_filter.empty() || cfg.language_filter.count(lang);
}

bool attribute_selected(const RunConfig& cfg, SensitiveAttribute attr) {
  return cfg.attribute_filter.empty() || cfg.attribute_filter.count(to_string(attr));
}

// (region, language) pairs selected by the config, in deterministic order.
std::vector<std::pair<std::string, LanguageCode>> selected_slices(const RunConfig& cfg,
                                                                  const Registry& reg) {
  std::vector<std::pair<std::string, LanguageCode>> out;
  for (const auto& [code, region] : reg.regions) {
    if (!region_selected(cfg, code)) continue;
    for (const auto& lang : region.languages)
      if (language_selected(cfg, lang)) out.emplace_back(code, lang);
  }
  return out;
}

std::string dataset_path(const RunConfig& cfg, const char* kind, const std::string& region,
                         const LanguageCode& lang) {
  return (fs::path(cfg.output_dir) / (std::string(kind) + "_" + region + "_" + lang + ".tsv"))
      .string();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t file_content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path + ": cannot open for hashing");
  std::ostringstream ss;
  ss << in.rdbuf();
  return text::stable_hash(ss.str());
}

GenerateResult cmd_generate(const RunConfig& cfg) {
  validate_config(cfg);
  if (cfg.registry_path.empty() || cfg.template_path.empty())
    throw ConfigError("generate needs --registry and --templates");
  Registry reg = load_registry(cfg.registry_path);
  TemplateSet templates = load_templates(cfg.template_path);
  fs::create_directories(cfg.output_dir);

  GenerateResult res;
  struct ManifestRow {
    std::string file, kind, region, lang;
    std::size_t rows;
    std::uint64_t hash;
  };
  std::vector<ManifestRow> manifest;
  for (const auto& [region, lang] : selected_slices(cfg, reg)) {
    auto pairs = expand_sos(templates.pairs, reg, region, lang);
    auto prompts = expand_honest(templates.honest, reg, region, lang);
    std::string sos_path = dataset_path(cfg, "sos", region, lang);
    std::string honest_path = dataset_path(cfg, "honest", region, lang);
    write_sos_dataset(pairs, sos_path);
    write_honest_dataset(prompts, honest_path);
    res.total_sos_sentences += 2 * pairs.size();
    res.total_honest_prompts += prompts.size();
    manifest.push_back({fs::path(sos_path).filename().string(), "sos", region, lang,
                        pairs.size(), file_content_hash(sos_path)});
    manifest.push_back({fs::path(honest_path).filename().string(), "honest", region, lang,
                        prompts.size(), file_content_hash(honest_path)});
  }

  res.manifest_path = (fs::path(cfg.output_dir) / "manifest.tsv").string();
  std::ofstream out(res.manifest_path);
  if (!out) throw Error(res.manifest_path + ": cannot write");
  out << "file\tkind\tregion\tlanguage\trows\tcontent_hash\n";
  for (const auto& m : manifest)
    out << m.file << '\t' << m.kind << '\t' << m.region << '\t' << m.lang << '\t'
        << m.rows << '\t' << hex64(m.hash) << '\n';
  out << "# total_sos_sentences\t" << res.total_sos_sentences << '\n';
  out << "# total_honest_prompts\t" << res.total_honest_prompts << '\n';
  out << "# reference_totals\t72000 SOS sentences / ~28000 HONEST prompts (full-scale "
         "datasets; informational, not asserted)\n";
  return res;
}

namespace {

BackendKind kind_for_task(Task task) {
  switch (task) {
    case Task::kMlm: return BackendKind::kMlm;
    case Task::kHonest: return BackendKind::kGenerative;
    case Task::kIfm: return BackendKind::kInstruct;
  }
  return BackendKind::kMlm;
}

std::unique_ptr<Backend> default_backend(const BackendSpec& spec, BackendKind kind,
                                         std::uint64_t seed) {
  if (spec.is_mock()) return make_mock_backend(spec.name, kind, seed);
  BackendDescriptor desc;
  desc.name = spec.name;
  desc.kind = kind;
  desc.base_url = spec.target;
  desc.max_in_flight = spec.max_in_flight;
  return make_http_backend(desc);
}

// Keys already committed to a dump (first column of each row).
std::set<std::string> existing_dump_keys(const std::string& path) {
  std::set<std::string> keys;
  std::ifstream in(path);
  if (!in) return keys;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    keys.insert(line.substr(0, line.find('\t')));
  }
  return keys;
}

void open_dump(std::ofstream& out, const std::string& path, const char* header) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  out.open(path, std::ios::app);
  if (!out) throw Error(path + ": cannot open dump for append");
  if (fresh) out << header << '\n';
}

// Runs fn over pending units with bounded fan-out, committing lines to the
// dump in unit order. fn returns the dump line, or nullopt on transport
// failure. Aborts after `failure_threshold` consecutive failures.
struct ChunkRunner {
  int width = 1;
  int failure_threshold = 5;
  std::size_t unit_limit = 0;

  std::size_t scored = 0;
  std::size_t failed = 0;

  template <typename Unit, typename Fn>
  void run(const std::vector<Unit>& units, std::ofstream& dump, Fn&& fn) {
    int consecutive_failures = 0;
    std::size_t i = 0;
    while (i < units.size()) {
      if (unit_limit && scored >= unit_limit) return;
      std::size_t chunk = std::min<std::size_t>(std::max(width, 1), units.size() - i);
      if (unit_limit) chunk = std::min(chunk, unit_limit - scored);
      std::vector<std::future<std::optional<std::string>>> futures;
      futures.reserve(chunk);
      for (std::size_t j = 0; j < chunk; ++j)
        futures.push_back(std::async(std::launch::async, fn, std::cref(units[i + j])));
      for (auto& f : futures) {
        std::optional<std::string> line = f.get();
        if (!line) {
          ++failed;
          if (++consecutive_failures >= failure_threshold)
            throw TransportError("aborting job after " +
                                 std::to_string(consecutive_failures) +
                                 " consecutive failures");
          continue;
        }
        consecutive_failures = 0;
        dump << *line << '\n';
        ++scored;
      }
      dump.flush();
      i += chunk;
    }
  }
};

constexpr const char* kMlmDumpHeader =
    "unit_key\tregion\tlanguage\tpair_id\tidentity_id\tattribute\tstatus\tgender\t"
    "score_toxic\tscore_nontoxic\tn_unmod_toxic\tn_unmod_nontoxic";
constexpr const char* kHonestDumpHeader =
    "unit_key\tregion\tlanguage\tprompt_id\tidentity_id\tattribute\tstatus\tgender\t"
    "k\tn_hurtful\thurtful_bits\tcompletions...";
constexpr const char* kIfmDumpHeader =
    "unit_key\tregion\tlanguage\tpair_id\tidentity_id\tattribute\tstatus\tgender\t"
    "side\tinstruction_language\tgold\tlabel\traw_response";

std::string slice_key(const std::string& region, const LanguageCode& lang,
                      const std::string& unit) {
  return region + "|" + lang + "|" + unit;
}

struct MlmRow {
  std::string region, language, pair_id, identity_id, gender_s, unit_key;
  SensitiveAttribute attribute{};
  GroupStatus status{};
  double score_toxic = 0, score_nontoxic = 0;
};

std::vector<MlmRow> read_mlm_dump(const std::string& path) {
  std::vector<MlmRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    auto f = text::split_tsv(line);
    if (f.size() != 12) throw ParseError(path + ": malformed mlm dump row");
    MlmRow r;
    r.unit_key = f[0];
    r.region = f[1];
    r.language = f[2];
    r.pair_id = f[3];
    r.identity_id = f[4];
    r.attribute = attribute_from_string(f[5]);
    r.status = status_from_string(f[6]);
    r.gender_s = f[7];
    r.score_toxic = std::stod(f[8]);
    r.score_nontoxic = std::stod(f[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

struct HonestRow {
  std::string region, language, prompt_id, identity_id, gender_s;
  SensitiveAttribute attribute{};
  GroupStatus status{};
  int k = 0;
  std::size_t n_hurtful = 0;
};

std::vector<HonestRow> read_honest_dump(const std::string& path) {
  std::vector<HonestRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    auto f = text::split_tsv(line);
    if (f.size() < 11) throw ParseError(path + ": malformed honest dump row");
    HonestRow r;
    r.region = f[1];
    r.language = f[2];
    r.prompt_id = f[3];
    r.identity_id = f[4];
    r.attribute = attribute_from_string(f[5]);
    r.status = status_from_string(f[6]);
    r.gender_s = f[7];
    r.k = std::stoi(f[8]);
    r.n_hurtful = std::stoul(f[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

struct IfmRow {
  std::string region, language, pair_id, identity_id, gender_s, side, instr_lang;
  SensitiveAttribute attribute{};
  GroupStatus status{};
  GoldLabel gold{};
  IfmLabel label{};
  std::string unit_key;
};

std::vector<IfmRow> read_ifm_dump(const std::string& path) {
  std::vector<IfmRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    auto f = text::split_tsv(line);
    if (f.size() != 13) throw ParseError(path + ": malformed ifm dump row");
    IfmRow r;
    r.unit_key = f[0];
    r.region = f[1];
    r.language = f[2];
    r.pair_id = f[3];
    r.identity_id = f[4];
    r.attribute = attribute_from_string(f[5]);
    r.status = status_from_string(f[6]);
    r.gender_s = f[7];
    r.side = f[8];
    r.instr_lang = f[9];
    r.gold = f[10] == "hateful" ? GoldLabel::kHateful : GoldLabel::kNotHateful;
    r.label = ifm_label_from_string(f[11]);
    rows.push_back(std::move(r));
  }
  return rows;
}

// All generated sentence pairs matching the config filters, slice by slice.
std::vector<std::pair<std::pair<std::string, LanguageCode>, std::vector<SentencePair>>>
load_sos_slices(const RunConfig& cfg) {
  std::vector<std::pair<std::pair<std::string, LanguageCode>, std::vector<SentencePair>>>
      out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cfg.output_dir)) {
    std::string name = e.path().filename().string();
    if (name.rfind("sos_", 0) == 0 && name.ends_with(".tsv")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto pairs = read_sos_dataset(f.string());
    if (pairs.empty()) continue;
    const std::string region = pairs.front().region;
    const LanguageCode lang = pairs.front().language;
    if (!region_selected(cfg, region) || !language_selected(cfg, lang)) continue;
    out.push_back({{region, lang}, std::move(pairs)});
  }
  return out;
}

std::vector<std::pair<std::pair<std::string, LanguageCode>, std::vector<HonestPrompt>>>
load_honest_slices(const RunConfig& cfg) {
  std::vector<std::pair<std::pair<std::string, LanguageCode>, std::vector<HonestPrompt>>>
      out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cfg.output_dir)) {
    std::string name = e.path().filename().string();
    if (name.rfind("honest_", 0) == 0 && name.ends_with(".tsv")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto prompts = read_honest_dataset(f.string());
    if (prompts.empty()) continue;
    const std::string region = prompts.front().region;
    const LanguageCode lang = prompts.front().language;
    if (!region_selected(cfg, region) || !language_selected(cfg, lang)) continue;
    out.push_back({{region, lang}, std::move(prompts)});
  }
  return out;
}

void score_mlm_job(const RunConfig& cfg, Backend& backend, const ScoreOptions& opts,
                   const std::string& dump_path, ScoreResult& res) {
  std::set<std::string> done = existing_dump_keys(dump_path);
  std::ofstream dump;
  open_dump(dump, dump_path, kMlmDumpHeader);
  ChunkRunner runner{backend.descriptor().max_in_flight, cfg.failure_threshold,
                     opts.unit_limit};
  for (const auto& [slice, pairs] : load_sos_slices(cfg)) {
    std::vector<SentencePair> pending;
    for (const auto& p : pairs) {
      if (!attribute_selected(cfg, p.attribute)) continue;
      if (done.count(slice_key(slice.first, slice.second, p.key())))
        ++res.units_skipped;
      else
        pending.push_back(p);
    }
    runner.run(pending, dump, [&](const SentencePair& p) -> std::optional<std::string> {
      try {
        auto score_side = [&](const std::string& txt, PairSide side) {
          auto tokens = backend.tokenize(txt);
          auto idx = unmodified_token_indices(p, side, tokens);
          return std::pair{pll_score(backend, txt, idx), idx.size()};
        };
        auto [st, nt] = score_side(p.toxic_text, PairSide::kToxic);
        auto [sn, nn] = score_side(p.nontoxic_text, PairSide::kNontoxic);
        std::ostringstream row;
        row << slice_key(p.region, p.language, p.key()) << '\t' << p.region << '\t'
            << p.language << '\t' << p.pair_id << '\t' << p.identity_id << '\t'
            << to_string(p.attribute) << '\t' << to_string(p.status) << '\t'
            << to_string(p.gender) << '\t' << format_double(st) << '\t'
            << format_double(sn) << '\t' << nt << '\t' << nn;
        return row.str();
      } catch (const TransportError&) {
        return std::nullopt;
      }
    });
  }
  res.units_scored += runner.scored;
  res.units_failed += runner.failed;
}

void score_honest_job(const RunConfig& cfg, Backend& backend, const ScoreOptions& opts,
                      const std::string& dump_path, ScoreResult& res) {
  // Lexicons per language, loaded lazily.
  std::map<LanguageCode, Lexicon> lexicons;
  auto lexicon_for = [&](const LanguageCode& lang) -> const Lexicon& {
    auto it = lexicons.find(lang);
    if (it != lexicons.end()) return it->second;
    auto pi = cfg.lexicon_paths.find(lang);
    if (pi == cfg.lexicon_paths.end())
      throw ConfigError("no lexicon configured for language " + lang);
    return lexicons
        .emplace(lang, load_lexicon(pi->second, lang, {}, cfg.normalize_options()))
        .first->second;
  };

  std::set<std::string> done = existing_dump_keys(dump_path);
  std::ofstream dump;
  open_dump(dump, dump_path, kHonestDumpHeader);
  ChunkRunner runner{backend.descriptor().max_in_flight, cfg.failure_threshold,
                     opts.unit_limit};
  for (const auto& [slice, prompts] : load_honest_slices(cfg)) {
    const Lexicon& lexicon = lexicon_for(slice.second);
    std::vector<HonestPrompt> pending;
    for (const auto& p : prompts) {
      if (!attribute_selected(cfg, p.attribute)) continue;
      if (done.count(slice_key(slice.first, slice.second, p.key())))
        ++res.units_skipped;
      else
        pending.push_back(p);
    }
    runner.run(pending, dump, [&](const HonestPrompt& p) -> std::optional<std::string> {
      try {
        auto completions = backend.complete(p.text, cfg.k, cfg.max_new_tokens);
        std::string bits;
        std::size_t n_hurtful = 0;
        for (const auto& c : completions) {
          bool hurt = contains_hurtful(c, lexicon, cfg.normalize_options());
          bits.push_back(hurt ? '1' : '0');
          if (hurt) ++n_hurtful;
        }
        std::ostringstream row;
        row << slice_key(p.region, p.language, p.key()) << '\t' << p.region << '\t'
            << p.language << '\t' << p.prompt_id << '\t' << p.identity_id << '\t'
            << to_string(p.attribute) << '\t' << to_string(p.status) << '\t'
            << to_string(p.gender) << '\t' << cfg.k << '\t' << n_hurtful << '\t' << bits;
        for (const auto& c : completions) row << '\t' << text::tsv_escape(c);
        return row.str();
      } catch (const TransportError&) {
        return std::nullopt;
      }
    });
  }
  res.units_scored += runner.scored;
  res.units_failed += runner.failed;
}

void score_ifm_job(const RunConfig& cfg, Backend& backend, const ScoreOptions& opts,
                   const std::string& dump_path, ScoreResult& res) {
  std::set<std::string> done = existing_dump_keys(dump_path);
  std::ofstream dump;
  open_dump(dump, dump_path, kIfmDumpHeader);
  ChunkRunner runner{backend.descriptor().max_in_flight, cfg.failure_threshold,
                     opts.unit_limit};
  const std::string instr_lang =
      cfg.instruction_language == InstructionLanguage::kNative ? "native" : "english";
  struct IfmUnit {
    SentencePair pair;
    PairSide side;
  };
  for (const auto& [slice, pairs] : load_sos_slices(cfg)) {
    std::vector<IfmUnit> pending;
    for (const auto& p : pairs) {
      if (!attribute_selected(cfg, p.attribute)) continue;
      for (PairSide side : {PairSide::kToxic, PairSide::kNontoxic}) {
        std::string unit =
            p.key() + (side == PairSide::kToxic ? "#toxic" : "#nontoxic");
        if (done.count(slice_key(slice.first, slice.second, unit)))
          ++res.units_skipped;
        else
          pending.push_back({p, side});
      }
    }
    runner.run(pending, dump, [&](const IfmUnit& u) -> std::optional<std::string> {
      try {
        const auto& p = u.pair;
        const bool toxic = u.side == PairSide::kToxic;
        const std::string& sentence = toxic ? p.toxic_text : p.nontoxic_text;
        std::string prompt =
            build_ifm_prompt(sentence, p.language, cfg.instruction_language);
        std::string response = backend.instruct(prompt);
        IfmLabel label = parse_yes_no(response, p.language, {.lenient = cfg.lenient_yes_no});
        std::ostringstream row;
        row << slice_key(p.region, p.language,
                         p.key() + (toxic ? "#toxic" : "#nontoxic"))
            << '\t' << p.region << '\t' << p.language << '\t' << p.pair_id << '\t'
            << p.identity_id << '\t' << to_string(p.attribute) << '\t'
            << to_string(p.status) << '\t' << to_string(p.gender) << '\t'
            << (toxic ? "toxic" : "nontoxic") << '\t' << instr_lang << '\t'
            << (toxic ? "hateful" : "not_hateful") << '\t' << to_string(label) << '\t'
            << text::tsv_escape(response);
        return row.str();
      } catch (const TransportError&) {
        return std::nullopt;
      }
    });
  }
  res.units_scored += runner.scored;
  res.units_failed += runner.failed;
}

// MetricResult files are recomputed from the dump on every run.
void write_mlm_results(const RunConfig& cfg, const std::string& model,
                       const std::string& dump_path, ScoreResult& res) {
  auto rows = read_mlm_dump(dump_path);
  std::map<std::pair<std::string, std::string>, std::vector<PairScore>> by_slice;
  for (const auto& r : rows)
    by_slice[{r.region, r.language}].push_back(
        {r.pair_id, r.score_toxic, r.score_nontoxic, 0, 0});
  std::string path =
      (fs::path(cfg.output_dir) / ("result_mlm_" + model + ".tsv")).string();
  std::ofstream out(path);
  out << "region\tlanguage\tn_pairs\tn_toxic_preferred\tscore\n";
  for (const auto& [slice, scores] : by_slice) {
    SosMlmResult r = sos_mlm(scores);
    out << slice.first << '\t' << slice.second << '\t' << r.n_pairs << '\t'
        << r.n_toxic_preferred << '\t' << format_double(r.score) << '\n';
  }
  res.result_paths.push_back(path);
}

void write_honest_results(const RunConfig& cfg, const std::string& model,
                          const std::string& dump_path, ScoreResult& res) {
  auto rows = read_honest_dump(dump_path);
  struct Acc {
    std::size_t n_templates = 0, n_hurtful = 0;
    int k = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> by_slice;
  for (const auto& r : rows) {
    auto& a = by_slice[{r.region, r.language}];
    ++a.n_templates;
    a.n_hurtful += r.n_hurtful;
    a.k = r.k;
  }
  // Prompts absent from the dump were either filtered out or failed; only
  // count failures against slices the dump actually covers.
  std::map<std::pair<std::string, std::string>, std::size_t> expected;
  for (const auto& [slice, prompts] : load_honest_slices(cfg)) {
    std::size_t n = 0;
    for (const auto& p : prompts)
      if (attribute_selected(cfg, p.attribute)) ++n;
    expected[slice] = n;
  }
  std::string path =
      (fs::path(cfg.output_dir) / ("result_honest_" + model + ".tsv")).string();
  std::ofstream out(path);
  out << "region\tlanguage\tn_templates\tk\tn_hurtful\tscore\tn_missing\n";
  for (const auto& [slice, a] : by_slice) {
    double score = a.n_templates && a.k
                       ? static_cast<double>(a.n_hurtful) /
                             (static_cast<double>(a.n_templates) * a.k)
                       : 0.0;
    std::size_t exp = expected.count(slice) ? expected[slice] : a.n_templates;
    out << slice.first << '\t' << slice.second << '\t' << a.n_templates << '\t' << a.k
        << '\t' << a.n_hurtful << '\t' << format_double(score) << '\t'
        << (exp > a.n_templates ? exp - a.n_templates : 0) << '\n';
  }
  res.result_paths.push_back(path);
}

void write_ifm_results(const RunConfig& cfg, const std::string& model,
                       const std::string& dump_path, ScoreResult& res) {
  auto rows = read_ifm_dump(dump_path);
  std::map<std::tuple<std::string, std::string, std::string>,
           std::pair<std::vector<IfmVerdict>, std::map<std::string, GoldLabel>>>
      by_slice;
  for (const auto& r : rows) {
    auto& [verdicts, gold] = by_slice[{r.region, r.language, r.instr_lang}];
    verdicts.push_back({r.unit_key, "", r.label});
    gold[r.unit_key] = r.gold;
  }
  std::string path =
      (fs::path(cfg.output_dir) / ("result_ifm_" + model + ".tsv")).string();
  std::ofstream out(path);
  out << "region\tlanguage\tinstruction_language\tt\th\th_pct\tf1\trectified\n";
  for (const auto& [slice, data] : by_slice) {
    RectifiedF1Result r = rectified_f1(data.first, data.second,
                                       cfg.f1_halluc_as_error
                                           ? HallucinationMode::kCountAsError
                                           : HallucinationMode::kExclude);
    out << std::get<0>(slice) << '\t' << std::get<1>(slice) << '\t'
        << std::get<2>(slice) << '\t' << r.t << '\t' << r.h << '\t'
        << format_double(100.0 * static_cast<double>(r.h) / static_cast<double>(r.t))
        << '\t' << format_double(r.f1) << '\t' << format_double(r.rectified) << '\n';
  }
  res.result_paths.push_back(path);
}

}  // namespace

ScoreResult cmd_score(const RunConfig& cfg, Task task, const ScoreOptions& opts) {
  validate_config(cfg);
  if (cfg.backends.empty()) throw ConfigError("score needs at least one --backend");
  fs::create_directories(cfg.output_dir);
  ScoreResult res;
  for (const auto& spec : cfg.backends) {
    std::unique_ptr<Backend> backend =
        opts.factory ? opts.factory(spec, kind_for_task(task))
                     : default_backend(spec, kind_for_task(task), cfg.seed);
    std::string dump_path =
        (fs::path(cfg.output_dir) / ("dump_" + to_string(task) + "_" + spec.name + ".tsv"))
            .string();
    switch (task) {
      case Task::kMlm: score_mlm_job(cfg, *backend, opts, dump_path, res); break;
      case Task::kHonest: score_honest_job(cfg, *backend, opts, dump_path, res); break;
      case Task::kIfm: score_ifm_job(cfg, *backend, opts, dump_path, res); break;
    }
    res.dump_paths.push_back(dump_path);
    switch (task) {
      case Task::kMlm: write_mlm_results(cfg, spec.name, dump_path, res); break;
      case Task::kHonest: write_honest_results(cfg, spec.name, dump_path, res); break;
      case Task::kIfm: write_ifm_results(cfg, spec.name, dump_path, res); break;
    }
  }
  return res;
}

namespace {

std::vector<std::pair<std::string, fs::path>> dumps_of(const std::string& dir,
                                                       const std::string& prefix) {
  std::vector<std::pair<std::string, fs::path>> out;  // (model, path)
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && name.ends_with(".tsv")) {
      std::string model = name.substr(prefix.size(), name.size() - prefix.size() - 4);
      out.emplace_back(model, e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<analysis::ScoredRecord> read_mlm_records(const std::string& output_dir) {
  std::vector<analysis::ScoredRecord> records;
  for (const auto& [model, path] : dumps_of(output_dir, "dump_mlm_")) {
    for (const auto& r : read_mlm_dump(path.string())) {
      analysis::ScoredRecord rec;
      rec.model = model;
      rec.language = r.language;
      rec.region = r.region;
      rec.attribute = r.attribute;
      rec.status = r.status;
      rec.gender = gender_from_string(r.gender_s);
      rec.identity_id = r.identity_id;
      rec.value = r.score_toxic > r.score_nontoxic ? 1.0 : 0.0;
      records.push_back(std::move(rec));
    }
  }
  return records;
}

std::vector<analysis::ScoredRecord> read_honest_records(const std::string& output_dir) {
  std::vector<analysis::ScoredRecord> records;
  for (const auto& [model, path] : dumps_of(output_dir, "dump_honest_")) {
    for (const auto& r : read_honest_dump(path.string())) {
      analysis::ScoredRecord rec;
      rec.model = model;
      rec.language = r.language;
      rec.region = r.region;
      rec.attribute = r.attribute;
      rec.status = r.status;
      rec.gender = gender_from_string(r.gender_s);
      rec.identity_id = r.identity_id;
      rec.value = r.k ? static_cast<double>(r.n_hurtful) / r.k : 0.0;
      records.push_back(std::move(rec));
    }
  }
  return records;
}

ReportResult cmd_report(const RunConfig& cfg) {
  validate_config(cfg);
  const std::string& dir = cfg.output_dir;
  auto mlm_dumps = dumps_of(dir, "dump_mlm_");
  auto honest_dumps = dumps_of(dir, "dump_honest_");
  auto ifm_dumps = dumps_of(dir, "dump_ifm_");
  if (mlm_dumps.empty() && honest_dumps.empty() && ifm_dumps.empty())
    throw MissingDumpError("no dump files found in " + dir);

  auto filter = [&](std::vector<analysis::ScoredRecord> recs) {
    std::erase_if(recs, [&](const analysis::ScoredRecord& r) {
      return !region_selected(cfg, r.region) || !language_selected(cfg, r.language) ||
             !attribute_selected(cfg, r.attribute);
    });
    return recs;
  };
  std::vector<analysis::ScoredRecord> mlm_records = filter(read_mlm_records(dir));
  std::vector<analysis::ScoredRecord> honest_records = filter(read_honest_records(dir));

  ReportResult res;
  std::ostringstream summary;

  auto emit_family = [&](const std::vector<analysis::ScoredRecord>& records,
                         const std::string& tag) {
    if (records.empty()) return;
    // Coarse-to-fine levels merged into one long-format file.
    std::map<analysis::GroupKey, analysis::DistStats> merged;
    for (const analysis::GroupLevel& level :
         {analysis::GroupLevel{},
          analysis::GroupLevel{.by_attribute = true},
          analysis::GroupLevel{.by_attribute = true, .by_status = true},
          analysis::GroupLevel{.by_attribute = true, .by_gender = true},
          analysis::GroupLevel{.by_attribute = true, .by_status = true,
                               .by_gender = true, .by_identity = true}}) {
      for (auto& [k, v] : analysis::aggregate(records, level)) merged.emplace(k, v);
    }
    std::string agg_path = (fs::path(dir) / ("report_aggregate_" + tag + ".csv")).string();
    analysis::write_aggregate_csv(merged, agg_path);
    res.csv_paths.push_back(agg_path);

    auto diffs = analysis::intersectional_diffs(records, Gender::kFemale, Gender::kMale);
    std::string int_path =
        (fs::path(dir) / ("report_intersectional_" + tag + ".csv")).string();
    analysis::write_intersectional_csv(diffs, int_path);
    res.csv_paths.push_back(int_path);

    std::set<std::pair<std::string, std::string>> attr_regions;  // (attr, region)
    std::set<std::string> refugee_regions;
    for (const auto& r : records) {
      attr_regions.insert({to_string(r.attribute), r.region});
      if (r.attribute == SensitiveAttribute::kRefugee) refugee_regions.insert(r.region);
    }
    std::vector<std::tuple<SensitiveAttribute, std::string, analysis::RankedIdentity>>
        top_rows;
    for (const auto& [attr_s, region] : attr_regions) {
      SensitiveAttribute attr = attribute_from_string(attr_s);
      for (auto& ri : analysis::top_biased_identities(records, attr, region, cfg.top_k))
        top_rows.emplace_back(attr, region, std::move(ri));
    }
    std::string top_path =
        (fs::path(dir) / ("report_top_identities_" + tag + ".csv")).string();
    analysis::write_top_identities_csv(top_rows, top_path);
    res.csv_paths.push_back(top_path);

    for (const auto& region : refugee_regions) {
      analysis::Heatmap hm = analysis::refugee_heatmap(records, region, Gender::kMale);
      std::string hm_path =
          (fs::path(dir) / ("report_heatmap_" + tag + "_" + region + ".csv")).string();
      analysis::write_heatmap_csv(hm, hm_path);
      res.csv_paths.push_back(hm_path);
    }

    summary << tag << ": " << records.size() << " records\n";
    for (auto& [key, st] :
         analysis::aggregate(records, analysis::GroupLevel{})) {
      summary << "  " << key.model << " " << key.region << "/" << key.language
              << "  mean=" << format_double(st.mean)
              << "  var=" << format_double(st.variance) << "  n=" << st.n << "\n";
    }
  };
  emit_family(mlm_records, "mlm");
  emit_family(honest_records, "honest");

  if (!ifm_dumps.empty()) {
    std::string path = (fs::path(dir) / "report_ifm.csv").string();
    std::ofstream out(path);
    out << "model,region,language,instruction_language,t,h,h_pct,f1,rectified\n";
    bool any = false;
    for (const auto& [model, dump_path] : ifm_dumps) {
      auto rows = read_ifm_dump(dump_path.string());
      std::map<std::tuple<std::string, std::string, std::string>,
               std::pair<std::vector<IfmVerdict>, std::map<std::string, GoldLabel>>>
          by_slice;
      for (const auto& r : rows) {
        if (!region_selected(cfg, r.region) || !language_selected(cfg, r.language) ||
            !attribute_selected(cfg, r.attribute))
          continue;
        auto& [verdicts, gold] = by_slice[{r.region, r.language, r.instr_lang}];
        verdicts.push_back({r.unit_key, "", r.label});
        gold[r.unit_key] = r.gold;
      }
      for (const auto& [slice, data] : by_slice) {
        any = true;
        RectifiedF1Result r = rectified_f1(data.first, data.second,
                                           cfg.f1_halluc_as_error
                                               ? HallucinationMode::kCountAsError
                                               : HallucinationMode::kExclude);
        out << model << ',' << std::get<0>(slice) << ',' << std::get<1>(slice) << ','
            << std::get<2>(slice) << ',' << r.t << ',' << r.h << ','
            << format_double(100.0 * static_cast<double>(r.h) /
                              static_cast<double>(r.t))
            << ',' << format_double(r.f1) << ',' << format_double(r.rectified) << '\n';
        summary << "ifm " << model << " " << std::get<0>(slice) << "/"
                << std::get<1>(slice) << " (" << std::get<2>(slice) << ")"
                << "  t=" << r.t << " h=" << r.h
                << " rectified=" << format_double(r.rectified) << "\n";
      }
    }
    if (any) res.csv_paths.push_back(path);
  }

  if (mlm_records.empty() && honest_records.empty() && res.csv_paths.empty()) {
    res.no_data = true;
    res.summary = "no data matches the requested filters\n";
    return res;
  }
  res.summary = summary.str();
  return res;
}

}  // namespace sosbench::pipeline
