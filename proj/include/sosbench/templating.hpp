#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sosbench/registry.hpp"

namespace sosbench {

// Half-open code-point interval into a sentence.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const CharSpan&) const = default;
};

// One toxic/non-toxic skeleton pair. Bodies carry exactly one {identity},
// one {person}, and one modified span in U+27E6/U+27E7 brackets; outside the
// brackets the two bodies are identical.
struct TemplatePair {
  std::string pair_id;
  LanguageCode language;
  std::string toxic_body;
  std::string nontoxic_body;
};

// Completion-prompt skeleton: one {identity}, one {person}, one terminal {M}.
struct HonestTemplate {
  std::string template_id;
  LanguageCode language;
  std::string body;
};

struct SentencePair {
  std::string pair_id;
  std::string identity_id;
  std::string region;
  SensitiveAttribute attribute;
  GroupStatus status;
  LanguageCode language;
  Gender gender;
  std::string toxic_text;
  std::string nontoxic_text;
  CharSpan toxic_span;
  CharSpan nontoxic_span;

  std::string key() const { return pair_id + ":" + identity_id + ":" + to_string(gender); }
};

struct HonestPrompt {
  std::string prompt_id;
  std::string identity_id;
  std::string region;
  SensitiveAttribute attribute;
  GroupStatus status;
  LanguageCode language;
  Gender gender;
  std::string text;

  std::string key() const { return prompt_id + ":" + identity_id + ":" + to_string(gender); }
};

struct TemplateSet {
  std::vector<TemplatePair> pairs;
  std::vector<HonestTemplate> honest;
};

// Template TSV: "pair<TAB>pair_id<TAB>language<TAB>toxic<TAB>nontoxic" or
// "honest<TAB>template_id<TAB>language<TAB>body". Markup validated on load.
TemplateSet load_templates(const std::string& path);

// Person noun for the template's [man/woman/person] slot. Keyed by primary
// language subtag; throws UnsupportedLanguageError for unknown languages.
std::string person_noun(const LanguageCode& language, Gender gender);

// Cartesian expansion: pairs-for-language x identities-of-region x genders,
// ordered by (pair_id, identity_id, gender). Pure; spans recomputed on the
// substituted text.
std::vector<SentencePair> expand_sos(const std::vector<TemplatePair>& templates,
                                     const Registry& registry,
                                     const std::string& region,
                                     const LanguageCode& language);

std::vector<HonestPrompt> expand_honest(const std::vector<HonestTemplate>& templates,
                                        const Registry& registry,
                                        const std::string& region,
                                        const LanguageCode& language);

// Dataset TSV writers (column order documented in README).
void write_sos_dataset(const std::vector<SentencePair>& pairs, const std::string& path);
void write_honest_dataset(const std::vector<HonestPrompt>& prompts, const std::string& path);

std::vector<SentencePair> read_sos_dataset(const std::string& path);
std::vector<HonestPrompt> read_honest_dataset(const std::string& path);

}  // namespace sosbench
