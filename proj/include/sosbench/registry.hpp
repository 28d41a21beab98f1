#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sosbench/text.hpp"

namespace sosbench {

enum class SensitiveAttribute {
  kGender,
  kSexualOrientation,
  kDisability,
  kEthnicity,
  kRefugee,
  kReligion,
};

enum class GroupStatus { kMarginalized, kDominant };

enum class Gender { kMale, kFemale, kNonbinary };

std::string to_string(SensitiveAttribute a);
std::string to_string(GroupStatus s);
std::string to_string(Gender g);
SensitiveAttribute attribute_from_string(const std::string& s);
GroupStatus status_from_string(const std::string& s);
Gender gender_from_string(const std::string& s);

inline constexpr Gender kAllGenders[] = {Gender::kMale, Gender::kFemale,
                                         Gender::kNonbinary};

// BCP-47-ish lowercase tag, e.g. "en-uk", "ar-msa". Validated on load.
using LanguageCode = std::string;

bool is_valid_language_code(const std::string& code);

// Primary subtag ("en" of "en-uk"); used for person-noun and prompt-frame
// table lookups that do not distinguish regional variants.
std::string language_primary(const LanguageCode& code);

struct Region {
  std::string code;
  std::vector<LanguageCode> languages;
};

struct IdentityRecord {
  std::string id;
  SensitiveAttribute attribute;
  std::string region;
  GroupStatus status;
  // language -> gender -> adjective surface form
  std::map<LanguageCode, std::map<Gender, std::string>> forms;

  const std::string* form(const LanguageCode& lang, Gender g) const;
};

struct Registry {
  std::map<std::string, Region> regions;
  std::vector<IdentityRecord> identities;  // sorted by id

  const Region* region(const std::string& code) const;
  const IdentityRecord* identity(const std::string& id) const;
  // Identities of a region, in id order.
  std::vector<const IdentityRecord*> identities_of(const std::string& region) const;
};

// Registry TSV: id, attribute, region, status, language, gender, surface_form.
// '#' lines are comments. Throws ParseError / ValidationError.
Registry load_registry(const std::string& path);

// Inverse of load_registry; row order is (id, language, gender).
void serialize_registry(const Registry& reg, const std::string& path);

struct LexiconEntry {
  std::string lemma;  // normalized
  std::string category;
  std::string level;

  auto operator<=>(const LexiconEntry&) const = default;
};

struct LexiconFilter {
  std::set<std::string> categories;  // empty = all
  std::set<std::string> levels;      // empty = all
};

struct Lexicon {
  LanguageCode language;
  std::vector<LexiconEntry> entries;  // sorted, deduped
  std::size_t duplicates_dropped = 0;

  bool contains_lemma(const std::string& normalized_lemma) const;
  // Longest multi-word lemma, in words; 1 for a lexicon of single words.
  std::size_t max_lemma_words() const;
};

// Lexicon TSV: lemma, category, level. Lemmas are run through
// text::normalize_text before storage.
Lexicon load_lexicon(const std::string& path, const LanguageCode& language,
                     const LexiconFilter& filter = {},
                     const text::NormalizeOptions& norm = {});

}  // namespace sosbench
