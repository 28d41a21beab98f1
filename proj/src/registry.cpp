#include "sosbench/registry.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "sosbench/errors.hpp"

namespace sosbench {

namespace {

const std::map<std::string, SensitiveAttribute> kAttrNames = {
    {"gender", SensitiveAttribute::kGender},
    {"sexual_orientation", SensitiveAttribute::kSexualOrientation},
    {"disability", SensitiveAttribute::kDisability},
    {"ethnicity", SensitiveAttribute::kEthnicity},
    {"refugee", SensitiveAttribute::kRefugee},
    {"religion", SensitiveAttribute::kReligion},
};

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string to_string(SensitiveAttribute a) {
  for (const auto& [name, v] : kAttrNames)
    if (v == a) return name;
  return "?";
}

std::string to_string(GroupStatus s) {
  return s == GroupStatus::kMarginalized ? "marginalized" : "dominant";
}

std::string to_string(Gender g) {
  switch (g) {
    case Gender::kMale: return "male";
    case Gender::kFemale: return "female";
    case Gender::kNonbinary: return "nonbinary";
  }
  return "?";
}

SensitiveAttribute attribute_from_string(const std::string& s) {
  auto it = kAttrNames.find(s);
  if (it == kAttrNames.end()) throw ValidationError("unknown attribute: " + s);
  return it->second;
}

GroupStatus status_from_string(const std::string& s) {
  if (s == "marginalized") return GroupStatus::kMarginalized;
  if (s == "dominant") return GroupStatus::kDominant;
  throw ValidationError("unknown status: " + s);
}

Gender gender_from_string(const std::string& s) {
  if (s == "male") return Gender::kMale;
  if (s == "female") return Gender::kFemale;
  if (s == "nonbinary") return Gender::kNonbinary;
  throw ValidationError("unknown gender: " + s);
}

bool is_valid_language_code(const std::string& code) {
  static const std::regex re("[a-z]{2}(-[a-z]{2,3})?");
  return std::regex_match(code, re);
}

std::string language_primary(const LanguageCode& code) {
  auto dash = code.find('-');
  return dash == std::string::npos ? code : code.substr(0, dash);
}

const std::string* IdentityRecord::form(const LanguageCode& lang, Gender g) const {
  auto li = forms.find(lang);
  if (li == forms.end()) return nullptr;
  auto gi = li->second.find(g);
  return gi == li->second.end() ? nullptr : &gi->second;
}

const Region* Registry::region(const std::string& code) const {
  auto it = regions.find(code);
  return it == regions.end() ? nullptr : &it->second;
}

const IdentityRecord* Registry::identity(const std::string& id) const {
  auto it = std::lower_bound(
      identities.begin(), identities.end(), id,
      [](const IdentityRecord& r, const std::string& key) { return r.id < key; });
  return (it != identities.end() && it->id == id) ? &*it : nullptr;
}

std::vector<const IdentityRecord*> Registry::identities_of(
    const std::string& region) const {
  std::vector<const IdentityRecord*> out;
  for (const auto& rec : identities)
    if (rec.region == region) out.push_back(&rec);
  return out;
}

Registry load_registry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");

  std::map<std::string, IdentityRecord> by_id;
  std::map<std::string, std::set<LanguageCode>> region_langs;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = text::split_tsv(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != 7 || fields[0] != "id")
        parse_fail(path, lineno, "expected header id..surface_form");
      continue;
    }
    if (fields.size() != 7)
      parse_fail(path, lineno, "expected 7 fields, got " + std::to_string(fields.size()));

    const std::string& id = fields[0];
    const std::string& lang = fields[4];
    const std::string& surface = fields[6];
    if (id.empty()) parse_fail(path, lineno, "empty id");
    if (!is_valid_language_code(lang))
      parse_fail(path, lineno, "bad language code: " + lang);
    if (surface.empty())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": identity '" +
                            id + "': empty surface form");
    if (surface.find('{') != std::string::npos ||
        surface.find('}') != std::string::npos ||
        surface.find("⟦") != std::string::npos ||
        surface.find("⟧") != std::string::npos)
      throw ValidationError("identity '" + id + "': surface form contains markup");

    SensitiveAttribute attr;
    GroupStatus status;
    Gender gender;
    try {
      attr = attribute_from_string(fields[1]);
      status = status_from_string(fields[3]);
      gender = gender_from_string(fields[5]);
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }

    auto [it, inserted] = by_id.try_emplace(id);
    IdentityRecord& rec = it->second;
    if (inserted) {
      rec.id = id;
      rec.attribute = attr;
      rec.region = fields[2];
      rec.status = status;
    } else {
      if (rec.attribute != attr || rec.region != fields[2] || rec.status != status)
        throw ValidationError("identity '" + id +
                              "': conflicting attribute/region/status across rows");
    }
    auto [gi, fresh] = rec.forms[lang].try_emplace(gender, surface);
    if (!fresh)
      throw ValidationError("duplicate id: identity '" + id + "' repeats (" + lang +
                            ", " + fields[5] + ")");
    region_langs[rec.region].insert(lang);
  }
  if (!header_seen) throw ParseError(path + ": empty file");

  Registry reg;
  for (const auto& [code, langs] : region_langs) {
    Region r;
    r.code = code;
    r.languages.assign(langs.begin(), langs.end());
    reg.regions.emplace(code, std::move(r));
  }
  for (auto& [id, rec] : by_id) {
    // Every (language, gender) declared for the region must be covered.
    for (const auto& lang : reg.regions.at(rec.region).languages) {
      for (Gender g : kAllGenders) {
        if (!rec.form(lang, g))
          throw ValidationError("identity '" + id + "': missing surface form for (" +
                                lang + ", " + to_string(g) + ")");
      }
    }
    reg.identities.push_back(std::move(rec));
  }
  return reg;
}

void serialize_registry(const Registry& reg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot write");
  out << "id\tattribute\tregion\tstatus\tlanguage\tgender\tsurface_form\n";
  for (const auto& rec : reg.identities) {
    for (const auto& [lang, by_gender] : rec.forms) {
      for (const auto& [gender, surface] : by_gender) {
        out << rec.id << '\t' << to_string(rec.attribute) << '\t' << rec.region
            << '\t' << to_string(rec.status) << '\t' << lang << '\t'
            << to_string(gender) << '\t' << surface << '\n';
      }
    }
  }
}

bool Lexicon::contains_lemma(const std::string& normalized_lemma) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), normalized_lemma,
      [](const LexiconEntry& e, const std::string& key) { return e.lemma < key; });
  return it != entries.end() && it->lemma == normalized_lemma;
}

std::size_t Lexicon::max_lemma_words() const {
  std::size_t m = 1;
  for (const auto& e : entries)
    m = std::max(m, static_cast<std::size_t>(
                        1 + std::count(e.lemma.begin(), e.lemma.end(), ' ')));
  return m;
}

Lexicon load_lexicon(const std::string& path, const LanguageCode& language,
                     const LexiconFilter& filter, const text::NormalizeOptions& norm) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");

  Lexicon lex;
  lex.language = language;
  std::set<std::pair<std::string, std::string>> seen;  // (lemma, category)
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = text::split_tsv(line);
    if (fields.size() < 1 || fields.size() > 3)
      parse_fail(path, lineno, "expected 1-3 fields");
    if (lineno == 1 && fields[0] == "lemma") continue;  // optional header

    LexiconEntry e;
    e.lemma = text::normalize_text(fields[0], norm);
    e.category = fields.size() > 1 ? fields[1] : "";
    e.level = fields.size() > 2 ? fields[2] : "";
    if (e.lemma.empty()) continue;
    if (!filter.categories.empty() && !filter.categories.count(e.category)) continue;
    if (!filter.levels.empty() && !filter.levels.count(e.level)) continue;
    if (!seen.emplace(e.lemma, e.category).second) {
      ++lex.duplicates_dropped;
      continue;
    }
    lex.entries.push_back(std::move(e));
  }
  if (lex.entries.empty())
    throw EmptyLexiconError(path + ": no entries survive normalization/filtering");
  std::sort(lex.entries.begin(), lex.entries.end());
  return lex;
}

}  // namespace sosbench
