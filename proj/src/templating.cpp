#include "sosbench/templating.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>

#include "sosbench/errors.hpp"

namespace sosbench {

namespace {

constexpr char32_t kSpanOpen = U'⟦';   // ⟦
constexpr char32_t kSpanClose = U'⟧';  // ⟧

const std::u32string kIdentityPh = U"{identity}";
const std::u32string kPersonPh = U"{person}";
const std::u32string kMaskPh = U"{M}";

std::size_t count_occurrences(const std::u32string& hay, const std::u32string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::u32string::npos;
       pos = hay.find(needle, pos + 1))
    ++n;
  return n;
}

struct SpanMarkers {
  std::size_t open;   // index of kSpanOpen
  std::size_t close;  // index of kSpanClose
};

SpanMarkers find_span(const std::u32string& body, const std::string& id) {
  std::size_t open = body.find(kSpanOpen);
  std::size_t close = body.find(kSpanClose);
  if (open == std::u32string::npos || close == std::u32string::npos ||
      body.find(kSpanOpen, open + 1) != std::u32string::npos ||
      body.find(kSpanClose, close + 1) != std::u32string::npos)
    throw MarkupError("template '" + id + "': expected exactly one modified span");
  if (close <= open + 1)
    throw MarkupError("template '" + id + "': modified span empty or inverted");
  return {open, close};
}

std::u32string delete_span(const std::u32string& body, const SpanMarkers& m) {
  std::u32string out = body;
  out.erase(m.open, m.close - m.open + 1);
  return out;
}

void check_pair_markup(const TemplatePair& tp) {
  std::u32string toxic = text::to_u32(tp.toxic_body);
  std::u32string nontoxic = text::to_u32(tp.nontoxic_body);
  for (const auto* body : {&toxic, &nontoxic}) {
    if (count_occurrences(*body, kIdentityPh) != 1 ||
        count_occurrences(*body, kPersonPh) != 1)
      throw MarkupError("template '" + tp.pair_id +
                        "': need exactly one {identity} and one {person}");
  }
  SpanMarkers mt = find_span(toxic, tp.pair_id);
  SpanMarkers mn = find_span(nontoxic, tp.pair_id);
  // Placeholders live in the shared scaffold, not inside the filler.
  for (const auto& [body, m] : {std::pair{&toxic, mt}, std::pair{&nontoxic, mn}}) {
    for (const auto* ph : {&kIdentityPh, &kPersonPh}) {
      std::size_t pos = body->find(*ph);
      if (pos > m.open && pos < m.close)
        throw MarkupError("template '" + tp.pair_id + "': placeholder inside modified span");
    }
  }
  if (delete_span(toxic, mt) != delete_span(nontoxic, mn))
    throw MarkupError("template '" + tp.pair_id + "': scaffold mismatch");
}

void check_honest_markup(const HonestTemplate& ht) {
  std::u32string body = text::to_u32(ht.body);
  if (count_occurrences(body, kIdentityPh) != 1 ||
      count_occurrences(body, kPersonPh) != 1 ||
      count_occurrences(body, kMaskPh) != 1)
    throw MarkupError("template '" + ht.template_id +
                      "': need exactly one {identity}, {person} and {M}");
  std::size_t m = body.find(kMaskPh);
  if (m < body.find(kIdentityPh) || m < body.find(kPersonPh))
    throw MarkupError("template '" + ht.template_id + "': {M} must be the final placeholder");
}

// Replaces the single occurrence of `ph`; returns position of the replacement.
std::size_t replace_placeholder(std::u32string& body, const std::u32string& ph,
                                const std::u32string& value) {
  std::size_t pos = body.find(ph);
  body.replace(pos, ph.size(), value);
  return pos;
}

std::string span_to_string(const CharSpan& s) {
  return std::to_string(s.start) + ":" + std::to_string(s.end);
}

CharSpan span_from_string(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos) throw ParseError("bad span: " + s);
  return {std::stoul(s.substr(0, colon)), std::stoul(s.substr(colon + 1))};
}

}  // namespace

TemplateSet load_templates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");

  TemplateSet set;
  std::map<std::string, bool> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = text::split_tsv(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields[0] == "pair") {
      if (fields.size() != 5) throw ParseError(where + ": pair rows need 5 fields");
      TemplatePair tp{fields[1], fields[2], fields[3], fields[4]};
      if (!is_valid_language_code(tp.language))
        throw ParseError(where + ": bad language code " + tp.language);
      if (!seen_ids.emplace(tp.pair_id, true).second)
        throw MarkupError(where + ": duplicate template id " + tp.pair_id);
      check_pair_markup(tp);
      set.pairs.push_back(std::move(tp));
    } else if (fields[0] == "honest") {
      if (fields.size() != 4) throw ParseError(where + ": honest rows need 4 fields");
      HonestTemplate ht{fields[1], fields[2], fields[3]};
      if (!is_valid_language_code(ht.language))
        throw ParseError(where + ": bad language code " + ht.language);
      if (!seen_ids.emplace(ht.template_id, true).second)
        throw MarkupError(where + ": duplicate template id " + ht.template_id);
      check_honest_markup(ht);
      set.honest.push_back(std::move(ht));
    } else {
      throw ParseError(where + ": unknown row kind '" + fields[0] + "'");
    }
  }
  return set;
}

std::string person_noun(const LanguageCode& language, Gender gender) {
  static const std::map<std::string, std::array<std::string, 3>> kNouns = {
      {"en", {"man", "woman", "person"}},
      {"de", {"Mann", "Frau", "Person"}},
      {"ar", {"رجل", "امرأة", "شخص"}},
  };
  auto it = kNouns.find(language_primary(language));
  if (it == kNouns.end())
    throw UnsupportedLanguageError("no person nouns for language: " + language);
  return it->second[static_cast<std::size_t>(gender)];
}

namespace {

// Substitute {identity}/{person}, strip the span brackets, record the span.
void instantiate_side(const std::string& body_u8, const std::u32string& identity,
                      const std::u32string& person, std::string* out_text,
                      CharSpan* out_span) {
  std::u32string body = text::to_u32(body_u8);
  // Left-to-right placeholder substitution keeps later offsets valid.
  if (body.find(kIdentityPh) < body.find(kPersonPh)) {
    replace_placeholder(body, kIdentityPh, identity);
    replace_placeholder(body, kPersonPh, person);
  } else {
    replace_placeholder(body, kPersonPh, person);
    replace_placeholder(body, kIdentityPh, identity);
  }
  std::size_t open = body.find(kSpanOpen);
  std::size_t close = body.find(kSpanClose);
  body.erase(close, 1);
  body.erase(open, 1);
  *out_text = text::to_u8(body);
  *out_span = {open, close - 1};
}

const std::string& required_form(const IdentityRecord& rec, const LanguageCode& lang,
                                 Gender g) {
  const std::string* f = rec.form(lang, g);
  if (!f)
    throw MissingFormError("identity '" + rec.id + "' lacks a (" + lang + ", " +
                           to_string(g) + ") surface form");
  return *f;
}

void check_region_language(const Registry& registry, const std::string& region,
                           const LanguageCode& language) {
  const Region* r = registry.region(region);
  if (!r) throw ValidationError("unknown region: " + region);
  if (std::find(r->languages.begin(), r->languages.end(), language) ==
      r->languages.end())
    throw ValidationError("language " + language + " not evaluated for region " + region);
}

}  // namespace

std::vector<SentencePair> expand_sos(const std::vector<TemplatePair>& templates,
                                     const Registry& registry,
                                     const std::string& region,
                                     const LanguageCode& language) {
  check_region_language(registry, region, language);
  std::vector<const TemplatePair*> tps;
  for (const auto& tp : templates)
    if (tp.language == language) tps.push_back(&tp);
  std::sort(tps.begin(), tps.end(),
            [](auto* a, auto* b) { return a->pair_id < b->pair_id; });

  std::vector<SentencePair> out;
  for (const TemplatePair* tp : tps) {
    for (const IdentityRecord* rec : registry.identities_of(region)) {
      for (Gender g : kAllGenders) {
        std::u32string identity = text::to_u32(required_form(*rec, language, g));
        std::u32string person = text::to_u32(person_noun(language, g));
        SentencePair sp;
        sp.pair_id = tp->pair_id;
        sp.identity_id = rec->id;
        sp.region = region;
        sp.attribute = rec->attribute;
        sp.status = rec->status;
        sp.language = language;
        sp.gender = g;
        instantiate_side(tp->toxic_body, identity, person, &sp.toxic_text, &sp.toxic_span);
        instantiate_side(tp->nontoxic_body, identity, person, &sp.nontoxic_text,
                         &sp.nontoxic_span);
        out.push_back(std::move(sp));
      }
    }
  }
  return out;
}

std::vector<HonestPrompt> expand_honest(const std::vector<HonestTemplate>& templates,
                                        const Registry& registry,
                                        const std::string& region,
                                        const LanguageCode& language) {
  check_region_language(registry, region, language);
  std::vector<const HonestTemplate*> hts;
  for (const auto& ht : templates)
    if (ht.language == language) hts.push_back(&ht);
  std::sort(hts.begin(), hts.end(),
            [](auto* a, auto* b) { return a->template_id < b->template_id; });

  std::vector<HonestPrompt> out;
  for (const HonestTemplate* ht : hts) {
    for (const IdentityRecord* rec : registry.identities_of(region)) {
      for (Gender g : kAllGenders) {
        std::u32string body = text::to_u32(ht->body);
        if (body.find(kIdentityPh) < body.find(kPersonPh)) {
          replace_placeholder(body, kIdentityPh,
                              text::to_u32(required_form(*rec, language, g)));
          replace_placeholder(body, kPersonPh, text::to_u32(person_noun(language, g)));
        } else {
          replace_placeholder(body, kPersonPh, text::to_u32(person_noun(language, g)));
          replace_placeholder(body, kIdentityPh,
                              text::to_u32(required_form(*rec, language, g)));
        }
        std::size_t m = body.find(kMaskPh);
        body.erase(m, kMaskPh.size());
        while (!body.empty() && (body.back() == U' ' || body.back() == U'\t'))
          body.pop_back();
        HonestPrompt hp;
        hp.prompt_id = ht->template_id;
        hp.identity_id = rec->id;
        hp.region = region;
        hp.attribute = rec->attribute;
        hp.status = rec->status;
        hp.language = language;
        hp.gender = g;
        hp.text = text::to_u8(body);
        if (hp.text.empty())
          throw MarkupError("template '" + ht->template_id + "' expands to empty prompt");
        out.push_back(std::move(hp));
      }
    }
  }
  return out;
}

void write_sos_dataset(const std::vector<SentencePair>& pairs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot write");
  out << "pair_id\tidentity_id\tregion\tattribute\tstatus\tlanguage\tgender\t"
         "toxic_text\tnontoxic_text\ttoxic_span\tnontoxic_span\n";
  for (const auto& p : pairs) {
    out << p.pair_id << '\t' << p.identity_id << '\t' << p.region << '\t'
        << to_string(p.attribute) << '\t' << to_string(p.status) << '\t' << p.language
        << '\t' << to_string(p.gender) << '\t' << text::tsv_escape(p.toxic_text) << '\t'
        << text::tsv_escape(p.nontoxic_text) << '\t' << span_to_string(p.toxic_span)
        << '\t' << span_to_string(p.nontoxic_span) << '\n';
  }
}

void write_honest_dataset(const std::vector<HonestPrompt>& prompts,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot write");
  out << "prompt_id\tidentity_id\tregion\tattribute\tstatus\tlanguage\tgender\ttext\n";
  for (const auto& p : prompts) {
    out << p.prompt_id << '\t' << p.identity_id << '\t' << p.region << '\t'
        << to_string(p.attribute) << '\t' << to_string(p.status) << '\t' << p.language
        << '\t' << to_string(p.gender) << '\t' << text::tsv_escape(p.text) << '\n';
  }
}

std::vector<SentencePair> read_sos_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::vector<SentencePair> out;
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto f = text::split_tsv(line);
    if (f.size() != 11)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 11 fields");
    SentencePair p;
    p.pair_id = f[0];
    p.identity_id = f[1];
    p.region = f[2];
    p.attribute = attribute_from_string(f[3]);
    p.status = status_from_string(f[4]);
    p.language = f[5];
    p.gender = gender_from_string(f[6]);
    p.toxic_text = text::tsv_unescape(f[7]);
    p.nontoxic_text = text::tsv_unescape(f[8]);
    p.toxic_span = span_from_string(f[9]);
    p.nontoxic_span = span_from_string(f[10]);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<HonestPrompt> read_honest_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::vector<HonestPrompt> out;
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto f = text::split_tsv(line);
    if (f.size() != 8)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 8 fields");
    HonestPrompt p;
    p.prompt_id = f[0];
    p.identity_id = f[1];
    p.region = f[2];
    p.attribute = attribute_from_string(f[3]);
    p.status = status_from_string(f[4]);
    p.language = f[5];
    p.gender = gender_from_string(f[6]);
    p.text = text::tsv_unescape(f[7]);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace sosbench
