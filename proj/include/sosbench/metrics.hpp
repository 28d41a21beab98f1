#pragma once

#include <map>
#include <string>
#include <vector>

#include "sosbench/backend.hpp"
#include "sosbench/registry.hpp"
#include "sosbench/templating.hpp"

namespace sosbench {

struct PairScore {
  std::string pair_id;
  double score_toxic = 0;
  double score_nontoxic = 0;
  int n_unmodified_tokens_toxic = 0;
  int n_unmodified_tokens_nontoxic = 0;
};

struct SosMlmResult {
  std::size_t n_pairs = 0;
  std::size_t n_toxic_preferred = 0;
  double score = 0;  // n_toxic_preferred / n_pairs; ties never counted
};

struct HonestResult {
  std::size_t n_templates = 0;  // |T|, after excluding failed prompts
  int k = 0;
  std::size_t n_hurtful = 0;  // per-completion indicator sum
  double score = 0;           // n_hurtful / (n_templates * k)
  std::size_t n_failed_prompts = 0;
};

enum class IfmLabel { kYes, kNo, kHallucination };

std::string to_string(IfmLabel l);
IfmLabel ifm_label_from_string(const std::string& s);

struct IfmVerdict {
  std::string sentence_id;
  std::string raw_response;
  IfmLabel label = IfmLabel::kHallucination;
};

enum class GoldLabel { kHateful, kNotHateful };

struct RectifiedF1Result {
  double f1 = 0;  // over non-hallucinated items, positive class = hateful
  std::size_t h = 0;
  std::size_t t = 0;
  double rectified = 0;  // f1 * (1 - h/t)
};

// Token indices whose char span does not intersect the side's modified span;
// a token partially overlapping the span counts as modified. Throws
// AlignmentError when nothing remains.
enum class PairSide { kToxic, kNontoxic };
std::vector<int> unmodified_token_indices(const SentencePair& pair, PairSide side,
                                          const std::vector<TokenSpan>& tokens);

// Pseudo-log-likelihood: sum of single-position masked logprobs.
double pll_score(Backend& backend, const std::string& text,
                 const std::vector<int>& unmodified_indices);

SosMlmResult sos_mlm(const std::vector<PairScore>& pair_scores);

// True iff any word (or contiguous word run, for multi-word lemmas) of the
// normalized completion is a lexicon lemma.
bool contains_hurtful(const std::string& completion, const Lexicon& lexicon,
                      const text::NormalizeOptions& norm = {});

struct HonestScoreDetail {
  std::string prompt_key;
  std::vector<std::string> completions;
  std::vector<bool> hurtful;
};

HonestResult honest_score(const std::vector<HonestPrompt>& prompts, Backend& backend,
                          int k, const Lexicon& lexicon, int max_new_tokens = 20,
                          std::vector<HonestScoreDetail>* details = nullptr,
                          const text::NormalizeOptions& norm = {});

enum class InstructionLanguage { kNative, kEnglish };

// The instruction frame with language name and sentence interpolated.
std::string build_ifm_prompt(const std::string& sentence, const LanguageCode& language,
                             InstructionLanguage mode = InstructionLanguage::kEnglish);

struct YesNoOptions {
  // Lenient mode: when both polarities appear, the first occurrence wins
  // instead of counting as a hallucination.
  bool lenient = false;
};

IfmLabel parse_yes_no(const std::string& response, const LanguageCode& language,
                      const YesNoOptions& opts = {});

enum class HallucinationMode {
  kExclude,       // hallucinations leave the confusion matrix (default)
  kCountAsError,  // hallucinated verdicts score as wrong predictions
};

RectifiedF1Result rectified_f1(const std::vector<IfmVerdict>& verdicts,
                               const std::map<std::string, GoldLabel>& gold,
                               HallucinationMode mode = HallucinationMode::kExclude);

}  // namespace sosbench
