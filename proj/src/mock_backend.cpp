#include "sosbench/mock_backend.hpp"

#include <algorithm>
#include <stdexcept>

#include "sosbench/errors.hpp"
#include "sosbench/text.hpp"

namespace sosbench {

namespace {

void require_kind(const BackendDescriptor& desc, BackendKind want, const char* op) {
  if (desc.kind != want)
    throw std::logic_error(std::string(op) + " called on a " + to_string(desc.kind) +
                           " backend");
}

// Benign default vocabulary so that a hurtful-lexicon intersection is an
// explicit test fixture, never an accident.
const std::vector<std::string> kDefaultVocabulary = {
    "teacher", "doctor", "writer", "gardener", "painter", "baker",
    "nurse",   "pilot",  "farmer", "singer",   "tailor",  "clerk",
};

}  // namespace

MockBackend::MockBackend(BackendDescriptor desc, std::uint64_t seed)
    : desc_(std::move(desc)), seed_(seed), vocabulary_(kDefaultVocabulary) {}

std::vector<TokenSpan> MockBackend::tokenize(const std::string& text) {
  require_kind(desc_, BackendKind::kMlm, "tokenize");
  if (text.empty()) throw std::logic_error("tokenize: empty text");
  std::u32string cps = text::to_u32(text);
  std::vector<TokenSpan> spans;
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && (cps[i] == U' ' || cps[i] == U'\t' || cps[i] == U'\n'))
      ++i;
    if (i >= cps.size()) break;
    std::size_t start = i;
    while (i < cps.size() && cps[i] != U' ' && cps[i] != U'\t' && cps[i] != U'\n') ++i;
    spans.push_back({static_cast<int>(spans.size()), start, i});
  }
  return spans;
}

double MockBackend::logprob_table(const std::string& text,
                                  const std::string& token_text) const {
  std::uint64_t context_hash = text::stable_hash(text);
  std::uint64_t h = text::stable_hash(token_text, context_hash ^ seed_);
  return -(1.0 + static_cast<double>(h % 1000) / 1000.0);
}

std::vector<double> MockBackend::masked_logprobs(const std::string& text,
                                                 const std::vector<int>& mask_indices) {
  require_kind(desc_, BackendKind::kMlm, "masked_logprobs");
  auto spans = tokenize(text);
  std::vector<double> out;
  out.reserve(mask_indices.size());
  for (int idx : mask_indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= spans.size())
      throw std::logic_error("masked_logprobs: index out of range");
    auto ov = logprob_overrides_.find({text, idx});
    if (ov != logprob_overrides_.end()) {
      out.push_back(ov->second);
      continue;
    }
    const TokenSpan& s = spans[idx];
    out.push_back(logprob_table(text, text::cp_substr(text, s.char_start, s.char_end)));
  }
  validate_logprobs(out, mask_indices.size());
  return out;
}

std::vector<std::string> MockBackend::complete(const std::string& prompt, int k,
                                               int max_new_tokens) {
  require_kind(desc_, BackendKind::kGenerative, "complete");
  if (k < 1 || max_new_tokens < 1)
    throw std::logic_error("complete: k and max_new_tokens must be positive");
  auto ov = completion_overrides_.find(prompt);
  if (ov != completion_overrides_.end()) {
    std::vector<std::string> out = ov->second;
    out.resize(static_cast<std::size_t>(k), out.empty() ? "" : out.back());
    return out;
  }
  std::vector<std::string> out;
  std::uint64_t prompt_hash = text::stable_hash(prompt, seed_);
  for (int j = 0; j < k; ++j) {
    std::uint64_t h = text::stable_hash(std::to_string(j), prompt_hash);
    int n_words =
        1 + static_cast<int>(h % static_cast<std::uint64_t>(std::min(max_new_tokens, 3)));
    std::string completion;
    for (int w = 0; w < n_words; ++w) {
      h = text::stable_hash("w" + std::to_string(w), h);
      if (w) completion += ' ';
      completion += vocabulary_[h % vocabulary_.size()];
    }
    out.push_back(std::move(completion));
  }
  return out;
}

std::string MockBackend::instruct(const std::string& prompt) {
  require_kind(desc_, BackendKind::kInstruct, "instruct");
  (void)prompt;
  return instruct_response_;
}

void MockBackend::set_logprob(const std::string& text, int token_index, double logprob) {
  logprob_overrides_[{text, token_index}] = logprob;
}

void MockBackend::set_completions(const std::string& prompt,
                                  std::vector<std::string> completions) {
  completion_overrides_[prompt] = std::move(completions);
}

void MockBackend::set_instruct_response(std::string response) {
  instruct_response_ = std::move(response);
}

void MockBackend::set_completion_vocabulary(std::vector<std::string> words) {
  if (words.empty()) throw std::logic_error("empty completion vocabulary");
  vocabulary_ = std::move(words);
}

std::size_t MockBackend::accepted_request_count() const {
  std::lock_guard lock(mu_);
  return seen_request_ids_.size();
}

void MockBackend::note_request_id(const std::string& request_id) {
  std::lock_guard lock(mu_);
  seen_request_ids_.insert(request_id);
}

std::unique_ptr<MockBackend> make_mock_backend(const std::string& name, BackendKind kind,
                                               std::uint64_t seed) {
  BackendDescriptor desc;
  desc.name = name;
  desc.kind = kind;
  desc.base_url = "mock://" + name;
  return std::make_unique<MockBackend>(std::move(desc), seed);
}

}  // namespace sosbench
