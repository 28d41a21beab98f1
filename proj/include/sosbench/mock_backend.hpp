#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "sosbench/backend.hpp"

namespace sosbench {

// In-process deterministic backend: whitespace tokenizer, hash-derived
// pseudo-logprobs, completions drawn from a fixture word list by seeded
// hash. A pure function of (seed, request), so golden tests are byte-stable.
// Fixture-table overrides take precedence everywhere.
class MockBackend : public Backend {
 public:
  MockBackend(BackendDescriptor desc, std::uint64_t seed);

  const BackendDescriptor& descriptor() const override { return desc_; }

  std::vector<TokenSpan> tokenize(const std::string& text) override;
  std::vector<double> masked_logprobs(const std::string& text,
                                      const std::vector<int>& mask_indices) override;
  std::vector<std::string> complete(const std::string& prompt, int k,
                                    int max_new_tokens) override;
  std::string instruct(const std::string& prompt) override;

  // Fixture overrides.
  void set_logprob(const std::string& text, int token_index, double logprob);
  void set_completions(const std::string& prompt, std::vector<std::string> completions);
  void set_instruct_response(std::string response);  // fixed answer for every prompt
  void set_completion_vocabulary(std::vector<std::string> words);

  // The value masked_logprobs would return for one index, exposed so oracle
  // code can read the probability table without going through the client path.
  double logprob_table(const std::string& text, const std::string& token_text) const;

  // Request-id accounting: how many distinct ids were accepted. Re-sent ids
  // are answered but counted once.
  std::size_t accepted_request_count() const;
  void note_request_id(const std::string& request_id);

  std::uint64_t seed() const { return seed_; }

 private:
  BackendDescriptor desc_;
  std::uint64_t seed_;
  std::vector<std::string> vocabulary_;
  std::map<std::pair<std::string, int>, double> logprob_overrides_;
  std::map<std::string, std::vector<std::string>> completion_overrides_;
  std::string instruct_response_ = "No";
  mutable std::mutex mu_;
  std::set<std::string> seen_request_ids_;
};

std::unique_ptr<MockBackend> make_mock_backend(const std::string& name, BackendKind kind,
                                               std::uint64_t seed);

}  // namespace sosbench
