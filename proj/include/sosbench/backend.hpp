#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sosbench {

enum class BackendKind { kMlm, kGenerative, kInstruct };

std::string to_string(BackendKind k);
BackendKind backend_kind_from_string(const std::string& s);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_backoff{100};
};

struct BackendDescriptor {
  std::string name;
  BackendKind kind = BackendKind::kMlm;
  std::string base_url;
  std::optional<std::string> auth_token;
  int max_in_flight = 4;
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
};

struct TokenSpan {
  int token_index = 0;
  std::size_t char_start = 0;  // code points into the request text
  std::size_t char_end = 0;

  bool operator==(const TokenSpan&) const = default;
};

// One model endpoint. Implementations validate every response before
// returning; malformed data raises ProtocolError, network failure after the
// retry policy raises TransportError. Kind mismatches are usage errors.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  virtual std::vector<TokenSpan> tokenize(const std::string& text) = 0;

  // Natural-log probabilities, one per mask index; each index is scored with
  // only that token masked.
  virtual std::vector<double> masked_logprobs(const std::string& text,
                                              const std::vector<int>& mask_indices) = 0;

  virtual std::vector<std::string> complete(const std::string& prompt, int k,
                                            int max_new_tokens = 20) = 0;

  virtual std::string instruct(const std::string& prompt) = 0;
};

// Shared response validation (used by both the HTTP client and the mock).
void validate_token_spans(const std::string& text, const std::vector<TokenSpan>& spans);
void validate_logprobs(const std::vector<double>& values, std::size_t expected);

// HTTP client for the wire protocol; retries 429/5xx with jittered
// exponential backoff, treats other 4xx as fatal.
std::unique_ptr<Backend> make_http_backend(const BackendDescriptor& desc);

}  // namespace sosbench
