#include "sosbench/backend.hpp"

#include <cmath>

#include "sosbench/errors.hpp"
#include "sosbench/text.hpp"

namespace sosbench {

std::string to_string(BackendKind k) {
  switch (k) {
    case BackendKind::kMlm: return "mlm";
    case BackendKind::kGenerative: return "generative";
    case BackendKind::kInstruct: return "instruct";
  }
  return "?";
}

BackendKind backend_kind_from_string(const std::string& s) {
  if (s == "mlm") return BackendKind::kMlm;
  if (s == "generative") return BackendKind::kGenerative;
  if (s == "instruct") return BackendKind::kInstruct;
  throw ConfigError("unknown backend kind: " + s);
}

void validate_token_spans(const std::string& text, const std::vector<TokenSpan>& spans) {
  std::u32string cps = text::to_u32(text);
  std::size_t prev_end = 0;
  int expected_index = 0;
  for (const auto& s : spans) {
    if (s.token_index != expected_index++)
      throw ProtocolError("token indices not consecutive from 0");
    if (s.char_start >= s.char_end) throw ProtocolError("empty or inverted token span");
    if (s.char_end > cps.size()) throw ProtocolError("token span out of bounds");
    if (s.char_start < prev_end) throw ProtocolError("overlapping token spans");
    // Gaps may hold only whitespace.
    for (std::size_t i = prev_end; i < s.char_start; ++i)
      if (cps[i] != U' ' && cps[i] != U'\t' && cps[i] != U'\n' && cps[i] != U'\r')
        throw ProtocolError("non-whitespace character not covered by any token");
    prev_end = s.char_end;
  }
  for (std::size_t i = prev_end; i < cps.size(); ++i)
    if (cps[i] != U' ' && cps[i] != U'\t' && cps[i] != U'\n' && cps[i] != U'\r')
      throw ProtocolError("non-whitespace character not covered by any token");
}

void validate_logprobs(const std::vector<double>& values, std::size_t expected) {
  if (values.size() != expected)
    throw ProtocolError("logprob count mismatch: got " + std::to_string(values.size()) +
                        ", want " + std::to_string(expected));
  for (double v : values) {
    if (!std::isfinite(v)) throw ProtocolError("non-finite logprob");
    if (v > 0.0) throw ProtocolError("logprob > 0");
  }
}

}  // namespace sosbench
