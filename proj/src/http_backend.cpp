#include <atomic>
#include <charconv>
#include <cstdlib>
#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "sosbench/backend.hpp"
#include "sosbench/errors.hpp"
#include "sosbench/text.hpp"

namespace sosbench {

namespace {

using nlohmann::json;

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendDescriptor desc)
      : desc_(std::move(desc)), client_(desc_.base_url) {
    client_.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
                                       desc_.timeout)
                                       .count(),
                                   0);
    client_.set_read_timeout(
        std::chrono::duration_cast<std::chrono::seconds>(desc_.timeout).count(), 0);
    if (!desc_.auth_token) {
      if (const char* env = std::getenv("SOSBENCH_API_TOKEN"))
        desc_.auth_token = std::string(env);
    }
    std::random_device rd;
    id_prefix_ = std::to_string(rd()) + "-";
  }

  const BackendDescriptor& descriptor() const override { return desc_; }

  std::vector<TokenSpan> tokenize(const std::string& text) override {
    require_kind(BackendKind::kMlm, "tokenize");
    if (text.empty()) throw std::logic_error("tokenize: empty text");
    json resp = post("/v1/tokenize", json{{"text", text}});
    if (!resp.contains("tokens") || !resp["tokens"].is_array())
      throw ProtocolError("tokenize: missing 'tokens' array");
    std::vector<TokenSpan> spans;
    for (const auto& t : resp["tokens"]) {
      if (!t.contains("i") || !t.contains("start") || !t.contains("end"))
        throw ProtocolError("tokenize: malformed token object");
      spans.push_back({t["i"].get<int>(), t["start"].get<std::size_t>(),
                       t["end"].get<std::size_t>()});
    }
    validate_token_spans(text, spans);
    return spans;
  }

  std::vector<double> masked_logprobs(const std::string& text,
                                      const std::vector<int>& mask_indices) override {
    require_kind(BackendKind::kMlm, "masked_logprobs");
    json resp =
        post("/v1/masked_logprobs", json{{"mask_indices", mask_indices}, {"text", text}});
    if (!resp.contains("logprobs") || !resp["logprobs"].is_array())
      throw ProtocolError("masked_logprobs: missing 'logprobs' array");
    std::vector<double> values;
    for (const auto& v : resp["logprobs"]) {
      // Decimal strings on the wire; plain numbers tolerated.
      if (v.is_string()) {
        const std::string s = v.get<std::string>();
        double d = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
        if (ec != std::errc() || p != s.data() + s.size())
          throw ProtocolError("masked_logprobs: unparseable value '" + s + "'");
        values.push_back(d);
      } else if (v.is_number()) {
        values.push_back(v.get<double>());
      } else {
        throw ProtocolError("masked_logprobs: value neither string nor number");
      }
    }
    validate_logprobs(values, mask_indices.size());
    return values;
  }

  std::vector<std::string> complete(const std::string& prompt, int k,
                                    int max_new_tokens) override {
    require_kind(BackendKind::kGenerative, "complete");
    if (k < 1 || max_new_tokens < 1)
      throw std::logic_error("complete: k and max_new_tokens must be positive");
    json resp = post("/v1/complete", json{{"k", k},
                                          {"max_new_tokens", max_new_tokens},
                                          {"prompt", prompt}});
    if (!resp.contains("completions") || !resp["completions"].is_array())
      throw ProtocolError("complete: missing 'completions' array");
    std::vector<std::string> out;
    for (const auto& c : resp["completions"]) {
      if (!c.is_string()) throw ProtocolError("complete: non-string completion");
      out.push_back(c.get<std::string>());
    }
    if (out.size() != static_cast<std::size_t>(k))
      throw ProtocolError("complete: expected " + std::to_string(k) +
                          " completions, got " + std::to_string(out.size()));
    return out;
  }

  std::string instruct(const std::string& prompt) override {
    require_kind(BackendKind::kInstruct, "instruct");
    json resp = post("/v1/instruct", json{{"prompt", prompt}});
    if (!resp.contains("response") || !resp["response"].is_string())
      throw ProtocolError("instruct: missing 'response' string");
    return resp["response"].get<std::string>();
  }

 private:
  void require_kind(BackendKind want, const char* op) const {
    if (desc_.kind != want)
      throw std::logic_error(std::string(op) + " called on a " + to_string(desc_.kind) +
                             " backend");
  }

  json post(const std::string& path, const json& body) {
    const std::string payload = body.dump();
    const std::string request_id = id_prefix_ + std::to_string(next_id_++);
    std::mt19937_64 jitter_rng(text::stable_hash(request_id));
    std::string last_error;
    for (int attempt = 0; attempt <= desc_.retry.max_retries; ++attempt) {
      if (attempt > 0) {
        auto backoff = desc_.retry.base_backoff * (1LL << (attempt - 1));
        std::uniform_int_distribution<long long> jitter(0, backoff.count());
        std::this_thread::sleep_for(backoff + std::chrono::milliseconds(jitter(jitter_rng)));
      }
      httplib::Headers headers{{"X-Request-Id", request_id}};
      if (desc_.auth_token) headers.emplace("Authorization", "Bearer " + *desc_.auth_token);
      auto res = client_.Post(path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status >= 400)
        throw ProtocolError(path + ": fatal HTTP " + std::to_string(res->status));
      try {
        return json::parse(res->body);
      } catch (const json::exception& e) {
        throw ProtocolError(path + ": response is not JSON: " + e.what());
      }
    }
    throw TransportError(path + ": retries exhausted (" + last_error + ")");
  }

  BackendDescriptor desc_;
  httplib::Client client_;
  std::string id_prefix_;
  std::atomic<std::uint64_t> next_id_{0};
};

}  // namespace

std::unique_ptr<Backend> make_http_backend(const BackendDescriptor& desc) {
  return std::make_unique<HttpBackend>(desc);
}

}  // namespace sosbench
