#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "sosbench/backend.hpp"
#include "sosbench/errors.hpp"
#include "sosbench/mock_backend.hpp"

using namespace sosbench;
using nlohmann::json;

TEST_CASE("mock whitespace tokenizer") {
  auto mock = make_mock_backend("m", BackendKind::kMlm, 1);
  auto spans = mock->tokenize("a b c");
  REQUIRE(spans.size() == 3);
  CHECK(spans[0] == TokenSpan{0, 0, 1});
  CHECK(spans[1] == TokenSpan{1, 2, 3});
  CHECK(spans[2] == TokenSpan{2, 4, 5});
  CHECK_THROWS_AS(mock->tokenize(""), std::logic_error);
  // Arabic text tokenizes by code points.
  auto ar = mock->tokenize("كلب أبيض");
  REQUIRE(ar.size() == 2);
  CHECK(ar[1].char_start == 4);
  CHECK(ar[1].char_end == 8);
}

TEST_CASE("token span validation rejects protocol violations") {
  CHECK_THROWS_AS(validate_token_spans("a b", {{0, 0, 2}, {1, 1, 3}}), ProtocolError);
  CHECK_THROWS_AS(validate_token_spans("a b", {{0, 0, 1}}), ProtocolError);  // 'b' uncovered
  CHECK_THROWS_AS(validate_token_spans("ab", {{0, 0, 5}}), ProtocolError);   // out of bounds
  CHECK_THROWS_AS(validate_token_spans("ab", {{1, 0, 2}}), ProtocolError);   // bad index
  CHECK_NOTHROW(validate_token_spans("a b", {{0, 0, 1}, {1, 2, 3}}));
}

TEST_CASE("mock masked logprobs: overrides and determinism") {
  auto mock = make_mock_backend("m", BackendKind::kMlm, 7);
  mock->set_logprob("x y", 1, -2.3);
  auto lp = mock->masked_logprobs("x y", {1});
  REQUIRE(lp.size() == 1);
  CHECK(lp[0] == doctest::Approx(-2.3));
  CHECK(mock->masked_logprobs("x y", {}).empty());

  auto a = mock->masked_logprobs("alpha beta gamma", {0, 1, 2});
  auto b = mock->masked_logprobs("alpha beta gamma", {0, 1, 2});
  CHECK(a == b);
  for (double v : a) {
    CHECK(v <= -1.0);
    CHECK(v >= -2.0);
  }
  // Different seed, different table.
  auto other = make_mock_backend("m", BackendKind::kMlm, 8);
  CHECK(other->masked_logprobs("alpha beta gamma", {0, 1, 2}) != a);
}

TEST_CASE("logprob validation") {
  CHECK_THROWS_WITH_AS(validate_logprobs({0.5}, 1), doctest::Contains("logprob > 0"),
                       ProtocolError);
  CHECK_THROWS_AS(validate_logprobs({-1.0}, 2), ProtocolError);
  CHECK_NOTHROW(validate_logprobs({-1.0, 0.0}, 2));
}

TEST_CASE("mock completions are seeded and repeatable") {
  auto mock = make_mock_backend("g", BackendKind::kGenerative, 42);
  auto a = mock->complete("prompt", 3, 20);
  auto b = mock->complete("prompt", 3, 20);
  REQUIRE(a.size() == 3);
  CHECK(a == b);
  auto one = mock->complete("prompt", 1, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].find(' ') == std::string::npos);  // single token
  CHECK(make_mock_backend("g", BackendKind::kGenerative, 43)->complete("prompt", 3, 20) != a);
}

TEST_CASE("backend kind gates operations") {
  auto mlm = make_mock_backend("m", BackendKind::kMlm, 1);
  CHECK_THROWS_AS(mlm->complete("p", 1, 1), std::logic_error);
  CHECK_THROWS_AS(mlm->instruct("p"), std::logic_error);
  auto gen = make_mock_backend("g", BackendKind::kGenerative, 1);
  CHECK_THROWS_AS(gen->tokenize("a"), std::logic_error);
  auto inst = make_mock_backend("i", BackendKind::kInstruct, 1);
  inst->set_instruct_response("Yes");
  CHECK(inst->instruct("anything") == "Yes");
}

TEST_CASE("mock request-id accounting accepts duplicates once") {
  auto mock = make_mock_backend("m", BackendKind::kMlm, 1);
  mock->note_request_id("r1");
  mock->note_request_id("r1");
  mock->note_request_id("r2");
  CHECK(mock->accepted_request_count() == 2);
}

// ---------------------------------------------------------------------------
// HTTP client against a recording in-process server.

namespace {

struct WireServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::vector<std::pair<std::string, std::string>> requests;  // (path, body)
  std::mutex mu;

  WireServer() {
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~WireServer() {
    server.stop();
    thread.join();
  }

  void record(const httplib::Request& req) {
    std::lock_guard lock(mu);
    requests.emplace_back(req.path, req.body);
  }

  BackendDescriptor descriptor(BackendKind kind) {
    BackendDescriptor d;
    d.name = "wire";
    d.kind = kind;
    d.base_url = "http://127.0.0.1:" + std::to_string(port);
    d.retry.max_retries = 3;
    d.retry.base_backoff = std::chrono::milliseconds(1);
    return d;
  }
};

}  // namespace

TEST_CASE("http tokenize round-trip sends the exact request body") {
  WireServer ws;
  ws.server.Post("/v1/tokenize", [&](const httplib::Request& req, httplib::Response& res) {
    ws.record(req);
    res.set_content(R"({"tokens":[{"i":0,"start":0,"end":1},{"i":1,"start":2,"end":3}]})",
                    "application/json");
  });
  auto backend = make_http_backend(ws.descriptor(BackendKind::kMlm));
  auto spans = backend->tokenize("a b");
  REQUIRE(spans.size() == 2);
  CHECK(spans[1] == TokenSpan{1, 2, 3});
  REQUIRE(ws.requests.size() == 1);
  CHECK(ws.requests[0].second == R"({"text":"a b"})");
}

TEST_CASE("http masked_logprobs parses decimal strings and validates") {
  WireServer ws;
  std::string body = R"({"logprobs":["-2.3025","-0.5"]})";
  ws.server.Post("/v1/masked_logprobs",
                 [&](const httplib::Request& req, httplib::Response& res) {
                   ws.record(req);
                   res.set_content(body, "application/json");
                 });
  auto backend = make_http_backend(ws.descriptor(BackendKind::kMlm));
  auto lp = backend->masked_logprobs("a b", {0, 1});
  REQUIRE(lp.size() == 2);
  CHECK(lp[0] == doctest::Approx(-2.3025));
  CHECK(ws.requests[0].second == R"({"mask_indices":[0,1],"text":"a b"})");

  body = R"({"logprobs":["0.5","-1"]})";
  CHECK_THROWS_WITH_AS(backend->masked_logprobs("a b", {0, 1}),
                       doctest::Contains("logprob > 0"), ProtocolError);
  body = R"({"logprobs":["-1"]})";
  CHECK_THROWS_WITH_AS(backend->masked_logprobs("a b", {0, 1}),
                       doctest::Contains("count mismatch"), ProtocolError);
}

TEST_CASE("http complete enforces the k contract") {
  WireServer ws;
  std::string body = R"({"completions":["x","y"]})";
  ws.server.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
    ws.record(req);
    res.set_content(body, "application/json");
  });
  auto backend = make_http_backend(ws.descriptor(BackendKind::kGenerative));
  CHECK(backend->complete("p", 2, 20) == std::vector<std::string>{"x", "y"});
  CHECK(ws.requests[0].second == R"({"k":2,"max_new_tokens":20,"prompt":"p"})");
  CHECK_THROWS_AS(backend->complete("p", 3, 20), ProtocolError);
}

TEST_CASE("http instruct returns the raw response") {
  WireServer ws;
  ws.server.Post("/v1/instruct", [&](const httplib::Request& req, httplib::Response& res) {
    ws.record(req);
    res.set_content(R"({"response":"As an AI model I cannot..."})", "application/json");
  });
  auto backend = make_http_backend(ws.descriptor(BackendKind::kInstruct));
  CHECK(backend->instruct("p") == "As an AI model I cannot...");
  CHECK(ws.requests[0].second == R"({"prompt":"p"})");
}

TEST_CASE("http retries 429 and 5xx, keeping the request id") {
  WireServer ws;
  std::atomic<int> hits{0};
  std::vector<std::string> ids;
  std::mutex mu;
  ws.server.Post("/v1/instruct", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(mu);
      ids.push_back(req.get_header_value("X-Request-Id"));
    }
    int n = ++hits;
    if (n == 1) {
      res.status = 429;
    } else if (n == 2) {
      res.status = 503;
    } else {
      res.set_content(R"({"response":"Yes"})", "application/json");
    }
  });
  auto backend = make_http_backend(ws.descriptor(BackendKind::kInstruct));
  CHECK(backend->instruct("p") == "Yes");
  CHECK(hits == 3);
  REQUIRE(ids.size() == 3);
  CHECK(ids[0] == ids[1]);
  CHECK(ids[1] == ids[2]);
  CHECK_FALSE(ids[0].empty());
}

TEST_CASE("http gives up after the retry budget") {
  WireServer ws;
  ws.server.Post("/v1/instruct", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
  });
  auto backend = make_http_backend(ws.descriptor(BackendKind::kInstruct));
  CHECK_THROWS_AS(backend->instruct("p"), TransportError);
}

TEST_CASE("http treats other 4xx as fatal without retry") {
  WireServer ws;
  std::atomic<int> hits{0};
  ws.server.Post("/v1/instruct", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 403;
  });
  auto backend = make_http_backend(ws.descriptor(BackendKind::kInstruct));
  CHECK_THROWS_AS(backend->instruct("p"), ProtocolError);
  CHECK(hits == 1);
}

TEST_CASE("http sends bearer auth when a token is set") {
  WireServer ws;
  std::string auth;
  ws.server.Post("/v1/instruct", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"response":"ok"})", "application/json");
  });
  BackendDescriptor desc = ws.descriptor(BackendKind::kInstruct);
  desc.auth_token = "sekrit";
  make_http_backend(desc)->instruct("p");
  CHECK(auth == "Bearer sekrit");
}

TEST_CASE("http rejects overlapping server token spans") {
  WireServer ws;
  ws.server.Post("/v1/tokenize", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"tokens":[{"i":0,"start":0,"end":2},{"i":1,"start":1,"end":3}]})",
                    "application/json");
  });
  auto backend = make_http_backend(ws.descriptor(BackendKind::kMlm));
  CHECK_THROWS_WITH_AS(backend->tokenize("a b"), doctest::Contains("overlapping"),
                       ProtocolError);
}
