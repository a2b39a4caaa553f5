#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "sqlsketch/errors.hpp"
#include "sqlsketch/gateway.hpp"

using namespace sqlsketch;
using namespace std::chrono_literals;

namespace {

struct FlakyTransport : Transport {
  int failures = 0;
  int calls = 0;
  ojson reply = {{"text", "SELECT 1"}};
  ojson post(const std::string&, const ojson&) override {
    if (++calls <= failures) throw TransportError("connection refused");
    return reply;
  }
};

EndpointConfig quick(int retries = 2) {
  EndpointConfig c;
  c.retries = retries;
  c.backoff = 0ms;
  return c;
}

std::shared_ptr<Endpoint> stub_endpoint(Role role, ojson script, std::size_t max_in_flight = 8,
                                        std::chrono::milliseconds delay = {}) {
  auto cfg = quick();
  cfg.max_in_flight = max_in_flight;
  return std::make_shared<Endpoint>(
      role, std::make_shared<StubTransport>(std::make_shared<StubScript>(std::move(script)), delay), cfg);
}

}  // namespace

TEST_CASE("endpoint config validation") {
  EndpointConfig c;
  CHECK_NOTHROW(c.validate());
  c.max_in_flight = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgumentError);
  c = {};
  c.retries = -1;
  CHECK_THROWS_AS(c.validate(), InvalidArgumentError);
  c = {};
  c.base_url = "localhost:80";
  CHECK_THROWS_AS(HttpTransport{c}, InvalidArgumentError);
}

TEST_CASE("transient failures are retried") {
  auto t = std::make_shared<FlakyTransport>();
  t->failures = 2;
  Endpoint ep(Role::Completer, t, quick(2));
  ep.enable_log(true);
  CHECK(ep.call("/complete", {{"prompt", "x"}})["text"] == "SELECT 1");
  CHECK(t->calls == 3);
  const auto log = ep.log();
  REQUIRE(log.size() == 3);
  CHECK(log[0].error == "connection refused");
  CHECK(log[2].attempt == 3);
  CHECK(log[2].response["text"] == "SELECT 1");
}

TEST_CASE("exhausted retries raise the role's error") {
  auto t = std::make_shared<FlakyTransport>();
  t->failures = 100;
  CHECK_THROWS_AS(Endpoint(Role::Completer, t, quick(1)).call("/complete", {}), CompleterUnavailableError);
  CHECK(t->calls == 2);
  CHECK_THROWS_AS(Endpoint(Role::Encoder, t, quick(0)).call("/encode", {}), EncoderUnavailableError);
  CHECK_THROWS_AS(Endpoint(Role::SketchProvider, t, quick(0)).call("/generate", {}), ProviderUnavailableError);
}

TEST_CASE("backoff doubles") {
  auto t = std::make_shared<FlakyTransport>();
  t->failures = 100;
  auto cfg = quick(2);
  cfg.backoff = 20ms;
  const auto t0 = std::chrono::steady_clock::now();
  CHECK_THROWS(Endpoint(Role::Aligner, t, cfg).call("/score", {}));
  CHECK(std::chrono::steady_clock::now() - t0 >= 60ms);
}

TEST_CASE("stub script matching") {
  StubScript s(ojson::parse(R"({"complete": {"exact": ["a", "b"], "~part": ["c"], "*": ["d"]}})"));
  CHECK(s.next("complete", "exact") == "a");
  CHECK(s.next("complete", "exact") == "b");
  CHECK(s.next("complete", "exact") == "b");
  CHECK(s.next("complete", "a part of it") == "c");
  CHECK(s.next("complete", "other") == "d");
  CHECK_FALSE(s.next("generate", "x").has_value());
  CHECK_THROWS_AS(StubScript(ojson::parse(R"({"complete": {"k": []}})")), InvalidArgumentError);
  CHECK_THROWS_AS(StubScript::load("/nonexistent.json"), InvalidArgumentError);
}

TEST_CASE("stub errors are transport failures; unknown keys are protocol errors") {
  auto ep = stub_endpoint(Role::Completer, ojson::parse(R"({"complete": {"p": [{"error": "boom"}, "SELECT 2"]}})"));
  CompleterClient c(ep);
  CHECK(c.request_completion("p") == "SELECT 2");  // second attempt
  CHECK_THROWS_AS(c.request_completion("unknown"), ProtocolError);
}

TEST_CASE("sketch and aligner clients") {
  auto ep = stub_endpoint(Role::SketchProvider, ojson::parse(R"({"generate": {"in": [["a", "b", "c"]]}})"));
  SketchClient sc(ep);
  CHECK(sc.request_candidates("in", 2) == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(sc.request_candidates("in", 0), InvalidArgumentError);

  auto aep = stub_endpoint(Role::Aligner, ojson::parse(R"({"score": {"x": [0.5], "bad": [1.5], "*": [0.1]}})"));
  AlignerClient ac(aep);
  const std::vector<std::string> seqs{"x", "y"};
  CHECK(ac.request_alignment_scores(seqs) == std::vector<double>{0.5, 0.1});
  const std::vector<std::string> bad{"bad"};
  CHECK_THROWS_AS(ac.request_alignment_scores(bad), ProtocolError);
  CHECK_THROWS_AS(ac.request_alignment_scores({}), InvalidArgumentError);

  struct Short : Transport {
    ojson post(const std::string&, const ojson&) override { return {{"scores", {0.1}}}; }
  };
  AlignerClient arity(std::make_shared<Endpoint>(Role::Aligner, std::make_shared<Short>(), quick()));
  CHECK_THROWS_AS(arity.request_alignment_scores(seqs), ProtocolError);
}

TEST_CASE("completer request bodies") {
  auto ep = stub_endpoint(Role::Completer, ojson::parse(R"({"complete": {"hello": ["SELECT 1"]}})"));
  CompleterClient native(ep);
  const auto nb = native.request_body("hello", {0.0, 1.0, 0.0});
  CHECK(nb.dump() == R"({"prompt":"hello","temperature":0.0,"top_p":1.0,"frequency_penalty":0.0})");

  CompleterClient chat(ep, CompleterMode::Chat, "some-model");
  const auto cb = chat.request_body("hello", {});
  CHECK(cb["model"] == "some-model");
  CHECK(cb["messages"][0]["role"] == "user");
  CHECK(cb["messages"][0]["content"] == "hello");
  CHECK(chat.request_completion("hello") == "SELECT 1");
  CHECK(native.request_completion("hello") == "SELECT 1");
}

TEST_CASE("in-flight bound holds under concurrency") {
  auto transport = std::make_shared<StubTransport>(
      std::make_shared<StubScript>(ojson::parse(R"({"complete": {"*": ["SELECT 1"]}})")), 5ms);
  auto cfg = quick();
  cfg.max_in_flight = 3;
  auto ep = std::make_shared<Endpoint>(Role::Completer, transport, cfg);
  std::vector<std::thread> threads;
  for (int i = 0; i < 12; ++i)
    threads.emplace_back([&] {
      CompleterClient c(ep);
      for (int k = 0; k < 3; ++k) c.request_completion("q");
    });
  for (auto& th : threads) th.join();
  CHECK(transport->request_count() == 36);
  CHECK(transport->max_observed_in_flight() <= 3);
  CHECK(transport->max_observed_in_flight() >= 2);
}

TEST_CASE("call capture scopes nest") {
  auto ep = stub_endpoint(Role::Completer, ojson::parse(R"({"complete": {"*": ["x"]}})"));
  CompleterClient c(ep);
  ScopedCallCapture outer;
  c.request_completion("a");
  {
    ScopedCallCapture inner;
    c.request_completion("b");
    CHECK(inner.records().size() == 1);
  }
  CHECK(outer.records().size() == 2);
  const auto j = to_json(outer.records()[0], false);
  CHECK(j["role"] == "completer");
  CHECK_FALSE(j.contains("latency_ms"));
}

TEST_CASE("HTTP wire format against a local server") {
  httplib::Server server;
  std::string seen_auth;
  ojson seen_body;
  int fail_first = 1;
  server.Post("/api/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = ojson::parse(req.body);
    res.set_content(R"({"hypotheses": ["SELECT t0.c1", "SELECT t0.c2"]})", "application/json");
  });
  server.Post("/api/complete", [&](const httplib::Request&, httplib::Response& res) {
    if (fail_first-- > 0) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"text": "SELECT 1"})", "application/json");
  });
  server.Post("/api/score", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad request", "text/plain");
  });
  server.Post("/api/encode", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto cfg = quick(2);
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/api/";
  cfg.auth_token = "secret";
  auto http = std::make_shared<HttpTransport>(cfg);

  SketchClient sc(std::make_shared<Endpoint>(Role::SketchProvider, http, cfg));
  CHECK(sc.request_candidates("task", 4) == std::vector<std::string>{"SELECT t0.c1", "SELECT t0.c2"});
  CHECK(seen_auth == "Bearer secret");
  CHECK(seen_body["input"] == "task");
  CHECK(seen_body["num_hypotheses"] == 4);

  CompleterClient cc(std::make_shared<Endpoint>(Role::Completer, http, cfg));
  CHECK(cc.request_completion("p") == "SELECT 1");

  AlignerClient ac(std::make_shared<Endpoint>(Role::Aligner, http, cfg));
  const std::vector<std::string> seqs{"s"};
  CHECK_THROWS_AS(ac.request_alignment_scores(seqs), ProtocolError);

  EncoderClient ec(std::make_shared<Endpoint>(Role::Encoder, http, cfg));
  CHECK_THROWS_AS(ec.encode(seqs), ProtocolError);

  server.stop();
  th.join();

  cfg.retries = 0;
  CompleterClient down(std::make_shared<Endpoint>(Role::Completer, std::make_shared<HttpTransport>(cfg), cfg));
  CHECK_THROWS_AS(down.request_completion("p"), CompleterUnavailableError);
}
