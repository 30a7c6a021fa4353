#include <catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <thread>

#include "opinionforge/http_backend.hpp"
#include "opinionforge/metrics.hpp"
#include "opinionforge/mock_backend.hpp"
#include "opinionforge/mrc.hpp"
#include "opinionforge/wire_server.hpp"

using namespace opinionforge;
using namespace std::chrono_literals;

namespace {

// Runs an httplib server on an ephemeral port for the lifetime of the object.
class TestServer {
 public:
  explicit TestServer(std::unique_ptr<httplib::Server> server) : server_(std::move(server)) {
    port_ = server_->bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
  }
  ~TestServer() {
    server_->stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  httplib::Server& raw() { return *server_; }

 private:
  std::unique_ptr<httplib::Server> server_;
  int port_ = 0;
  std::thread thread_;
};

BackendConfig http_config(const std::string& url, int retries = 3) {
  BackendConfig c;
  c.kind = BackendKind::Http;
  c.base_url = url;
  c.timeout = 5000ms;
  c.max_retries = retries;
  c.backoff_base = 250ms;
  return c;
}

}  // namespace

TEST_CASE("http backend against the served mock matches the mock", "[http]") {
  MockBackend mock(5);
  TestServer server(make_wire_server(mock));
  HttpBackend http(http_config(server.url()));
  CHECK(http.healthy());

  const std::string context = "Battery life is great but the fan is loud";
  auto local = mock.qa("How is battery?", context);
  auto remote = http.qa("How is battery?", context);
  CHECK(remote.tokenization.tokens == local.tokenization.tokens);
  CHECK(remote.tokenization.sep_index == local.tokenization.sep_index);
  CHECK(remote.tokenization.char_offsets == local.tokenization.char_offsets);
  CHECK(remote.distribution.start_probs == local.distribution.start_probs);
  CHECK(remote.distribution.end_probs == local.distribution.end_probs);

  CHECK(http.summarize("First. Second.\n\nThird.", 10) == "First. Third.");
  auto vectors = http.embed({"a b", "c d", "a b"});
  REQUIRE(vectors.size() == 3);
  CHECK(vectors[0] == vectors[2]);
  CHECK(argmax_class(http.sentiment("great excellent perfect")) == 5);
  for (const char* text : {"awful", "fine", "good", "", "great great"}) {
    auto probs = http.sentiment(text);
    CHECK_FALSE(check_sentiment({probs.begin(), probs.end()}).has_value());
  }
  CHECK(http.retries_performed() == 0);
}

TEST_CASE("http backend retries 5xx responses with backoff", "[http]") {
  std::atomic<int> hits{0};
  auto server = std::make_unique<httplib::Server>();
  server->Post("/sentiment", [&](const httplib::Request&, httplib::Response& res) {
    if (hits++ < 2) {
      res.status = 500;
      res.set_content(R"({"error":"warming up"})", "application/json");
      return;
    }
    res.set_content(R"({"probs":[0,0,0,0,1,0]})", "application/json");
  });
  TestServer ts(std::move(server));
  HttpBackend http(http_config(ts.url(), 3));
  auto start = std::chrono::steady_clock::now();
  auto probs = http.sentiment("anything");
  auto waited = std::chrono::steady_clock::now() - start;
  CHECK(argmax_class(probs) == 4);
  CHECK(hits.load() == 3);
  CHECK(http.retries_performed() == 2);
  CHECK(waited >= 750ms);  // 250 + 500
}

TEST_CASE("http backend gives up after max_retries", "[http]") {
  std::atomic<int> hits{0};
  auto server = std::make_unique<httplib::Server>();
  server->Post("/summarize", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content("{not json", "application/json");
  });
  TestServer ts(std::move(server));
  auto config = http_config(ts.url(), 1);
  config.backoff_base = 10ms;
  HttpBackend http(config);
  CHECK_THROWS_AS(http.summarize("x", 5), BackendUnavailable);
  CHECK(hits.load() == 2);
}

TEST_CASE("http backend schema violations are protocol errors and not retried", "[http]") {
  std::atomic<int> hits{0};
  auto server = std::make_unique<httplib::Server>();
  server->Post("/sentiment", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content(R"({"probs":[0.2,0.2,0.2,0.2,0.2]})", "application/json");
  });
  server->Post("/qa", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(
        R"({"tokens":["[CLS]","q","[SEP]","a","[SEP]"],"sep_index":2,)"
        R"("start_probs":[0.2,0.2,0.2,0.2],"end_probs":[0.2,0.2,0.2,0.2,0.2],)"
        R"("offsets":[null,null,null,[0,1],null]})",
        "application/json");
  });
  server->Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vectors":[[1,0],[1]],"dim":2})", "application/json");
  });
  server->Post("/summarize", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"text":"wrong field"})", "application/json");
  });
  TestServer ts(std::move(server));
  HttpBackend http(http_config(ts.url(), 3));
  CHECK_THROWS_AS(http.sentiment("x"), ProtocolError);
  CHECK(hits.load() == 1);
  CHECK_THROWS_AS(http.qa("q", "a"), ProtocolError);
  CHECK_THROWS_AS(http.embed({"a", "b"}), ProtocolError);
  CHECK_THROWS_AS(http.summarize("a", 3), ProtocolError);
  CHECK(http.retries_performed() == 0);
  CHECK_FALSE(http.healthy());
}

TEST_CASE("http backend with no server is unavailable", "[http]") {
  // Grab a free port, then release it so nothing listens there.
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  auto config = http_config("http://127.0.0.1:" + std::to_string(port), 1);
  config.backoff_base = 1ms;
  config.timeout = 500ms;
  HttpBackend http(config);
  CHECK_THROWS_AS(http.sentiment("x"), BackendUnavailable);
  CHECK_FALSE(http.healthy());
}

TEST_CASE("wire server answers bad requests with an error body", "[http]") {
  MockBackend mock;
  TestServer server(make_wire_server(mock));
  httplib::Client client(server.url());
  auto res = client.Post("/qa", "{\"question\": 3}", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(nlohmann::json::parse(res->body).contains("error"));
  auto bad_context = client.Post("/qa", R"({"question":"q","context":" "})", "application/json");
  REQUIRE(bad_context);
  CHECK(bad_context->status == 500);
  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(nlohmann::json::parse(health->body) == nlohmann::json{{"status", "ok"}, {"protocol", "1"}});
}

TEST_CASE("http backend handles concurrent callers", "[http]") {
  MockBackend mock(9);
  TestServer server(make_wire_server(mock));
  auto config = http_config(server.url());
  config.max_concurrency = 2;
  HttpBackend http(config);
  Corpus corpus;
  for (int i = 0; i < 6; ++i) {
    corpus.reviews.push_back(*make_review("P", "Review " + std::to_string(i) + " has a fine screen", 4));
  }
  auto queries = generate_questions(default_aspects());
  ExtractionOptions opts;
  opts.workers = 4;
  auto remote = extract_opinions(corpus, queries, http, opts);
  auto local = extract_opinions(corpus, queries, mock, {});
  REQUIRE(remote.spans.size() == local.spans.size());
  for (std::size_t i = 0; i < local.spans.size(); ++i) {
    CHECK(remote.spans[i].text == local.spans[i].text);
    CHECK(remote.spans[i].confidence == local.spans[i].confidence);
  }
}
