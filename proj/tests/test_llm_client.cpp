#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <thread>

#include "relcat/corpus.hpp"
#include "relcat/error.hpp"
#include "relcat/llm_client.hpp"
#include "support/fake_transport.hpp"

using namespace relcat;
namespace fs = std::filesystem;

namespace {

ProviderConfig provider(std::string id = "gpt-4o") {
  ProviderConfig cfg;
  cfg.provider_id = std::move(id);
  cfg.endpoint_url = "https://example.invalid/v1/chat/completions";
  cfg.model_name = "gpt-4o-2024-08-06";
  cfg.api_key_env = "RELCAT_TEST_KEY";
  cfg.max_retries = 3;
  return cfg;
}

CleanDocument doc_with(std::size_t paragraphs) {
  std::string text;
  for (std::size_t i = 0; i < paragraphs; ++i) {
    if (i) text += "\n\n";
    text += "Paragraph " + std::to_string(i) + " states a fact. It has two sentences.";
  }
  return clean_document({"doc", text});
}

struct Harness {
  fs::path dir = fake::temp_dir("llm");
  ResponseCache cache{dir / "cache"};
  fake::Transport transport;
  std::vector<std::chrono::milliseconds> sleeps;
  std::mutex sleeps_mu;
  LlmClient client{cache, transport,
                   [this](std::chrono::milliseconds d) {
                     std::lock_guard lock(sleeps_mu);
                     sleeps.push_back(d);
                   },
                   fake::env_with("RELCAT_TEST_KEY", "sk-test"), fake::fixed_clock()};

  ~Harness() { fs::remove_all(dir); }

  PromptText prompt(std::size_t para = 0) {
    static const CleanDocument d = doc_with(10);
    return build_prompt(Taxonomy::builtin(), d.doc_id, d.paragraphs.at(para));
  }
};

}  // namespace

TEST_CASE("cache keys are pure and cover temperature") {
  const auto k = make_cache_key("p", "m", 0.0, "prompt");
  CHECK(k == make_cache_key("p", "m", 0.0, "prompt"));
  CHECK(k.size() == 64);
  CHECK(k != make_cache_key("p", "m", 0.7, "prompt"));
  CHECK(k != make_cache_key("q", "m", 0.0, "prompt"));
  CHECK(k != make_cache_key("p", "n", 0.0, "prompt"));
  CHECK(k != make_cache_key("p", "m", 0.0, "prompt "));
}

TEST_CASE("cache modes") {
  Harness h;
  const auto cfg = provider();
  SUBCASE("replay with an empty cache names the sentence range") {
    try {
      h.client.complete(h.prompt(2), cfg, CacheMode::kReplay);
      FAIL("expected CacheMiss");
    } catch (const CacheMiss& e) {
      const std::string msg = e.what();
      CHECK(msg.find("gpt-4o") != std::string::npos);
      CHECK(msg.find("doc.par002.s000") != std::string::npos);
      CHECK(msg.find("doc.par002.s001") != std::string::npos);
    }
    CHECK(h.transport.calls() == 0);
  }
  SUBCASE("record twice: one call, one entry; replay returns the same bytes") {
    const std::string first = h.client.complete(h.prompt(), cfg, CacheMode::kRecord);
    const std::string second = h.client.complete(h.prompt(), cfg, CacheMode::kRecord);
    CHECK(first == second);
    CHECK(h.transport.calls() == 1);
    CHECK(h.cache.entries("gpt-4o").size() == 1);
    CHECK(h.client.complete(h.prompt(), cfg, CacheMode::kReplay) == first);
    CHECK(h.transport.calls() == 1);
  }
  SUBCASE("live always calls and refreshes") {
    h.client.complete(h.prompt(), cfg, CacheMode::kLive);
    h.client.complete(h.prompt(), cfg, CacheMode::kLive);
    CHECK(h.transport.calls() == 2);
    CHECK(h.cache.entries("gpt-4o").size() == 1);
  }
}

TEST_CASE("request shape and key handling") {
  Harness h;
  h.client.complete(h.prompt(), provider(), CacheMode::kRecord);
  const auto req = h.transport.last_request();
  CHECK(req.url == "https://example.invalid/v1/chat/completions");
  const auto body = nlohmann::json::parse(req.body);
  CHECK(body["model"] == "gpt-4o-2024-08-06");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["messages"][0]["role"] == "user");
  bool auth = false;
  for (const auto& [k, v] : req.headers) auth |= (k == "Authorization" && v == "Bearer sk-test");
  CHECK(auth);
  // The key never reaches the cache.
  for (const auto& entry : fs::recursive_directory_iterator(h.dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path());
    std::string content((std::istreambuf_iterator<char>(in)), {});
    CHECK(content.find("sk-test") == std::string::npos);
  }
}

TEST_CASE("retries: backoff on 429/5xx and connection failures") {
  Harness h;
  h.transport.force({429, 503, -1});
  const std::string text = h.client.complete(h.prompt(), provider(), CacheMode::kRecord);
  CHECK_FALSE(text.empty());
  CHECK(h.transport.calls() == 4);
  using ms = std::chrono::milliseconds;
  CHECK(h.sleeps == std::vector<ms>{ms(1000), ms(2000), ms(4000)});
  const auto entries = h.cache.entries("gpt-4o");
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].attempt_count == 4);
}

TEST_CASE("retries exhausted raise TransportError") {
  Harness h;
  h.transport.force({500, 500, 500, 500});
  CHECK_THROWS_AS(h.client.complete(h.prompt(), provider(), CacheMode::kRecord), TransportError);
  CHECK(h.transport.calls() == 4);
  CHECK(h.cache.entries("gpt-4o").empty());
}

TEST_CASE("auth failures are not retried") {
  Harness h;
  SUBCASE("rejected key") {
    h.transport.force({401});
    CHECK_THROWS_AS(h.client.complete(h.prompt(), provider(), CacheMode::kRecord), AuthError);
    CHECK(h.transport.calls() == 1);
  }
  SUBCASE("missing environment variable") {
    auto cfg = provider();
    cfg.api_key_env = "RELCAT_UNSET_VARIABLE";
    try {
      h.client.complete(h.prompt(), cfg, CacheMode::kRecord);
      FAIL("expected AuthError");
    } catch (const AuthError& e) {
      CHECK(std::string(e.what()).find("RELCAT_UNSET_VARIABLE") != std::string::npos);
    }
    CHECK(h.transport.calls() == 0);
  }
  SUBCASE("other client errors fail fast") {
    h.transport.force({400});
    CHECK_THROWS_AS(h.client.complete(h.prompt(), provider(), CacheMode::kRecord), TransportError);
    CHECK(h.transport.calls() == 1);
  }
}

TEST_CASE("run_corpus: one entry per paragraph, ordered results") {
  Harness h;
  const auto doc = doc_with(3);
  h.transport.set_delay(std::chrono::milliseconds(5));
  const auto results = h.client.run_corpus(doc, provider(), 3, CacheMode::kRecord);
  REQUIRE(results.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(results[i].first == i);
    CHECK(results[i].second.find("Paragraph " + std::to_string(i)) != std::string::npos);
  }
  CHECK(h.cache.entries("gpt-4o").size() == 3);
}

TEST_CASE("run_corpus: parallelism bounds requests in flight") {
  Harness h;
  h.transport.set_delay(std::chrono::milliseconds(20));
  h.client.run_corpus(doc_with(10), provider(), 4, CacheMode::kRecord);
  CHECK(h.transport.calls() == 10);
  CHECK(h.transport.max_in_flight() <= 4);
  CHECK(h.transport.max_in_flight() >= 1);
}

TEST_CASE("run_corpus: failures are aggregated and a re-run fills only the gap") {
  Harness h;
  auto cfg = provider();
  cfg.max_retries = 0;
  // Fail every request for paragraph 1.
  fake::Transport flaky([](const HttpRequest& req) -> HttpResponse {
    if (fake::prompt_of(req).find("Paragraph 1 states") != std::string::npos) return {500, "{}"};
    return fake::Transport::echo_paragraph(req);
  });
  LlmClient client(h.cache, flaky, [](auto) {}, fake::env_with("RELCAT_TEST_KEY", "k"),
                   fake::fixed_clock());
  try {
    client.run_corpus(doc_with(3), cfg, 2, CacheMode::kRecord);
    FAIL("expected CorpusRunError");
  } catch (const CorpusRunError& e) {
    REQUIRE(e.failures().size() == 1);
    CHECK(e.failures()[0].para_index == 1);
    CHECK(e.code() == ErrorCode::kTransport);
  }
  CHECK(h.cache.entries("gpt-4o").size() == 2);
  const int before = h.transport.calls();
  h.client.run_corpus(doc_with(3), cfg, 2, CacheMode::kRecord);
  CHECK(h.transport.calls() - before == 1);
  CHECK(h.cache.entries("gpt-4o").size() == 3);
}

TEST_CASE("cache integrity: entries re-hash to their keys") {
  Harness h;
  h.client.run_corpus(doc_with(2), provider(), 1, CacheMode::kRecord);
  for (const auto& e : h.cache.entries("gpt-4o")) {
    CHECK(make_cache_key(e.provider_id, e.model_name, e.temperature, e.prompt) == e.cache_key);
    CHECK(fs::exists(h.cache.entry_path("gpt-4o", e.cache_key)));
  }
  // A tampered entry is rejected rather than served.
  const auto entry = h.cache.entries("gpt-4o").at(0);
  Exchange bad = entry;
  bad.prompt += " tampered";
  {
    std::ofstream out(h.cache.entry_path("gpt-4o", entry.cache_key), std::ios::trunc);
    out << exchange_to_json(bad);
  }
  CHECK_THROWS_AS(h.cache.lookup("gpt-4o", entry.cache_key), FormatError);
}

TEST_CASE("exchange JSON round trip") {
  Exchange e;
  e.cache_key = "k";
  e.provider_id = "p";
  e.model_name = "m";
  e.temperature = 0.25;
  e.prompt = "line\n\"quoted\"";
  e.doc_id = "d";
  e.para_index = 4;
  e.response_text = "Sentence: x \xCE\xB1";
  e.timestamp = "t";
  e.attempt_count = 2;
  const Exchange back = exchange_from_json(exchange_to_json(e));
  CHECK(back.prompt == e.prompt);
  CHECK(back.response_text == e.response_text);
  CHECK(back.temperature == doctest::Approx(0.25));
  CHECK(back.para_index == 4);
  CHECK(back.attempt_count == 2);
}

TEST_CASE("providers file validation") {
  const auto pf = parse_providers(
      R"({"cache_dir":"c","providers":[{"provider_id":"a","model_name":"m","api_key_env":"K"}]})",
      "/base");
  CHECK(pf.cache_dir == fs::path("/base/c"));
  CHECK(pf.get("a").max_retries == 3);
  CHECK(pf.get("a").temperature == 0.0);
  CHECK_THROWS_AS(pf.get("zzz"), ConfigError);
  CHECK_THROWS_AS(parse_providers(R"({"providers":[{"provider_id":"a","model_name":"m",
                                     "api_key":"sk-secret"}]})", "."),
                  ConfigError);
  CHECK_THROWS_AS(parse_providers(R"({"providers":[{"provider_id":"a/b","model_name":"m"}]})", "."),
                  ConfigError);
  CHECK_THROWS_AS(parse_providers("not json", "."), ConfigError);
  CHECK(parse_cache_mode("replay") == CacheMode::kReplay);
  CHECK_THROWS_AS(parse_cache_mode("sometimes"), ConfigError);
}

TEST_CASE("http transport against a local server") {
  httplib::Server server;
  std::string seen_auth, seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(fake::chat_body("Sentence: Local.\nCategory: N/A\nA: -\nB: -"),
                    "application/json");
  });
  server.Post("/busy", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto transport = make_http_transport();
  fs::path dir = fake::temp_dir("http");
  ResponseCache cache(dir);
  LlmClient client(cache, *transport, [](auto) {}, fake::env_with("RELCAT_TEST_KEY", "sk-local"),
                   fake::fixed_clock());
  auto cfg = provider("local");
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.timeout_seconds = 5;
  const CleanDocument doc = doc_with(1);
  const auto prompt = build_prompt(Taxonomy::builtin(), doc.doc_id, doc.paragraphs[0]);
  CHECK(client.complete(prompt, cfg, CacheMode::kRecord) ==
        "Sentence: Local.\nCategory: N/A\nA: -\nB: -");
  CHECK(seen_auth == "Bearer sk-local");
  CHECK(nlohmann::json::parse(seen_body)["messages"][0]["content"] == prompt.text);

  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/busy";
  cfg.max_retries = 1;
  CHECK_THROWS_AS(client.complete(prompt, cfg, CacheMode::kLive), TransportError);
  CHECK(client.http_calls() == 3);

  // Nothing listens here: a connection failure, retried, then TransportError.
  server.stop();
  thread.join();
  CHECK_THROWS_AS(client.complete(prompt, cfg, CacheMode::kLive), TransportError);
  fs::remove_all(dir);
}
