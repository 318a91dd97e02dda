#include "relcat/llm_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "relcat/hash.hpp"
#include "relcat/json_writer.hpp"

namespace relcat {

namespace {

constexpr std::chrono::milliseconds kBackoffBase{1000};

std::string paragraph_ref(const PromptText& prompt) {
  std::string ref = prompt.doc_id + " paragraph " + std::to_string(prompt.para_index);
  if (!prompt.first_sent_id.empty()) {
    ref += " (sentences " + prompt.first_sent_id + ".." + prompt.last_sent_id + ")";
  }
  return ref;
}

bool is_retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

class OpenAiChatAdapter : public ProviderAdapter {
 public:
  HttpRequest build_request(const ProviderConfig& cfg, std::string_view prompt,
                            std::string_view api_key) const override {
    nlohmann::ordered_json body;
    body["model"] = cfg.model_name;
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "user"}, {"content", std::string(prompt)}}});
    body["temperature"] = cfg.temperature;
    body["stream"] = false;
    HttpRequest req;
    req.url = cfg.endpoint_url;
    req.headers = {{"Authorization", "Bearer " + std::string(api_key)},
                   {"Content-Type", "application/json"}};
    req.body = body.dump();
    req.timeout_seconds = cfg.timeout_seconds;
    return req;
  }

  std::string extract_text(std::string_view response_body) const override {
    try {
      const auto j = nlohmann::json::parse(response_body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("unexpected chat-completion response: ") + e.what());
    }
  }
};

}  // namespace

CacheMode parse_cache_mode(std::string_view name) {
  if (name == "record") return CacheMode::kRecord;
  if (name == "replay") return CacheMode::kReplay;
  if (name == "live") return CacheMode::kLive;
  throw ConfigError("unknown cache mode '" + std::string(name) + "'");
}

const char* cache_mode_name(CacheMode mode) {
  switch (mode) {
    case CacheMode::kRecord: return "record";
    case CacheMode::kReplay: return "replay";
    case CacheMode::kLive: return "live";
  }
  return "replay";
}

const ProviderConfig& ProvidersFile::get(std::string_view provider_id) const {
  for (const auto& p : providers) {
    if (p.provider_id == provider_id) return p;
  }
  throw ConfigError("unknown provider '" + std::string(provider_id) + "'");
}

ProvidersFile parse_providers(std::string_view json, const std::filesystem::path& base_dir) {
  ProvidersFile file;
  try {
    const auto j = nlohmann::json::parse(json);
    std::filesystem::path cache_dir = j.value("cache_dir", std::string("cache"));
    file.cache_dir = cache_dir.is_absolute() ? cache_dir : base_dir / cache_dir;
    for (const auto& p : j.at("providers")) {
      ProviderConfig cfg;
      cfg.provider_id = p.at("provider_id").get<std::string>();
      cfg.endpoint_url = p.value("endpoint_url", std::string());
      cfg.model_name = p.at("model_name").get<std::string>();
      cfg.api_key_env = p.value("api_key_env", std::string());
      cfg.api_style = p.value("api_style", std::string("openai"));
      cfg.max_retries = p.value("max_retries", 3);
      cfg.timeout_seconds = p.value("timeout_seconds", 60.0);
      cfg.temperature = p.value("temperature", 0.0);
      if (p.contains("api_key")) {
        throw ConfigError("provider '" + cfg.provider_id +
                          "': api keys must come from api_key_env, not the config file");
      }
      if (cfg.provider_id.empty() || cfg.provider_id.find('/') != std::string::npos) {
        throw ConfigError("invalid provider_id '" + cfg.provider_id + "'");
      }
      if (cfg.max_retries < 0 || cfg.max_retries > 10) {
        throw ConfigError("provider '" + cfg.provider_id + "': max_retries out of range");
      }
      adapter_for(cfg.api_style);
      file.providers.push_back(std::move(cfg));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid providers file: ") + e.what());
  }
  return file;
}

ProvidersFile load_providers(const std::filesystem::path& path) {
  return parse_providers(read_file(path), path.parent_path());
}

std::string make_cache_key(std::string_view provider_id, std::string_view model_name,
                           double temperature, std::string_view prompt) {
  JsonWriter w;
  w.begin_array()
      .value("relcat-cache-v1")
      .value(provider_id)
      .value(model_name)
      .value(format_fixed(temperature, 6))
      .value(prompt)
      .end_array();
  return sha256_hex(w.str());
}

std::string exchange_to_json(const Exchange& e) {
  JsonWriter w(true);
  w.begin_object()
      .key("cache_key").value(e.cache_key)
      .key("provider_id").value(e.provider_id)
      .key("model_name").value(e.model_name)
      .key("temperature").fixed(e.temperature, 6)
      .key("doc_id").value(e.doc_id)
      .key("para_index").value(static_cast<std::uint64_t>(e.para_index))
      .key("timestamp").value(e.timestamp)
      .key("attempt_count").value(e.attempt_count)
      .key("prompt").value(e.prompt)
      .key("response_text").value(e.response_text)
      .end_object();
  return w.str() + "\n";
}

Exchange exchange_from_json(std::string_view json) {
  try {
    const auto j = nlohmann::json::parse(json);
    Exchange e;
    e.cache_key = j.at("cache_key").get<std::string>();
    e.provider_id = j.at("provider_id").get<std::string>();
    e.model_name = j.at("model_name").get<std::string>();
    e.temperature = j.at("temperature").get<double>();
    e.doc_id = j.value("doc_id", std::string());
    e.para_index = j.value("para_index", std::size_t{0});
    e.timestamp = j.value("timestamp", std::string());
    e.attempt_count = j.value("attempt_count", 0);
    e.prompt = j.at("prompt").get<std::string>();
    e.response_text = j.at("response_text").get<std::string>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("invalid cache entry: ") + ex.what());
  }
}

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path ResponseCache::entry_path(std::string_view provider_id,
                                                std::string_view key) const {
  return root_ / std::string(provider_id) / (std::string(key) + ".json");
}

std::optional<Exchange> ResponseCache::lookup(std::string_view provider_id,
                                              std::string_view key) const {
  std::shared_lock lock(mutex_);
  const auto path = entry_path(provider_id, key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  Exchange e = exchange_from_json(read_file(path));
  if (e.cache_key != key ||
      make_cache_key(e.provider_id, e.model_name, e.temperature, e.prompt) != key) {
    throw FormatError("cache entry " + path.string() + " does not hash to its key");
  }
  return e;
}

void ResponseCache::store(const Exchange& exchange) {
  std::unique_lock lock(mutex_);
  write_file_atomic(entry_path(exchange.provider_id, exchange.cache_key),
                    exchange_to_json(exchange));
}

std::vector<Exchange> ResponseCache::entries(std::string_view provider_id) const {
  std::shared_lock lock(mutex_);
  std::vector<std::filesystem::path> paths;
  const auto dir = root_ / std::string(provider_id);
  if (std::filesystem::is_directory(dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Exchange> out;
  for (const auto& p : paths) out.push_back(exchange_from_json(read_file(p)));
  return out;
}

const ProviderAdapter& adapter_for(std::string_view api_style) {
  static const OpenAiChatAdapter kOpenAi;
  if (api_style == "openai") return kOpenAi;
  throw ConfigError("unsupported api_style '" + std::string(api_style) + "'");
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (name.empty()) return std::nullopt;
    const char* v = std::getenv(name.c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
}

Clock utc_clock() {
  return [] {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
  };
}

CorpusRunError::CorpusRunError(std::vector<ParagraphFailure> failures)
    : Error(failures.empty() ? ErrorCode::kTransport : failures.front().code,
            [&] {
              std::string msg = std::to_string(failures.size()) + " paragraph(s) failed";
              for (const auto& f : failures) msg += "; " + f.message;
              return msg;
            }()),
      failures_(std::move(failures)) {}

LlmClient::LlmClient(ResponseCache& cache, Transport& transport, Sleeper sleeper,
                     EnvLookup env, Clock clock)
    : cache_(cache),
      transport_(transport),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      env_(std::move(env)),
      clock_(std::move(clock)) {}

std::size_t LlmClient::http_calls() const { return http_calls_.load(); }

Exchange LlmClient::call_with_retries(const PromptText& prompt, const ProviderConfig& cfg,
                                      const std::string& key) {
  const std::string where = cfg.provider_id + ", " + paragraph_ref(prompt);
  const auto api_key = env_(cfg.api_key_env);
  if (!api_key) {
    throw AuthError(where + ": environment variable '" + cfg.api_key_env +
                    "' holding the API key is not set");
  }
  const ProviderAdapter& adapter = adapter_for(cfg.api_style);
  const HttpRequest request = adapter.build_request(cfg, prompt.text, *api_key);

  std::string last_failure;
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) sleeper_(kBackoffBase * (1 << (attempt - 2)));
    HttpResponse response;
    try {
      ++http_calls_;
      response = transport_.post(request);
    } catch (const TransportFailure& e) {
      last_failure = e.what();
      continue;
    }
    if (response.status == 401 || response.status == 403) {
      throw AuthError(where + ": API key rejected (HTTP " + std::to_string(response.status) + ")");
    }
    if (is_retryable_status(response.status)) {
      last_failure = "HTTP " + std::to_string(response.status);
      continue;
    }
    if (response.status != 200) {
      throw TransportError(where + ": HTTP " + std::to_string(response.status));
    }
    Exchange e;
    try {
      e.response_text = adapter.extract_text(response.body);
    } catch (const FormatError& fe) {
      throw TransportError(where + ": " + fe.what());
    }
    e.cache_key = key;
    e.provider_id = cfg.provider_id;
    e.model_name = cfg.model_name;
    e.temperature = cfg.temperature;
    e.prompt = prompt.text;
    e.doc_id = prompt.doc_id;
    e.para_index = prompt.para_index;
    e.timestamp = clock_();
    e.attempt_count = attempt;
    return e;
  }
  throw TransportError(where + ": giving up after " + std::to_string(attempts) +
                       " attempt(s): " + last_failure);
}

std::string LlmClient::complete(const PromptText& prompt, const ProviderConfig& cfg,
                                CacheMode mode) {
  const std::string key =
      make_cache_key(cfg.provider_id, cfg.model_name, cfg.temperature, prompt.text);
  if (mode != CacheMode::kLive) {
    if (auto hit = cache_.lookup(cfg.provider_id, key)) return hit->response_text;
    if (mode == CacheMode::kReplay) {
      throw CacheMiss(cfg.provider_id + ": no cached response for " + paragraph_ref(prompt) +
                      " (key " + key + ")");
    }
  }
  Exchange e = call_with_retries(prompt, cfg, key);
  cache_.store(e);
  return e.response_text;
}

std::vector<std::pair<std::size_t, std::string>> LlmClient::run_corpus(
    const CleanDocument& doc, const ProviderConfig& cfg, std::size_t parallelism,
    CacheMode mode, const Taxonomy& taxonomy, const PromptTemplate& tmpl) {
  if (doc.paragraphs.empty()) {
    throw PreconditionError("run_corpus: document '" + doc.doc_id + "' has no paragraphs");
  }
  if (parallelism == 0) throw PreconditionError("run_corpus: parallelism must be >= 1");

  std::vector<PromptText> prompts;
  prompts.reserve(doc.paragraphs.size());
  for (const auto& para : doc.paragraphs) {
    prompts.push_back(build_prompt(taxonomy, doc.doc_id, para, tmpl));
  }

  std::vector<std::optional<std::string>> results(prompts.size());
  std::vector<ParagraphFailure> failures;
  std::mutex failures_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      try {
        results[i] = complete(prompts[i], cfg, mode);
      } catch (const Error& e) {
        std::lock_guard lock(failures_mutex);
        failures.push_back({prompts[i].para_index, e.code(), e.what()});
      } catch (const std::exception& e) {
        std::lock_guard lock(failures_mutex);
        failures.push_back({prompts[i].para_index, ErrorCode::kTransport, e.what()});
      }
    }
  };
  const std::size_t workers = std::min(parallelism, prompts.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end(),
              [](const auto& a, const auto& b) { return a.para_index < b.para_index; });
    throw CorpusRunError(std::move(failures));
  }
  std::vector<std::pair<std::size_t, std::string>> out;
  out.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    out.emplace_back(prompts[i].para_index, std::move(*results[i]));
  }
  return out;
}

}  // namespace relcat
