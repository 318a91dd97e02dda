#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relcat/corpus.hpp"
#include "relcat/error.hpp"
#include "relcat/taxonomy.hpp"

namespace relcat {

enum class CacheMode { kRecord, kReplay, kLive };

CacheMode parse_cache_mode(std::string_view name);
const char* cache_mode_name(CacheMode mode);

// The API key itself is never stored; only the name of the environment
// variable that holds it.
struct ProviderConfig {
  std::string provider_id;
  std::string endpoint_url;
  std::string model_name;
  std::string api_key_env;
  std::string api_style = "openai";
  int max_retries = 3;
  double timeout_seconds = 60.0;
  double temperature = 0.0;
};

struct ProvidersFile {
  std::filesystem::path cache_dir;
  std::vector<ProviderConfig> providers;

  const ProviderConfig& get(std::string_view provider_id) const;
};

// providers.json: {"cache_dir": "...", "providers": [{...}, ...]}. A relative
// cache_dir resolves against the file's directory.
ProvidersFile load_providers(const std::filesystem::path& path);
ProvidersFile parse_providers(std::string_view json,
                              const std::filesystem::path& base_dir);

struct Exchange {
  std::string cache_key;
  std::string provider_id;
  std::string model_name;
  double temperature = 0.0;
  std::string prompt;
  std::string doc_id;
  std::size_t para_index = 0;
  std::string response_text;
  std::string timestamp;
  int attempt_count = 0;
};

// Pure function of its inputs; temperature is part of the key.
std::string make_cache_key(std::string_view provider_id, std::string_view model_name,
                           double temperature, std::string_view prompt);

// One JSON file per exchange at <root>/<provider>/<key>.json. Readers run
// concurrently; writers are serialized.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root);

  std::optional<Exchange> lookup(std::string_view provider_id, std::string_view key) const;
  void store(const Exchange& exchange);
  std::vector<Exchange> entries(std::string_view provider_id) const;
  std::filesystem::path entry_path(std::string_view provider_id, std::string_view key) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
};

std::string exchange_to_json(const Exchange& exchange);
Exchange exchange_from_json(std::string_view json);

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  double timeout_seconds = 60.0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Thrown by transports for connection-level failures (DNS, refused, timeout).
class TransportFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

// cpp-httplib backed HTTP(S) client.
std::unique_ptr<Transport> make_http_transport();

// Builds provider-specific request bodies and extracts the reply text.
class ProviderAdapter {
 public:
  virtual ~ProviderAdapter() = default;
  virtual HttpRequest build_request(const ProviderConfig& cfg, std::string_view prompt,
                                    std::string_view api_key) const = 0;
  virtual std::string extract_text(std::string_view response_body) const = 0;
};

// "openai": chat-completions style, also served by DeepSeek's API.
const ProviderAdapter& adapter_for(std::string_view api_style);

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
using Clock = std::function<std::string()>;

EnvLookup process_env();
Clock utc_clock();

struct ParagraphFailure {
  std::size_t para_index;
  ErrorCode code;
  std::string message;
};

class CorpusRunError : public Error {
 public:
  explicit CorpusRunError(std::vector<ParagraphFailure> failures);
  const std::vector<ParagraphFailure>& failures() const { return failures_; }

 private:
  std::vector<ParagraphFailure> failures_;
};

class LlmClient {
 public:
  LlmClient(ResponseCache& cache, Transport& transport, Sleeper sleeper = {},
            EnvLookup env = process_env(), Clock clock = utc_clock());

  // record: cache hit or one network call that is then persisted.
  // replay: cache only, CacheMiss otherwise.
  // live:   always calls the network and refreshes the cache entry.
  std::string complete(const PromptText& prompt, const ProviderConfig& cfg,
                       CacheMode mode);

  // One prompt per paragraph, at most `parallelism` in flight, results in
  // para_index order. Successful exchanges are persisted even when others
  // fail; failures are raised together as CorpusRunError.
  std::vector<std::pair<std::size_t, std::string>> run_corpus(
      const CleanDocument& doc, const ProviderConfig& cfg, std::size_t parallelism,
      CacheMode mode, const Taxonomy& taxonomy = Taxonomy::builtin(),
      const PromptTemplate& tmpl = PromptTemplate::builtin());

  std::size_t http_calls() const;

 private:
  Exchange call_with_retries(const PromptText& prompt, const ProviderConfig& cfg,
                             const std::string& key);

  ResponseCache& cache_;
  Transport& transport_;
  Sleeper sleeper_;
  EnvLookup env_;
  Clock clock_;
  std::atomic<std::size_t> http_calls_{0};
};

}  // namespace relcat
