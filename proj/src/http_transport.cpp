#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "relcat/llm_client.hpp"

namespace relcat {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw TransportFailure("malformed endpoint url '" + url + "'");
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override {
    const SplitUrl url = split_url(request.url);
    httplib::Client client(url.origin);
    const auto seconds = static_cast<time_t>(request.timeout_seconds);
    client.set_connection_timeout(seconds);
    client.set_read_timeout(seconds);
    client.set_write_timeout(seconds);

    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [name, value] : request.headers) {
      if (name == "Content-Type") {
        content_type = value;
      } else {
        headers.emplace(name, value);
      }
    }
    auto result = client.Post(url.path, headers, request.body, content_type);
    if (!result) {
      throw TransportFailure("POST " + url.origin + url.path + ": " +
                             httplib::to_string(result.error()));
    }
    return {result->status, result->body};
  }
};

}  // namespace

std::unique_ptr<Transport> make_http_transport() {
  return std::make_unique<HttplibTransport>();
}

}  // namespace relcat
