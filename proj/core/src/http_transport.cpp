#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "pipewright/llm_gateway.hpp"

namespace pipewright {
namespace {

// "https://host:port/v1" -> {"https://host:port", "/v1"}
std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme = url.find("://");
  auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path), prefix};
}

}  // namespace

HttpTransport make_httplib_transport(const std::string& base_url) {
  auto [origin, prefix] = split_url(base_url);
  return [origin = origin, prefix = prefix](const std::string& path, const std::string& body,
                                            const std::map<std::string, std::string>& headers,
                                            std::chrono::duration<double> timeout) {
    HttpReply out;
    if (origin.empty()) {
      out.error = "no LLM endpoint configured (PIPEWRIGHT_LLM_URL)";
      return out;
    }
    httplib::Client cli(origin);
    auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    cli.set_connection_timeout(usec);
    cli.set_read_timeout(usec);
    cli.set_write_timeout(usec);
    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto& [k, v] : headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        h.emplace(k, v);
      }
    }
    auto res = cli.Post(prefix + path, h, body, content_type);
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  };
}

}  // namespace pipewright
