#include <cstdlib>
#include <regex>

#include "httplib.h"
#include "json.hpp"
#include "revpref/agents.hpp"
#include "revpref/errors.hpp"

namespace revpref {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw InvalidParameter("endpoint URL must look like http[s]://host[:port]/path");
  }
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

long retry_after_ms(const httplib::Response& res) {
  if (!res.has_header("Retry-After")) return -1;
  const std::string v = res.get_header_value("Retry-After");
  char* end = nullptr;
  const double seconds = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || seconds < 0.0) return -1;
  return static_cast<long>(seconds * 1000.0);
}

class HttpAgent : public AgentEndpoint {
 public:
  explicit HttpAgent(HttpAgentOptions options)
      : options_(std::move(options)), url_(split_url(options_.endpoint_url)) {
    if (const char* key = std::getenv(kApiKeyEnv)) api_key_ = key;
  }

  std::string complete(const ChatRequest& request) override {
    nlohmann::json body{{"model", request.model.empty() ? options_.model : request.model},
                        {"temperature", request.temperature},
                        {"messages", nlohmann::json::array()}};
    for (const auto& m : request.messages) {
      body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }

    httplib::Client client(url_.origin);
    client.set_connection_timeout(options_.connect_timeout_s, 0);
    client.set_read_timeout(options_.read_timeout_s, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto res = client.Post(url_.path, headers, body.dump(), "application/json");
    if (!res) {
      throw EndpointError("request failed: " + httplib::to_string(res.error()), 0, true);
    }
    if (res->status == 429 || res->status >= 500) {
      throw EndpointError("HTTP " + std::to_string(res->status), res->status, true,
                          retry_after_ms(*res));
    }
    if (res->status != 200) {
      throw EndpointError("HTTP " + std::to_string(res->status), res->status, false);
    }
    try {
      const auto doc = nlohmann::json::parse(res->body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw EndpointError("response has no choices[0].message.content", res->status, false);
    }
  }

  std::string name() const override { return "http:model=" + options_.model; }
  std::string model() const override { return options_.model; }
  bool remote() const override { return true; }

 private:
  HttpAgentOptions options_;
  Url url_;
  std::string api_key_;
};

}  // namespace

std::unique_ptr<AgentEndpoint> http_agent(const HttpAgentOptions& options) {
  if (options.endpoint_url.empty()) throw InvalidParameter("http agent needs --endpoint-url");
  return std::make_unique<HttpAgent>(options);
}

}  // namespace revpref
