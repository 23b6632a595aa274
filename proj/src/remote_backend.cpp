#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "zoomtrace/backend.hpp"
#include "zoomtrace/scene.hpp"

namespace zt::agent {

namespace {

struct Url {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw TransportError("endpoint '" + endpoint + "' has no scheme", 0);
  const auto slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return Url{endpoint, "/v1/chat/completions"};
  return Url{endpoint.substr(0, slash), endpoint.substr(slash)};
}

std::string data_url(const raster::Image& img) {
  const auto png = scene::encode_png(img);
  return "data:image/png;base64," + httplib::detail::base64_encode(std::string(png.begin(), png.end()));
}

}  // namespace

std::string RemoteBackend::request_body(const RemoteOptions& o, const std::vector<Message>& history,
                                        const BackendContext& ctx) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : history) {
    // Observations go back as user turns; the wire format has no image-bearing tool role.
    const char* role = m.role == Message::Role::tool ? "user" : to_string(m.role);
    const raster::Image* img = m.image_view.empty() || !ctx.image ? nullptr : ctx.image(m.image_view);
    if (!img) {
      messages.push_back({{"role", role}, {"content", m.text}});
      continue;
    }
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", m.text}});
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url(*img)}}}});
    messages.push_back({{"role", role}, {"content", content}});
  }
  nlohmann::json body{{"model", o.model}, {"messages", messages}, {"temperature", o.temperature},
                      {"max_tokens", o.max_tokens}};
  return body.dump();
}

std::string RemoteBackend::next_turn(const std::vector<Message>& history, const BackendContext& ctx) {
  const Url url = split_url(opt_.endpoint);
  const std::string body = request_body(opt_, history, ctx);
  std::string last_error;
  const int attempts = 1 + std::max(0, opt_.retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(opt_.backoff * (1 << (attempt - 1)));
    httplib::Client cli(url.base);
    cli.set_connection_timeout(opt_.timeout);
    cli.set_read_timeout(opt_.timeout);
    httplib::Headers headers;
    if (!opt_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opt_.api_key);
    auto res = cli.Post(url.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200), attempt + 1);
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      const auto& content = j.at("choices").at(0).at("message").at("content");
      return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed completion: ") + e.what(), attempt + 1);
    }
  }
  throw TransportError("endpoint " + opt_.endpoint + " failed after " + std::to_string(attempts) +
                           " attempts (" + last_error + ")",
                       attempts);
}

}  // namespace zt::agent
