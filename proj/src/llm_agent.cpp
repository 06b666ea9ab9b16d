#include <chrono>
#include <cstdlib>
#include <string>
#include <vector>

#include <httplib.h>

#include "stacklab/agents.hpp"
#include "stacklab/errors.hpp"

namespace stacklab {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw EndpointError("endpoint URL needs a scheme: " + url);
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw EndpointError("unsupported endpoint scheme: " + scheme);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

/// Releases a limiter slot when the request finishes, even on exceptions.
class SlotGuard {
 public:
  explicit SlotGuard(InFlightLimiter* limiter) : limiter_(limiter) {
    if (limiter_) limiter_->acquire();
  }
  ~SlotGuard() {
    if (limiter_) limiter_->release();
  }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  InFlightLimiter* limiter_;
};

}  // namespace

HttpResponse HttplibTransport::post(const HttpRequest& request) {
  const auto [origin, path] = split_url(request.url);
  httplib::Client client(origin);
  const auto timeout = std::chrono::duration<double>(request.timeout_s);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  client.set_connection_timeout(micros);
  client.set_read_timeout(micros);
  client.set_write_timeout(micros);

  httplib::Headers headers;
  std::string content_type = "application/json";
  for (const auto& [k, v] : request.headers) {
    if (k == "Content-Type") {
      content_type = v;
    } else {
      headers.emplace(k, v);
    }
  }
  auto result = client.Post(path, headers, request.body, content_type);
  if (!result) {
    throw EndpointError("request to " + request.url + " failed: " + httplib::to_string(result.error()));
  }
  return {result->status, result->body};
}

void to_json(nlohmann::json& j, const EndpointConfig& c) {
  j = nlohmann::json{{"base_url", c.base_url},       {"model", c.model},
                     {"temperature", c.temperature}, {"timeout_s", c.timeout_s},
                     {"retries", c.retries},         {"max_in_flight", c.max_in_flight},
                     {"few_shot", c.few_shot},       {"lenient_parse", c.lenient_parse}};
}

void from_json(const nlohmann::json& j, EndpointConfig& c) {
  const EndpointConfig d;
  c.base_url = j.value("base_url", d.base_url);
  c.model = j.value("model", d.model);
  c.temperature = j.value("temperature", d.temperature);
  c.timeout_s = j.value("timeout_s", d.timeout_s);
  c.retries = j.value("retries", d.retries);
  c.max_in_flight = j.value("max_in_flight", d.max_in_flight);
  c.few_shot = j.value("few_shot", d.few_shot);
  c.lenient_parse = j.value("lenient_parse", d.lenient_parse);
  if (c.retries < 0) throw std::invalid_argument("endpoint retries must be >= 0");
  if (c.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  if (!(c.timeout_s > 0.0)) throw std::invalid_argument("timeout_s must be positive");
}

std::string system_prompt() {
  return "You control a robot arm that builds a single stack of boxes on a table. "
         "Each user message lists every box with its size and footprint, plus its weight and "
         "stability once the box has been measured, followed by the current stack from bottom "
         "to top and the stacking preference. "
         "Reply with only the next actions, separated by semicolons, for example "
         "\"stack box2; stack box1\". \"stack <box>\" puts a box from the table on top of the "
         "stack and \"unstack <box>\" moves the top box back to the table. "
         "Reply \"wait\" to do nothing until the next measurement. "
         "Keep the stack physically stable and finish with every box stacked.";
}

nlohmann::ordered_json chat_request_body(const EndpointConfig& cfg,
                                         const std::vector<ChatMessage>& messages) {
  nlohmann::ordered_json body;
  body["model"] = cfg.model;
  body["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : messages) {
    nlohmann::ordered_json msg;
    msg["role"] = m.role;
    msg["content"] = m.content;
    body["messages"].push_back(std::move(msg));
  }
  body["temperature"] = cfg.temperature;
  return body;
}

std::string chat_reply_text(const std::string& response_body) {
  try {
    const auto j = nlohmann::json::parse(response_body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw EndpointError(std::string("malformed chat response: ") + e.what());
  }
}

std::string api_key_from_env() {
  const char* key = std::getenv(kApiKeyEnv);
  return key ? std::string(key) : std::string();
}

LlmAgent::LlmAgent(EndpointConfig cfg, std::shared_ptr<HttpTransport> transport,
                   std::shared_ptr<InFlightLimiter> limiter,
                   std::optional<std::pair<std::string, std::string>> few_shot,
                   std::string api_key)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      limiter_(std::move(limiter)),
      few_shot_(std::move(few_shot)),
      api_key_(std::move(api_key)) {
  if (!transport_) throw std::invalid_argument("LlmAgent needs a transport");
}

std::vector<ChatMessage> LlmAgent::initial_messages(const Observation& obs) const {
  std::vector<ChatMessage> messages{{"system", system_prompt()}};
  if (cfg_.few_shot && few_shot_) {
    messages.push_back({"user", few_shot_->first});
    messages.push_back({"assistant", few_shot_->second});
  }
  messages.push_back({"user", render_observation(obs)});
  return messages;
}

std::string LlmAgent::send(const std::vector<ChatMessage>& messages) {
  HttpRequest request;
  auto base = cfg_.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  request.url = base + "/chat/completions";
  request.headers["Content-Type"] = "application/json";
  if (!api_key_.empty()) request.headers["Authorization"] = "Bearer " + api_key_;
  request.body = chat_request_body(cfg_, messages).dump();
  request.timeout_s = cfg_.timeout_s;

  HttpResponse response;
  {
    SlotGuard slot(limiter_.get());
    ++requests_sent_;
    response = transport_->post(request);
  }
  if (response.status != 200) {
    throw EndpointError("endpoint returned HTTP " + std::to_string(response.status));
  }
  return chat_reply_text(response.body);
}

Plan LlmAgent::plan(const Observation& obs) {
  auto messages = initial_messages(obs);
  const ParseOptions options{cfg_.lenient_parse};
  for (int attempt = 0;; ++attempt) {
    const auto reply = send(messages);
    try {
      return parse_plan(reply, options);
    } catch (const ParseError& e) {
      if (attempt >= cfg_.retries) throw;
      messages.push_back({"assistant", reply});
      messages.push_back({"user", std::string("Your reply could not be parsed: ") + e.what() +
                                      ". Reply with only the plan, for example "
                                      "\"stack box1; stack box2\" or \"wait\"."});
    }
  }
}

}  // namespace stacklab
