#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stacklab/core_model.hpp"
#include "stacklab/preference.hpp"
#include "stacklab/stability_sim.hpp"

namespace stacklab {

// ---------------------------------------------------------------------------
// Plans and the plan grammar
//
//   plan   := "wait" | action (("," | ";") action)*
//   action := ("stack" | "unstack") ws box_id
//
// Keywords are case-insensitive, box ids are [A-Za-z0-9_-]+ and keep their case.

struct Plan {
  std::vector<Action> actions;  ///< A lone wait action, or stack/unstack actions.

  static Plan wait() { return {{Action::wait()}}; }
  bool is_wait() const {
    return actions.empty() || (actions.size() == 1 && actions[0].kind == Action::Kind::wait);
  }

  bool operator==(const Plan&) const = default;
};

/// Plan from a list of stack/unstack actions; an empty list becomes wait.
Plan make_plan(std::vector<Action> actions);

/// "wait" or the actions joined with "; ".
std::string render_plan(const Plan& plan);
std::string render_actions(const std::vector<Action>& actions);

struct ParseOptions {
  /// Also accept action phrases embedded in prose anywhere in the text.
  bool lenient = false;
};

/// Parses the whole text; failing that, takes the last line (ignoring code
/// fences) that matches the grammar on its own. Throws ParseError.
Plan parse_plan(std::string_view text, const ParseOptions& options = {});

// ---------------------------------------------------------------------------
// Observations and transcript rendering

enum class Mode { offline, online };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view text);

struct BoxObservation {
  std::string id;
  double w = 0.0;
  double d = 0.0;
  double h = 0.0;
  std::optional<Measurement> measurement;  ///< Present once the box was measured.
};

struct Observation {
  Mode mode = Mode::offline;
  PreferenceSet prefs;
  std::string preference_text;
  std::vector<BoxObservation> boxes;   ///< Every box; apparent dims always known.
  std::vector<std::string> revealed;   ///< Measured boxes in reveal order.
  std::optional<std::string> new_box;  ///< Box measured just before this turn.
  StackState state;

  bool all_revealed() const { return revealed.size() == boxes.size(); }
  const BoxObservation& box(std::string_view id) const;
};

/// Observation for `scenario` with the first `revealed_count` boxes of
/// reveal_order measured.
Observation make_observation(const Scenario& scenario, const PreferenceSet& prefs,
                             std::string preference_text, Mode mode, std::size_t revealed_count,
                             const StackState& state, const NoiseConfig& noise = {},
                             std::uint64_t noise_key = 0);

/// The USER turn text for an observation (format in docs/formats.md).
std::string render_observation(const Observation& obs);

std::string render_stack(const std::vector<std::string>& stack);

// ---------------------------------------------------------------------------
// Agents

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string id() const = 0;
  /// Next plan segment. May throw ParseError or EndpointError.
  virtual Plan plan(const Observation& obs) = 0;
};

/// Upper-bound baseline with access to ground truth and the catalog. It aims
/// for the best achievable stack; online it stacks the longest bottom part of
/// that stack whose boxes have all been measured, so it never unstacks.
class OracleAgent : public Agent {
 public:
  /// Throws NoStableStack when the catalog has no completed stack.
  OracleAgent(const StackCatalog& catalog, const PreferenceSet& prefs);

  std::string id() const override { return "oracle"; }
  Plan plan(const Observation& obs) override;

  const Sequence& target() const { return target_; }

 private:
  Sequence target_;
};

/// Sorts measured boxes by mean rank across the preferences.
class GreedyAgent : public Agent {
 public:
  std::string id() const override { return "greedy"; }
  Plan plan(const Observation& obs) override;
};

/// Waits until every box is measured, then stacks in a uniformly random order.
class RandomAgent : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : seed_(seed) {}

  std::string id() const override { return "random"; }
  Plan plan(const Observation& obs) override;

 private:
  std::uint64_t seed_;
  std::optional<Sequence> order_;
};

/// Replays fixed reply texts through parse_plan, then waits.
class ScriptedAgent : public Agent {
 public:
  explicit ScriptedAgent(std::vector<std::string> replies, std::string name = "scripted")
      : replies_(std::move(replies)), name_(std::move(name)) {}

  std::string id() const override { return name_; }
  Plan plan(const Observation& obs) override;

 private:
  std::vector<std::string> replies_;
  std::string name_;
  std::size_t next_ = 0;
};

// ---------------------------------------------------------------------------
// Chat endpoint adapter

struct HttpRequest {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
  double timeout_s = 60.0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Throws EndpointError on network failure.
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport for http:// and https:// URLs.
class HttplibTransport : public HttpTransport {
 public:
  HttpResponse post(const HttpRequest& request) override;
};

/// Caps concurrent requests across all agents sharing it.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int max_in_flight) : slots_(std::max(1, max_in_flight)) {}

  void acquire() { slots_.acquire(); }
  void release() { slots_.release(); }

 private:
  std::counting_semaphore<1024> slots_;
};

inline constexpr const char* kApiKeyEnv = "STACKLAB_API_KEY";

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model = "stacking-planner";
  double temperature = 0.0;
  double timeout_s = 60.0;
  int retries = 2;
  int max_in_flight = 4;
  bool few_shot = false;
  bool lenient_parse = false;
};

void to_json(nlohmann::json& j, const EndpointConfig& c);
void from_json(const nlohmann::json& j, EndpointConfig& c);

struct ChatMessage {
  std::string role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

/// Instructions sent as the single system turn.
std::string system_prompt();

/// Request body: model, messages, temperature (in that key order).
nlohmann::ordered_json chat_request_body(const EndpointConfig& cfg,
                                         const std::vector<ChatMessage>& messages);

/// Content of choices[0].message.content. Throws EndpointError.
std::string chat_reply_text(const std::string& response_body);

class LlmAgent : public Agent {
 public:
  /// `few_shot` is a (user, assistant) example pair, used when cfg.few_shot is set.
  LlmAgent(EndpointConfig cfg, std::shared_ptr<HttpTransport> transport,
           std::shared_ptr<InFlightLimiter> limiter = nullptr,
           std::optional<std::pair<std::string, std::string>> few_shot = std::nullopt,
           std::string api_key = {});

  std::string id() const override { return "llm:" + cfg_.model; }
  Plan plan(const Observation& obs) override;

  /// Messages of the first request for `obs`.
  std::vector<ChatMessage> initial_messages(const Observation& obs) const;

  std::size_t requests_sent() const { return requests_sent_; }

 private:
  std::string send(const std::vector<ChatMessage>& messages);

  EndpointConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
  std::shared_ptr<InFlightLimiter> limiter_;
  std::optional<std::pair<std::string, std::string>> few_shot_;
  std::string api_key_;
  std::size_t requests_sent_ = 0;
};

/// API key from STACKLAB_API_KEY, or empty.
std::string api_key_from_env();

}  // namespace stacklab
