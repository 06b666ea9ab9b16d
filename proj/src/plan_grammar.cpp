#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stacklab/agents.hpp"
#include "stacklab/errors.hpp"

namespace stacklab {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

bool is_id_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-';
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

/// Recursive-descent parser over one candidate string. `base` is the offset
/// of the candidate inside the original text, for error positions.
class Parser {
 public:
  Parser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

  Plan parse() {
    skip_space();
    const auto first = word();
    if (iequals(first, "wait")) {
      skip_space();
      expect_end();
      return Plan::wait();
    }
    std::vector<Action> actions;
    actions.push_back(action_after(first));
    while (true) {
      skip_space();
      if (at_end()) break;
      if (peek() != ',' && peek() != ';') fail("expected ',' or ';' between actions");
      ++pos_;
      skip_space();
      actions.push_back(action_after(word()));
    }
    return Plan{std::move(actions)};
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void skip_space() {
    while (!at_end() && is_space(peek())) ++pos_;
  }

  std::string_view word() {
    const auto start = pos_;
    while (!at_end() && is_id_char(peek())) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  Action action_after(std::string_view keyword) {
    const auto keyword_pos = pos_ - keyword.size();
    const bool stack = iequals(keyword, "stack");
    if (!stack && !iequals(keyword, "unstack")) {
      pos_ = keyword_pos;
      fail("expected 'stack', 'unstack' or 'wait'");
    }
    const auto gap = pos_;
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
    if (pos_ == gap) fail("expected whitespace before the box id");
    const auto id = word();
    if (id.empty()) fail("expected a box id");
    std::string box(id);
    return stack ? Action::stack(std::move(box)) : Action::unstack(std::move(box));
  }

  void expect_end() {
    if (!at_end()) fail("unexpected text after the plan");
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, base_ + pos_);
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

std::optional<Plan> try_parse(std::string_view text, std::size_t base) {
  try {
    return Parser(text, base).parse();
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<Plan> last_matching_line(std::string_view text) {
  std::optional<Plan> found;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    if (!line.empty() && !line.starts_with("```")) {
      if (auto plan = try_parse(line, start)) found = std::move(plan);
    }
    start = end + 1;
  }
  return found;
}

/// Every "stack X" / "unstack X" phrase in reading order.
std::optional<Plan> scan_phrases(std::string_view text) {
  std::vector<Action> actions;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (!is_id_char(text[pos])) {
      ++pos;
      continue;
    }
    const auto start = pos;
    while (pos < text.size() && is_id_char(text[pos])) ++pos;
    const auto token = text.substr(start, pos - start);
    const bool stack = iequals(token, "stack");
    if (!stack && !iequals(token, "unstack")) continue;
    auto cursor = pos;
    while (cursor < text.size() && (text[cursor] == ' ' || text[cursor] == '\t')) ++cursor;
    if (cursor == pos) continue;
    const auto id_start = cursor;
    while (cursor < text.size() && is_id_char(text[cursor])) ++cursor;
    if (cursor == id_start) continue;
    std::string box(text.substr(id_start, cursor - id_start));
    actions.push_back(stack ? Action::stack(std::move(box)) : Action::unstack(std::move(box)));
    pos = cursor;
  }
  if (actions.empty()) return std::nullopt;
  return Plan{std::move(actions)};
}

}  // namespace

Plan make_plan(std::vector<Action> actions) {
  if (actions.empty()) return Plan::wait();
  return Plan{std::move(actions)};
}

std::string render_actions(const std::vector<Action>& actions) {
  if (actions.empty()) return "wait";
  std::string out;
  for (const auto& a : actions) {
    if (!out.empty()) out += "; ";
    out += to_string(a);
  }
  return out;
}

std::string render_plan(const Plan& plan) {
  if (plan.is_wait()) return "wait";
  return render_actions(plan.actions);
}

Plan parse_plan(std::string_view text, const ParseOptions& options) {
  try {
    return Parser(text, 0).parse();
  } catch (const ParseError&) {
    if (auto plan = last_matching_line(text)) return *plan;
    if (options.lenient) {
      if (auto plan = scan_phrases(text)) return *plan;
    }
    throw;
  }
}

}  // namespace stacklab
