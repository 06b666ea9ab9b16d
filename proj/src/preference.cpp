#include "stacklab/preference.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "stacklab/errors.hpp"
#include "stacklab/rng.hpp"
#include "template_bank_data.hpp"

namespace stacklab {

std::string_view to_string(PreferenceKind kind) {
  switch (kind) {
    case PreferenceKind::weight:
      return "weight";
    case PreferenceKind::size:
      return "size";
    case PreferenceKind::footprint:
      return "footprint";
    case PreferenceKind::stability:
      return "stability";
  }
  return "weight";
}

PreferenceKind preference_kind_from_string(std::string_view text) {
  if (text == "weight") return PreferenceKind::weight;
  if (text == "size") return PreferenceKind::size;
  if (text == "footprint") return PreferenceKind::footprint;
  if (text == "stability") return PreferenceKind::stability;
  throw std::invalid_argument("unknown preference: " + std::string(text));
}

double Preference::key(const BoxProperties& props) const {
  switch (kind) {
    case PreferenceKind::weight:
      return props.weight;
    case PreferenceKind::size:
      return props.size;
    case PreferenceKind::footprint:
      return props.footprint;
    case PreferenceKind::stability:
      return props.stability;
  }
  return 0.0;
}

PreferenceSet::PreferenceSet(std::vector<Preference> prefs) : prefs_(std::move(prefs)) {
  if (prefs_.empty()) {
    throw std::invalid_argument("a preference set needs at least one preference");
  }
  std::set<PreferenceKind> kinds;
  for (const auto& p : prefs_) {
    if (!kinds.insert(p.kind).second) {
      throw std::invalid_argument("duplicate preference kind " + std::string(stacklab::to_string(p.kind)));
    }
  }
}

PreferenceSet PreferenceSet::parse(std::string_view text) {
  std::vector<Preference> prefs;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto item = text.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);

    Preference p;
    const auto colon = item.find(':');
    p.kind = preference_kind_from_string(item.substr(0, colon));
    if (colon != std::string_view::npos) {
      const auto dir = item.substr(colon + 1);
      if (dir == "asc") {
        p.direction = Direction::ascending_from_bottom;
      } else if (dir != "desc") {
        throw std::invalid_argument("unknown direction: " + std::string(dir));
      }
    }
    prefs.push_back(p);
    start = end + 1;
  }
  return PreferenceSet(std::move(prefs));
}

PreferenceSet PreferenceSet::apparent() const {
  PreferenceSet out;
  for (const auto& p : prefs_) {
    if (p.apparent()) out.prefs_.push_back(p);
  }
  return out;
}

bool PreferenceSet::has_apparent() const {
  return std::any_of(prefs_.begin(), prefs_.end(), [](const Preference& p) { return p.apparent(); });
}

std::string PreferenceSet::to_string() const {
  std::string out;
  for (const auto& p : prefs_) {
    if (!out.empty()) out += ',';
    out += stacklab::to_string(p.kind);
    if (p.direction == Direction::ascending_from_bottom) out += ":asc";
  }
  return out;
}

std::string PreferenceSet::label() const {
  std::string out;
  for (const auto& p : prefs_) {
    if (!out.empty()) out += " & ";
    std::string name(stacklab::to_string(p.kind));
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    out += name;
    if (p.direction == Direction::ascending_from_bottom) out += " (asc)";
  }
  return out;
}

std::vector<PreferenceSet> benchmark_preference_sets() {
  return {PreferenceSet::parse("footprint"), PreferenceSet::parse("size"),
          PreferenceSet::parse("weight"), PreferenceSet::parse("weight,size"),
          PreferenceSet::parse("weight,stability")};
}

Sequence sort_by_preference(const Sequence& ids, const PropertyTable& props, const Preference& p) {
  std::vector<std::pair<double, std::string>> keyed;
  keyed.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = props.find(id);
    if (it == props.end()) {
      throw std::out_of_range("no properties for box " + id);
    }
    keyed.emplace_back(p.key(it->second), id);
  }
  const bool descending = p.direction == Direction::descending_from_bottom;
  std::stable_sort(keyed.begin(), keyed.end(), [descending](const auto& a, const auto& b) {
    return descending ? a.first > b.first : a.first < b.first;
  });
  Sequence out;
  out.reserve(ids.size());
  for (auto& [key, id] : keyed) {
    out.push_back(std::move(id));
  }
  return out;
}

std::size_t levenshtein(const Sequence& a, const Sequence& b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitute});
      diagonal = above;
    }
  }
  return row[b.size()];
}

namespace {

std::size_t sorted_distance(const Sequence& a, const Preference& p, const PropertyTable& props) {
  return levenshtein(a, sort_by_preference(a, props, p));
}

}  // namespace

double phi(const Sequence& a, const Preference& p, const PropertyTable& props) {
  if (a.empty()) {
    throw std::invalid_argument("phi is undefined for an empty sequence");
  }
  return static_cast<double>(sorted_distance(a, p, props)) / static_cast<double>(a.size());
}

double joint_score(const Sequence& a, const PreferenceSet& prefs, const PropertyTable& props) {
  if (a.empty()) {
    throw std::invalid_argument("joint score is undefined for an empty sequence");
  }
  if (prefs.empty()) {
    throw std::invalid_argument("joint score needs a non-empty preference set");
  }
  std::size_t total = 0;
  for (const auto& p : prefs.items()) {
    total += sorted_distance(a, p, props);
  }
  return 1.0 - static_cast<double>(total) / static_cast<double>(prefs.size() * a.size());
}

ScoredStack best_achievable(const StackCatalog& catalog, const PreferenceSet& prefs,
                            const PropertyTable& props) {
  std::optional<ScoredStack> best;
  for (const auto& seq : catalog.completed) {
    const double score = joint_score(seq, prefs, props);
    if (!best || score > best->score || (score == best->score && seq < best->stack)) {
      best = ScoredStack{seq, score};
    }
  }
  if (!best) {
    throw NoStableStack("scenario " + catalog.scenario_id + " has no completed stable stack");
  }
  return *best;
}

namespace {

std::size_t clause_index(PreferenceKind kind, Direction dir) {
  return static_cast<std::size_t>(kind) * 2 + (dir == Direction::ascending_from_bottom ? 1 : 0);
}

}  // namespace

const TemplateBank& TemplateBank::builtin() {
  static const TemplateBank bank = from_json(nlohmann::json::parse(kTemplateBankJson));
  return bank;
}

TemplateBank TemplateBank::from_json(const nlohmann::json& j) {
  TemplateBank bank;
  bank.version_ = j.at("version").get<int>();
  for (const auto& t : j.at("templates")) {
    PreferenceTemplate pt;
    pt.id = t.at("id").get<int>();
    const auto split = t.at("split").get<std::string>();
    if (split != "train" && split != "eval") {
      throw std::invalid_argument("template split must be train or eval");
    }
    pt.split = split == "train" ? TemplateSplit::train : TemplateSplit::eval;
    pt.lead = t.at("lead").get<std::string>();
    pt.joiner = t.at("joiner").get<std::string>();
    pt.trailer = t.at("trailer").get<std::string>();
    pt.clauses.resize(8);
    for (auto kind : {PreferenceKind::weight, PreferenceKind::size, PreferenceKind::footprint,
                      PreferenceKind::stability}) {
      const auto& c = t.at("clauses").at(std::string(to_string(kind)));
      pt.clauses[clause_index(kind, Direction::descending_from_bottom)] =
          c.at("descending").get<std::string>();
      pt.clauses[clause_index(kind, Direction::ascending_from_bottom)] =
          c.at("ascending").get<std::string>();
    }
    bank.templates_.push_back(std::move(pt));
  }
  return bank;
}

std::vector<int> TemplateBank::ids(TemplateSplit split) const {
  std::vector<int> out;
  for (const auto& t : templates_) {
    if (t.split == split) out.push_back(t.id);
  }
  return out;
}

const PreferenceTemplate& TemplateBank::get(int template_id) const {
  for (const auto& t : templates_) {
    if (t.id == template_id) return t;
  }
  throw UnknownTemplate("no preference template with id " + std::to_string(template_id));
}

std::string TemplateBank::render(const PreferenceSet& prefs, int template_id) const {
  const auto& t = get(template_id);
  std::string text = t.lead;
  bool first = true;
  for (const auto& p : prefs.items()) {
    if (!first) text += t.joiner;
    text += t.clauses[clause_index(p.kind, p.direction)];
    first = false;
  }
  return text + t.trailer;
}

int TemplateBank::choose(TemplateSplit split, std::uint64_t rng_key) const {
  const auto candidates = ids(split);
  if (candidates.empty()) {
    throw UnknownTemplate("template bank has no templates in the requested split");
  }
  Rng rng(rng_key);
  return rng.pick(candidates);
}

std::string render_preference(const PreferenceSet& prefs, int template_id) {
  return TemplateBank::builtin().render(prefs, template_id);
}

std::pair<int, std::string> render_preference(const PreferenceSet& prefs, TemplateSplit split,
                                              std::uint64_t rng_key) {
  const auto& bank = TemplateBank::builtin();
  const int id = bank.choose(split, rng_key);
  return {id, bank.render(prefs, id)};
}

}  // namespace stacklab
