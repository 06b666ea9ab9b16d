#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "stacklab/errors.hpp"
#include "stacklab/eval.hpp"
#include "stacklab/io.hpp"

namespace stacklab {

namespace {

const std::vector<std::string> kResultColumns{
    "scenario_id",  "preferences",    "agent",          "mode",
    "box_count",    "success",        "final_stack",    "raw_score",
    "best_score",   "relative_score", "success_scaled", "action_count",
    "failure_cause", "template_id",   "detail"};

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

/// Splits CSV text into records, honoring quoted fields.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (quoted) throw std::invalid_argument("unterminated quoted CSV field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string fmt2(double v) { return format_fixed(v, 2); }

std::string box_column(std::size_t box_count) {
  return box_count == 0 ? "all" : std::to_string(box_count);
}

}  // namespace

std::string results_csv(const std::vector<EpisodeResult>& results) {
  std::string out = join(kResultColumns, ",") + "\n";
  for (const auto& r : results) {
    const std::vector<std::string> fields{r.scenario_id,
                                          r.preferences,
                                          r.agent,
                                          std::string(to_string(r.mode)),
                                          std::to_string(r.box_count),
                                          r.success ? "1" : "0",
                                          join(r.final_stack, " "),
                                          format_exact(r.raw_score),
                                          format_exact(r.best_score),
                                          format_exact(r.relative_score),
                                          format_exact(r.success_scaled),
                                          std::to_string(r.action_count),
                                          std::string(to_string(r.cause)),
                                          std::to_string(r.template_id),
                                          r.detail};
    std::vector<std::string> quoted;
    for (const auto& f : fields) quoted.push_back(csv_field(f));
    out += join(quoted, ",") + "\n";
  }
  return out;
}

std::vector<EpisodeResult> parse_results_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows[0] != kResultColumns) {
    throw std::invalid_argument("results CSV header does not match the expected columns");
  }
  std::vector<EpisodeResult> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != kResultColumns.size()) {
      throw std::invalid_argument("results CSV row " + std::to_string(i) + " has " +
                                  std::to_string(f.size()) + " fields");
    }
    EpisodeResult r;
    r.scenario_id = f[0];
    r.preferences = f[1];
    r.agent = f[2];
    r.mode = mode_from_string(f[3]);
    r.box_count = std::stoul(f[4]);
    r.success = f[5] == "1";
    std::istringstream stack(f[6]);
    for (std::string id; stack >> id;) r.final_stack.push_back(id);
    r.raw_score = std::stod(f[7]);
    r.best_score = std::stod(f[8]);
    r.relative_score = std::stod(f[9]);
    r.success_scaled = std::stod(f[10]);
    r.action_count = std::stoul(f[11]);
    r.cause = failure_cause_from_string(f[12]);
    r.template_id = std::stoi(f[13]);
    r.detail = f[14];
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_cell(const MetricsCell& cell) {
  if (!cell.preference_score) return fmt2(cell.success_rate) + " / - / -";
  return fmt2(cell.success_rate) + " / " + fmt2(*cell.preference_score) + " / " +
         fmt2(cell.success_scaled);
}

std::string metrics_csv(const MetricsTable& table) {
  std::string out =
      "preferences,agent,mode,box_count,episodes,successes,success_rate,preference_score,"
      "success_scaled\n";
  for (const auto& row : table.rows) {
    const auto& c = row.cell;
    out += csv_field(row.preferences) + "," + csv_field(row.agent) + "," +
           std::string(to_string(row.mode)) + "," + box_column(row.box_count) + "," +
           std::to_string(c.episodes) + "," + std::to_string(c.successes) + "," +
           format_exact(c.success_rate) + "," +
           (c.preference_score ? format_exact(*c.preference_score) : "") + "," +
           format_exact(c.success_scaled) + "\n";
  }
  return out;
}

std::string metrics_markdown(const MetricsTable& table) {
  std::set<std::size_t> counts;
  for (const auto& row : table.rows) {
    if (row.box_count != 0) counts.insert(row.box_count);
  }
  std::vector<std::size_t> columns(counts.begin(), counts.end());
  columns.push_back(0);

  // Row keys in first-appearance order, which aggregate() already sorts.
  std::vector<std::tuple<std::string, std::string, Mode>> keys;
  std::map<std::tuple<std::string, std::string, Mode, std::size_t>, const MetricsRow*> index;
  for (const auto& row : table.rows) {
    auto key = std::make_tuple(row.preferences, row.agent, row.mode);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    index[{row.preferences, row.agent, row.mode, row.box_count}] = &row;
  }

  std::string out = "| Preference | Agent |";
  std::string rule = "|---|---|";
  for (auto c : columns) {
    out += c == 0 ? " All |" : " " + std::to_string(c) + " boxes |";
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  for (const auto& [prefs, agent, mode] : keys) {
    const std::string label =
        prefs == "all" ? "All" : PreferenceSet::parse(prefs).label();
    out += "| " + label + " | " + agent + " (" + std::string(to_string(mode)) + ") |";
    for (auto c : columns) {
      const auto it = index.find({prefs, agent, mode, c});
      out += " " + (it == index.end() ? std::string("n/a") : format_cell(it->second->cell)) + " |";
    }
    out += "\n";
  }
  out += "\nCells read success rate / preference score over successes / success-scaled score.\n";
  return out;
}

nlohmann::ordered_json metrics_summary(const MetricsTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json j;
    j["preferences"] = row.preferences;
    j["agent"] = row.agent;
    j["mode"] = to_string(row.mode);
    j["box_count"] = row.box_count;
    j["episodes"] = row.cell.episodes;
    j["successes"] = row.cell.successes;
    j["success_rate"] = row.cell.success_rate;
    j["preference_score"] =
        row.cell.preference_score ? nlohmann::ordered_json(*row.cell.preference_score)
                                  : nlohmann::ordered_json(nullptr);
    j["success_scaled"] = row.cell.success_scaled;
    rows.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["format"] = "stacklab-metrics-v1";
  out["rows"] = std::move(rows);
  return out;
}

void export_results(const std::vector<EpisodeResult>& results, const MetricsTable& table,
                    const std::string& dir) {
  const std::filesystem::path base(dir);
  write_text_file((base / "results.csv").string(), results_csv(results));
  write_text_file((base / "metrics.csv").string(), metrics_csv(table));
  write_text_file((base / "metrics.md").string(), metrics_markdown(table));
  write_text_file((base / "summary.json").string(), metrics_summary(table).dump(2) + "\n");
}

}  // namespace stacklab
