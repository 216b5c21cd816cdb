#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "weakform/utility.hpp"

namespace weakform {

using Json = nlohmann::ordered_json;

inline std::string to_string(const Count& c) { return c.str(); }

/// Exact rationals are written "num/den" (integers stay "num/1").
inline std::string to_string(const Rational& r) {
  return boost::multiprecision::numerator(r).str() + "/" + boost::multiprecision::denominator(r).str();
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Parses JSON text; errors carry line and column.
inline Json parse_json(std::string_view text, std::string_view what = "document") {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const auto end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorCode::ParseError, std::string(what) + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                    ": " + e.what());
  }
}

namespace detail {

template <class T>
T json_get(const Json& j, const std::string& key, std::string_view where) {
  if (!j.is_object() || !j.contains(key))
    fail(ErrorCode::ParseError, std::string(where) + ": missing field \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string(where) + ": field \"" + key + "\": " + e.what());
  }
}

}  // namespace detail

// ---- environments ---------------------------------------------------------

inline Json to_json(const Environment& env) {
  Json programs = Json::array();
  for (const auto& p : env.vocabulary()) programs.push_back(p.states());
  return Json{{"states", env.state_count()}, {"vocabulary", std::move(programs)}};
}

inline Environment environment_from_json(const Json& j, Settings settings = {}) {
  const auto states = detail::json_get<std::size_t>(j, "states", "environment");
  const auto programs = detail::json_get<std::vector<std::vector<std::size_t>>>(j, "vocabulary", "environment");
  return Environment::make(states, programs, settings);
}

/// Loads {"states": n, "vocabulary": [[...], ...]}. Check reordered() to warn.
inline Environment load_environment(const std::filesystem::path& path, Settings settings = {}) {
  return environment_from_json(parse_json(read_file(path), path.string()), settings);
}

/// Stable identity of an environment: FNV-1a of its canonical JSON.
inline std::string environment_hash(const Environment& env) {
  return hex64(fnv1a(to_json(env).dump()));
}

// ---- statements and tasks -------------------------------------------------

inline Json to_json(const Statement& s) { return Json(std::vector<std::size_t>(s.indices().begin(), s.indices().end())); }

inline Statement statement_from_json(const Json& j) {
  try {
    const auto v = j.get<std::vector<std::size_t>>();
    std::vector<Statement::index_type> idx(v.begin(), v.end());
    std::sort(idx.begin(), idx.end());
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
      fail(ErrorCode::ParseError, "statement " + j.dump() + " repeats a program index");
    return Statement(std::move(idx));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, "statement " + j.dump() + ": " + e.what());
  }
}

inline std::vector<Statement> statements_from_json(const Json& j, std::string_view where) {
  if (!j.is_array()) fail(ErrorCode::ParseError, std::string(where) + ": expected an array of statements");
  std::vector<Statement> out;
  for (const auto& s : j) out.push_back(statement_from_json(s));
  return out;
}

inline Json statements_json(const Language& lang, const Bitset& bits) {
  Json out = Json::array();
  bits.for_each([&](std::size_t i) { out.push_back(to_json(lang.statement(i))); });
  return out;
}

inline Json to_json(const Task& task) {
  return Json{{"env", to_json(task.environment())},
              {"inputs", statements_json(task.language(), task.input_bits())},
              {"outputs", statements_json(task.language(), task.output_bits())}};
}

/// {"env": <path or inline>, "inputs": [...], "outputs": [...]}. Statement
/// indices refer to the canonical program order. A relative env path is
/// resolved against `base_dir`.
inline Task task_from_json(const Json& j, const std::filesystem::path& base_dir = {}, Settings settings = {}) {
  if (!j.is_object() || !j.contains("env")) fail(ErrorCode::ParseError, "task: missing field \"env\"");
  const auto& e = j.at("env");
  Environment env = e.is_string() ? load_environment(base_dir / e.get<std::string>(), settings)
                                  : environment_from_json(e, settings);
  if (!j.contains("inputs") || !j.contains("outputs"))
    fail(ErrorCode::ParseError, "task: needs \"inputs\" and \"outputs\"");
  auto lang = Language::build(std::move(env));
  const auto inputs = statements_from_json(j.at("inputs"), "task inputs");
  const auto outputs = statements_from_json(j.at("outputs"), "task outputs");
  return Task::make(std::move(lang), inputs, outputs);
}

inline Task load_task(const std::filesystem::path& path, Settings settings = {}) {
  return task_from_json(parse_json(read_file(path), path.string()), path.parent_path(), settings);
}

// ---- proxies --------------------------------------------------------------

/// {"pairs": [[a, b], ...]} with each of a, b a statement; (a, b) means a < b.
inline Proxy proxy_table_from_json(const Json& j, std::string label) {
  if (!j.is_object() || !j.contains("pairs") || !j.at("pairs").is_array())
    fail(ErrorCode::ParseError, "proxy table: expected {\"pairs\": [...]}");
  Proxy::PairSet pairs;
  for (const auto& p : j.at("pairs")) {
    if (!p.is_array() || p.size() != 2) fail(ErrorCode::ParseError, "proxy table: pair " + p.dump());
    pairs.emplace(statement_from_json(p[0]), statement_from_json(p[1]));
  }
  return Proxy::table(std::move(pairs), std::move(label));
}

/// weakness | simplicity | random:<seed> | table:<path>
inline Proxy parse_proxy(std::string_view name, const std::filesystem::path& base_dir = {}) {
  if (name == "weakness") return Proxy::weakness();
  if (name == "simplicity") return Proxy::simplicity();
  if (name.starts_with("random:")) {
    const auto digits = name.substr(7);
    std::uint64_t seed = 0;
    bool ok = !digits.empty() && digits.size() <= 20;
    for (char c : digits) {
      if (c < '0' || c > '9') {
        ok = false;
        break;
      }
      const auto d = static_cast<std::uint64_t>(c - '0');
      if (seed > (UINT64_MAX - d) / 10) {
        ok = false;
        break;
      }
      seed = seed * 10 + d;
    }
    if (ok) return Proxy::random(seed);
  }
  if (name.starts_with("table:") && name.size() > 6) {
    const std::string path(name.substr(6));
    const auto full = base_dir / path;
    return proxy_table_from_json(parse_json(read_file(full), full.string()), path);
  }
  fail(ErrorCode::UnknownProxy, "unknown proxy \"" + std::string(name) + "\"");
}

/// Cheap syntax check, no file access.
inline bool is_proxy_name(std::string_view name) {
  if (name == "weakness" || name == "simplicity") return true;
  if (name.starts_with("table:")) return name.size() > 6;
  if (!name.starts_with("random:") || name.size() == 7 || name.size() > 27) return false;
  for (char c : name.substr(7))
    if (c < '0' || c > '9') return false;
  return true;
}

// ---- tables and reports ---------------------------------------------------

/// statement,numerator,denominator with statements written "[0;2]".
inline std::string generalization_table_csv(const GeneralizationTable& table) {
  const auto& lang = *table.language();
  std::string out = "statement,numerator,denominator\n";
  const auto den = table.denominator().str();
  for (std::size_t i = 0; i < lang.size(); ++i) {
    auto s = lang.statement(i).to_string();
    std::replace(s.begin(), s.end(), ',', ';');
    out += s + "," + std::to_string(table.numerator(i)) + "," + den + "\n";
  }
  return out;
}

inline Json to_json(const UtilityRow& row) {
  Json j{{"candidate", row.candidate}, {"vocabulary", row.vocabulary}, {"language", row.language_size}};
  if (row.error) {
    j["utility"] = nullptr;
    j["error"] = std::string(to_string(*row.error));
  } else {
    j["utility"] = row.utility->str();
    j["witness"] = to_json(*row.witness);
    j["witness_programs"] = row.witness_programs;
  }
  j["strict_child"] = row.strict_child;
  return j;
}

/// Context a verification report carries so it can be reproduced alone.
struct ReportContext {
  std::string version;
  std::string environment_hash;
  std::vector<std::string> candidates;
  Limits limits;
  std::vector<std::uint64_t> seeds;
  std::string task_id;
};

inline Json to_json(const Limits& l) {
  return Json{{"vocabulary", l.vocabulary},
              {"truth_set", l.truth_set},
              {"task_space", l.task_space},
              {"powerset_states", l.powerset_states}};
}

inline Json to_json(const ReportContext& c) {
  return Json{{"version", c.version},     {"environment_hash", c.environment_hash},
              {"task", c.task_id},        {"candidates", c.candidates},
              {"guards", to_json(c.limits)}, {"seeds", c.seeds},
              {"universe", "finite: listed candidates only"}};
}

inline Json to_json(const UpperBoundReport& r, const CandidateSet& candidates, const ReportContext& context) {
  Json ranking = Json::array();
  for (std::size_t k = 0; k < r.ranking.size(); ++k) {
    const auto& p = r.ranking[k];
    ranking.push_back(Json{{"rank", k},
                           {"candidate", p.candidate},
                           {"vocabulary", candidates.restriction(p.candidate).label()},
                           {"policy", to_json(p.policy)},
                           {"extension_size", p.extension_size},
                           {"probability", to_string(p.probability)},
                           {"selected", r.selected && *r.selected == k}});
  }
  Json utilities = Json::array();
  for (const auto& row : r.utilities.rows) utilities.push_back(to_json(row));
  Json j{{"context", to_json(context)}};
  if (r.no_candidate()) {
    j["outcome"] = "NoCandidate";
  } else {
    const auto& s = r.ranking[*r.selected];
    j["outcome"] = r.attained ? "attained" : "not_attained";
    j["selected"] = Json{{"candidate", s.candidate},
                         {"vocabulary", candidates.restriction(s.candidate).label()},
                         {"policy", to_json(s.policy)},
                         {"probability", to_string(s.probability)}};
    j["best_probability"] = to_string(r.best_probability);
  }
  j["utilities"] = std::move(utilities);
  j["ranking"] = std::move(ranking);
  return j;
}

/// Aligned columns; each cell is left-padded to its column width.
inline std::string aligned_table(const std::vector<std::string>& header,
                                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  auto widen = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  };
  widen(header);
  for (const auto& r : rows) widen(r);
  std::string out;
  auto emit = [&](const std::vector<std::string>& r) {
    std::string line;
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < r.size() ? r[c] : "";
      line += cell;
      if (c + 1 < width.size()) line += std::string(width[c] - cell.size() + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  return out;
}

/// Same content as the JSON form, for people.
inline std::string to_text(const UpperBoundReport& r, const CandidateSet& candidates, const ReportContext& context) {
  const Json j = to_json(r, candidates, context);
  std::string out;
  for (const auto& [k, v] : j.at("context").items()) out += k + ": " + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
  out += "outcome: " + j.at("outcome").get<std::string>() + "\n";
  if (j.contains("selected")) {
    const auto& s = j.at("selected");
    out += "selected: " + s.at("vocabulary").get<std::string>() + " " + s.at("policy").dump() + " p=" +
           s.at("probability").get<std::string>() + "\n";
    out += "best_probability: " + j.at("best_probability").get<std::string>() + "\n";
  }
  out += "\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& u : j.at("utilities"))
    rows.push_back({std::to_string(u.at("candidate").get<std::size_t>()), u.at("vocabulary").get<std::string>(),
                    std::to_string(u.at("language").get<std::size_t>()),
                    u.at("utility").is_null() ? u.at("error").get<std::string>() : u.at("utility").get<std::string>(),
                    u.contains("witness") ? u.at("witness").dump() : "",
                    u.at("strict_child").get<bool>() ? "yes" : "no"});
  out += aligned_table({"candidate", "vocabulary", "language", "utility", "witness", "strict_child"}, rows);
  out += "\n";
  rows.clear();
  for (const auto& p : j.at("ranking"))
    rows.push_back({std::to_string(p.at("rank").get<std::size_t>()), p.at("vocabulary").get<std::string>(),
                    p.at("policy").dump(), std::to_string(p.at("extension_size").get<std::size_t>()),
                    p.at("probability").get<std::string>(), p.at("selected").get<bool>() ? "*" : ""});
  out += aligned_table({"rank", "vocabulary", "policy", "extension_size", "probability", "selected"}, rows);
  return out;
}

/// Writes `content` to `path` via a temporary file and rename, so readers
/// never see a partial file.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorCode::IoError, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::IoError, "cannot move report into place at " + path.string());
  }
}

}  // namespace weakform
