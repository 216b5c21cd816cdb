#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "weakform/io.hpp"
#include "weakform/version.hpp"

namespace weakform {

enum class ExperimentKind { enumerate, learn, compare_proxies, utility, verify_bound, sample_gen };

inline constexpr std::string_view to_string(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::enumerate: return "enumerate";
    case ExperimentKind::learn: return "learn";
    case ExperimentKind::compare_proxies: return "compare-proxies";
    case ExperimentKind::utility: return "utility";
    case ExperimentKind::verify_bound: return "verify-bound";
    case ExperimentKind::sample_gen: return "sample-gen";
  }
  return "?";
}

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::enumerate, ExperimentKind::learn, ExperimentKind::compare_proxies,
                 ExperimentKind::utility, ExperimentKind::verify_bound, ExperimentKind::sample_gen})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

enum class ReportFormat { csv, json, text };

inline constexpr std::string_view to_string(ReportFormat f) noexcept {
  switch (f) {
    case ReportFormat::csv: return "csv";
    case ReportFormat::json: return "json";
    case ReportFormat::text: return "text";
  }
  return "?";
}

inline std::optional<ReportFormat> parse_report_format(std::string_view s) {
  for (auto f : {ReportFormat::csv, ReportFormat::json, ReportFormat::text})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

/// Where the environment comes from. Exactly one form is active.
struct EnvironmentSource {
  enum class Kind { file, inline_env, generator, powerset };
  Kind kind = Kind::powerset;
  std::string path;                               // file
  std::size_t states = 2;                         // inline_env, generator, powerset
  std::vector<std::vector<std::size_t>> programs; // inline_env
  std::size_t program_count = 0;                  // generator
  std::uint64_t seed = 0;                         // generator
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::enumerate;
  EnvironmentSource environment;
  bool empty_statement = true;
  bool empty_outputs = true;
  Limits guards;
  std::vector<std::string> proxies{"weakness", "simplicity"};
  std::vector<std::uint64_t> seeds{0};
  std::size_t trials = 10;        // learn: parents per seed
  std::size_t child_inputs = 1;   // learn: |I_α|
  std::uint64_t samples = 1000;   // sample-gen: draws per statement
  std::optional<Json> task;       // utility, verify-bound: one ρ, or a sweep when absent
  std::size_t max_inputs = 0;     // sweep bounds, 0 = none
  std::size_t max_outputs = 0;
  Json candidates = "all";        // "all" | "within_guard" | [[program...]...]
  bool full_detail = false;
  unsigned jobs = 1;
  bool timing = false;
  std::string output;             // empty: stdout
  ReportFormat format = ReportFormat::csv;

  std::filesystem::path base_dir; // for relative paths; not serialised

  Settings settings() const { return Settings{guards, empty_statement, empty_outputs}; }
};

/// Canonical form: every field written, fixed order.
inline Json to_json(const ExperimentConfig& c) {
  Json env;
  switch (c.environment.kind) {
    case EnvironmentSource::Kind::file: env = Json{{"file", c.environment.path}}; break;
    case EnvironmentSource::Kind::inline_env:
      env = Json{{"states", c.environment.states}, {"vocabulary", c.environment.programs}};
      break;
    case EnvironmentSource::Kind::generator:
      env = Json{{"generator", Json{{"states", c.environment.states},
                                    {"programs", c.environment.program_count},
                                    {"seed", c.environment.seed}}}};
      break;
    case EnvironmentSource::Kind::powerset: env = Json{{"powerset", c.environment.states}}; break;
  }
  return Json{{"experiment", to_string(c.experiment)},
              {"environment", std::move(env)},
              {"empty_statement", c.empty_statement},
              {"empty_outputs", c.empty_outputs},
              {"guards", to_json(c.guards)},
              {"proxies", c.proxies},
              {"seeds", c.seeds},
              {"trials", c.trials},
              {"child_inputs", c.child_inputs},
              {"samples", c.samples},
              {"task", c.task ? *c.task : Json(nullptr)},
              {"max_inputs", c.max_inputs},
              {"max_outputs", c.max_outputs},
              {"candidates", c.candidates},
              {"detail", c.full_detail ? "full" : "summary"},
              {"jobs", c.jobs},
              {"timing", c.timing},
              {"output", Json{{"path", c.output}, {"format", to_string(c.format)}}}};
}

inline std::string serialize(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a(serialize(c))); }

namespace detail {

template <class T>
T config_value(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("config field \"") + key + "\": " + e.what());
  }
}

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, std::string_view where) {
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || k == a;
    if (!known) fail(ErrorCode::ParseError, std::string(where) + ": unknown field \"" + k + "\"");
  }
}

inline EnvironmentSource environment_source(const Json& j) {
  EnvironmentSource src;
  if (!j.is_object()) fail(ErrorCode::ParseError, "config field \"environment\" must be an object");
  if (j.contains("file")) {
    check_keys(j, {"file"}, "environment");
    src.kind = EnvironmentSource::Kind::file;
    src.path = config_value<std::string>(j, "file", "");
  } else if (j.contains("generator")) {
    check_keys(j, {"generator"}, "environment");
    const auto& g = j.at("generator");
    if (!g.is_object()) fail(ErrorCode::ParseError, "environment.generator must be an object");
    check_keys(g, {"states", "programs", "seed"}, "environment.generator");
    src.kind = EnvironmentSource::Kind::generator;
    src.states = config_value<std::size_t>(g, "states", 2);
    src.program_count = config_value<std::size_t>(g, "programs", 2);
    src.seed = config_value<std::uint64_t>(g, "seed", 0);
  } else if (j.contains("powerset")) {
    check_keys(j, {"powerset"}, "environment");
    src.kind = EnvironmentSource::Kind::powerset;
    src.states = config_value<std::size_t>(j, "powerset", 2);
  } else if (j.contains("states")) {
    check_keys(j, {"states", "vocabulary"}, "environment");
    src.kind = EnvironmentSource::Kind::inline_env;
    src.states = config_value<std::size_t>(j, "states", 1);
    src.programs = config_value<std::vector<std::vector<std::size_t>>>(j, "vocabulary", {});
  } else {
    fail(ErrorCode::ParseError, "environment needs one of file, states, generator, powerset");
  }
  return src;
}

}  // namespace detail

/// Parses and validates a JSON config. Missing fields take defaults, which
/// serialize() then writes out explicitly.
inline ExperimentConfig parse_config(std::string_view text, std::filesystem::path base_dir = {}) {
  const Json j = parse_json(text, "config");
  if (!j.is_object()) fail(ErrorCode::ParseError, "config: expected a JSON object");
  detail::check_keys(j,
                     {"experiment", "environment", "empty_statement", "empty_outputs", "guards", "proxies", "seeds",
                      "trials", "child_inputs", "samples", "task", "max_inputs", "max_outputs", "candidates",
                      "detail", "jobs", "timing", "output"},
                     "config");
  ExperimentConfig c;
  c.base_dir = std::move(base_dir);
  const auto kind = detail::config_value<std::string>(j, "experiment", "");
  if (auto k = parse_experiment_kind(kind)) {
    c.experiment = *k;
  } else {
    fail(ErrorCode::ParseError, "config: unknown experiment \"" + kind + "\"");
  }
  if (j.contains("environment")) c.environment = detail::environment_source(j.at("environment"));
  c.empty_statement = detail::config_value(j, "empty_statement", c.empty_statement);
  c.empty_outputs = detail::config_value(j, "empty_outputs", c.empty_outputs);
  if (j.contains("guards")) {
    const auto& g = j.at("guards");
    if (!g.is_object()) fail(ErrorCode::ParseError, "config field \"guards\" must be an object");
    detail::check_keys(g, {"vocabulary", "truth_set", "task_space", "powerset_states"}, "guards");
    c.guards.vocabulary = detail::config_value(g, "vocabulary", c.guards.vocabulary);
    c.guards.truth_set = detail::config_value(g, "truth_set", c.guards.truth_set);
    c.guards.task_space = detail::config_value(g, "task_space", c.guards.task_space);
    c.guards.powerset_states = detail::config_value(g, "powerset_states", c.guards.powerset_states);
  }
  auto guard = [](const char* name, std::size_t value, std::size_t hard) {
    if (value > hard)
      fail(ErrorCode::GuardConflict, std::string("guard ") + name + " = " + std::to_string(value) +
                                         " exceeds the hard maximum " + std::to_string(hard));
  };
  guard("vocabulary", c.guards.vocabulary, Limits::max_vocabulary);
  guard("truth_set", c.guards.truth_set, Limits::max_truth_set);
  guard("task_space", c.guards.task_space, Limits::max_task_space);
  guard("powerset_states", c.guards.powerset_states, Limits::max_powerset_states);

  c.proxies = detail::config_value(j, "proxies", c.proxies);
  for (const auto& p : c.proxies)
    if (!is_proxy_name(p)) fail(ErrorCode::UnknownProxy, "unknown proxy \"" + p + "\"");
  c.seeds = detail::config_value(j, "seeds", c.seeds);
  if (c.seeds.empty()) fail(ErrorCode::ParseError, "config: seeds must not be empty");
  c.trials = detail::config_value(j, "trials", c.trials);
  c.child_inputs = detail::config_value(j, "child_inputs", c.child_inputs);
  if (c.child_inputs == 0) fail(ErrorCode::ParseError, "config: child_inputs must be at least 1");
  c.samples = detail::config_value(j, "samples", c.samples);
  if (j.contains("task") && !j.at("task").is_null()) c.task = j.at("task");
  c.max_inputs = detail::config_value(j, "max_inputs", c.max_inputs);
  c.max_outputs = detail::config_value(j, "max_outputs", c.max_outputs);
  if (j.contains("candidates")) {
    c.candidates = j.at("candidates");
    const bool named = c.candidates.is_string() &&
                       (c.candidates == "all" || c.candidates == "within_guard");
    if (!named && !c.candidates.is_array())
      fail(ErrorCode::ParseError, "config: candidates must be \"all\", \"within_guard\" or a list");
  }
  const auto detail_level = detail::config_value<std::string>(j, "detail", "summary");
  if (detail_level != "summary" && detail_level != "full")
    fail(ErrorCode::ParseError, "config: detail must be summary or full");
  c.full_detail = detail_level == "full";
  c.jobs = detail::config_value(j, "jobs", c.jobs);
  if (c.jobs == 0) fail(ErrorCode::ParseError, "config: jobs must be at least 1");
  c.timing = detail::config_value(j, "timing", c.timing);
  if (j.contains("output")) {
    const auto& o = j.at("output");
    if (!o.is_object()) fail(ErrorCode::ParseError, "config field \"output\" must be an object");
    detail::check_keys(o, {"path", "format"}, "output");
    c.output = detail::config_value<std::string>(o, "path", "");
    const auto f = detail::config_value<std::string>(o, "format", "csv");
    if (auto fmt = parse_report_format(f)) {
      c.format = *fmt;
    } else {
      fail(ErrorCode::ParseError, "config: unknown output format \"" + f + "\"");
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.parent_path());
}

/// A random vocabulary of `program_count` distinct programs over `states` states.
inline Environment generate_environment(std::size_t states, std::size_t program_count, std::uint64_t seed,
                                        Settings settings = {}) {
  if (states == 0 || states > 20) fail(ErrorCode::StateOutOfRange, "generator supports 1..20 states");
  const std::uint64_t universe = 1ull << states;
  if (program_count > universe)
    fail(ErrorCode::InvalidVocabulary, "cannot draw " + std::to_string(program_count) + " distinct programs over " +
                                           std::to_string(states) + " states");
  Rng rng(seed);
  std::vector<std::uint64_t> chosen;
  std::unordered_set<std::uint64_t> seen;
  while (chosen.size() < program_count) {
    const auto mask = rng.uniform(universe);
    if (seen.insert(mask).second) chosen.push_back(mask);
  }
  std::vector<std::vector<std::size_t>> programs;
  for (auto mask : chosen) programs.push_back(detail::mask_to_bits(mask, states).indices());
  return Environment::make(states, programs, settings);
}

inline Environment build_environment(const ExperimentConfig& c) {
  const auto settings = c.settings();
  const auto& src = c.environment;
  switch (src.kind) {
    case EnvironmentSource::Kind::file: return load_environment(c.base_dir / src.path, settings);
    case EnvironmentSource::Kind::inline_env: return Environment::make(src.states, src.programs, settings);
    case EnvironmentSource::Kind::generator:
      return generate_environment(src.states, src.program_count, src.seed, settings);
    case EnvironmentSource::Kind::powerset: return full_powerset_vocabulary(src.states, settings);
  }
  fail(ErrorCode::ParseError, "unknown environment source");
}

// ---- report rows ----------------------------------------------------------

/// One output line. Empty strings are blank cells.
struct ReportRow {
  std::string experiment;
  std::string env_hash;
  std::size_t states = 0;
  std::size_t vocabulary = 0;
  std::size_t language = 0;
  std::string task_space;  // exact |Γ_v|, or "est" when past the guard
  std::string task_id;
  std::string task;
  std::string candidate;
  std::string proxy;
  std::string policy;
  std::string extension_size;
  std::string generalized;
  std::string utility;
  std::string metric;
  std::string value;
  std::string seed;
  std::string wall_ms;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{
      "experiment", "env_hash", "states",    "vocabulary", "language",  "task_space",
      "task_id",    "task",     "candidate", "proxy",      "policy",    "extension_size",
      "generalized", "utility", "metric",    "value",      "seed",      "wall_ms"};
  return cols;
}

inline std::vector<std::string> cells(const ReportRow& r) {
  return {r.experiment, r.env_hash, std::to_string(r.states), std::to_string(r.vocabulary),
          std::to_string(r.language), r.task_space, r.task_id, r.task, r.candidate, r.proxy, r.policy,
          r.extension_size, r.generalized, r.utility, r.metric, r.value, r.seed, r.wall_ms};
}

struct Report {
  Json meta;  // null: plain output with no preamble
  std::vector<ReportRow> rows;
};

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

/// CSV: optional "# key: value" preamble, then the fixed header and rows.
/// JSON: an array of row objects, wrapped as {"meta", "rows"} when meta is set.
/// Text: aligned columns with the same preamble.
inline std::string render_report(const Report& report, ReportFormat format) {
  if (report.rows.empty()) fail(ErrorCode::EmptyReport, "report has no rows");
  const auto& cols = report_columns();
  switch (format) {
    case ReportFormat::csv:
    case ReportFormat::text: {
      std::string out;
      if (!report.meta.is_null())
        for (const auto& [k, v] : report.meta.items())
          out += "# " + k + ": " + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
      if (format == ReportFormat::text) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : report.rows) rows.push_back(cells(r));
        return out + aligned_table(cols, rows);
      }
      for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
      out += "\n";
      for (const auto& r : report.rows) {
        const auto cs = cells(r);
        for (std::size_t i = 0; i < cs.size(); ++i) out += (i ? "," : "") + csv_escape(cs[i]);
        out += "\n";
      }
      return out;
    }
    case ReportFormat::json: {
      Json rows = Json::array();
      for (const auto& r : report.rows) {
        const auto cs = cells(r);
        Json obj = Json::object();
        for (std::size_t i = 0; i < cols.size(); ++i) obj[cols[i]] = cs[i];
        rows.push_back(std::move(obj));
      }
      if (report.meta.is_null()) return rows.dump(2) + "\n";
      return Json{{"meta", report.meta}, {"rows", std::move(rows)}}.dump(2) + "\n";
    }
  }
  return {};
}

/// Atomic: the file appears whole or not at all.
inline void write_report(const Report& report, const std::filesystem::path& path, ReportFormat format) {
  atomic_write(path, render_report(report, format));
}

inline void write_report(const std::vector<ReportRow>& rows, const std::filesystem::path& path,
                         ReportFormat format) {
  write_report(Report{Json(nullptr), rows}, path, format);
}

// ---- experiments ----------------------------------------------------------

namespace detail {

/// Runs f(i) for i in [0, n) on `jobs` threads; results keep index order.
template <class F>
auto parallel_map(std::size_t n, unsigned jobs, F&& f) {
  using R = decltype(f(std::size_t{0}));
  std::vector<R> out(n);
  jobs = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(jobs, n)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(jobs);
  {
    std::vector<std::jthread> threads;
    for (unsigned j = 0; j < jobs; ++j)
      threads.emplace_back([&, j] {
        try {
          for (std::size_t i = n * j / jobs; i < n * (j + 1) / jobs; ++i) out[i] = f(i);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
  std::string ms() const {
    if (!on_) return "";
    const auto d = std::chrono::steady_clock::now() - start_;
    return std::to_string(std::chrono::duration_cast<std::chrono::milliseconds>(d).count());
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point start_;
};

struct RunContext {
  const ExperimentConfig& config;
  Environment env;
  LanguagePtr lang;
  ReportRow base;
};

inline RunContext make_context(const ExperimentConfig& c) {
  RunContext ctx{c, build_environment(c), nullptr, {}};
  ctx.lang = Language::build(ctx.env);
  ctx.base.experiment = std::string(to_string(c.experiment));
  ctx.base.env_hash = environment_hash(ctx.env);
  ctx.base.states = ctx.env.state_count();
  ctx.base.vocabulary = ctx.env.vocabulary_size();
  ctx.base.language = ctx.lang->size();
  ctx.base.task_space = ctx.lang->size() <= ctx.env.limits().task_space
                            ? to_string(TaskSpace(ctx.lang).total_count())
                            : "est";
  return ctx;
}

inline TaskBounds sweep_bounds(const ExperimentConfig& c) {
  TaskBounds b;
  if (c.max_inputs) b.max_inputs = c.max_inputs;
  if (c.max_outputs) b.max_outputs = c.max_outputs;
  return b;
}

inline std::vector<Proxy> proxies(const ExperimentConfig& c) {
  std::vector<Proxy> out;
  for (const auto& name : c.proxies) out.push_back(parse_proxy(name, c.base_dir));
  return out;
}

inline std::vector<ReportRow> run_enumerate(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto& lang = *ctx.lang;
  std::vector<ReportRow> rows;
  std::optional<GeneralizationTable> table;
  if (lang.size() <= ctx.env.limits().task_space) table = GeneralizationTable::build(ctx.lang, c.jobs);
  for (std::size_t i = 0; i < lang.size(); ++i) {
    ReportRow r = ctx.base;
    r.task_id = std::to_string(i);
    r.policy = lang.statement(i).to_string();
    r.extension_size = std::to_string(lang.extension_size(i));
    r.metric = "generalization";
    r.value = table ? to_string(table->probability(i)) : "";
    rows.push_back(std::move(r));
  }
  if (c.full_detail) {
    const TaskSpace space(ctx.lang);
    std::uint64_t id = 0;
    for (const auto& t : space.tasks(sweep_bounds(c))) {
      ReportRow r = ctx.base;
      r.task_id = std::to_string(id++);
      r.task = t.id();
      r.metric = "hierarchy_level";
      r.value = std::to_string(space.level(t));
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

inline std::vector<ReportRow> run_sample_gen(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto& lang = *ctx.lang;
  std::optional<GeneralizationTable> table;
  if (lang.size() <= ctx.env.limits().task_space) table = GeneralizationTable::build(ctx.lang, c.jobs);
  std::vector<ReportRow> rows;
  for (auto seed : c.seeds) {
    auto per = parallel_map(lang.size(), c.jobs, [&](std::size_t i) {
      Stopwatch sw(c.timing);
      const auto est = estimate_generalization(ctx.lang, lang.statement(i), c.samples, derive_seed(seed, i));
      std::vector<ReportRow> out;
      ReportRow r = ctx.base;
      r.task_id = std::to_string(i);
      r.policy = lang.statement(i).to_string();
      r.extension_size = std::to_string(lang.extension_size(i));
      r.seed = std::to_string(seed);
      r.metric = "generalization_estimate";
      r.value = std::to_string(est.hits) + "/" + std::to_string(est.samples);
      r.wall_ms = sw.ms();
      out.push_back(r);
      if (table) {
        r.metric = "generalization_exact";
        r.value = to_string(table->probability(i));
        out.push_back(r);
      }
      return out;
    });
    for (auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
  }
  return rows;
}

/// A child of `parent` per the examples scheme: k random inputs, outputs
/// kept where they complete a kept input, trimmed to stay strict.
inline std::optional<Task> derive_child(const Task& parent, std::size_t k, Rng& rng) {
  auto inputs = parent.input_bits().indices();
  if (inputs.size() < 2) return std::nullopt;
  k = std::min(k, inputs.size() - 1);
  for (std::size_t i = 0; i < k; ++i) std::swap(inputs[i], inputs[i + rng.uniform(inputs.size() - i)]);
  const auto& lang = parent.language_ptr();
  Bitset I(lang->size());
  for (std::size_t i = 0; i < k; ++i) I.set(inputs[i]);
  const Bitset ext = lang->extension_of(I);
  Bitset O = parent.output_bits() & ext;
  if (O == ext) {
    std::size_t last = 0;
    O.for_each([&](std::size_t p) { last = p; });
    O.reset(last);
  }
  Bitset scratch;
  if (Task::check(*lang, I, O, scratch)) return std::nullopt;
  return Task::from_bits(lang, std::move(I), std::move(O));
}

inline std::vector<ReportRow> run_learn(const RunContext& ctx) {
  const auto& c = ctx.config;
  const TaskSpace space(ctx.lang);
  const auto ps = proxies(c);
  std::vector<ReportRow> rows;
  for (auto seed : c.seeds) {
    auto per = parallel_map(c.trials, c.jobs, [&](std::size_t trial) {
      Stopwatch sw(c.timing);
      Rng rng(derive_seed(seed, trial));
      std::optional<Task> parent, child;
      for (int attempt = 0; attempt < 1000 && !child; ++attempt) {
        parent = space.sample(rng);
        child = derive_child(*parent, c.child_inputs, rng);
      }
      std::vector<ReportRow> out;
      ReportRow r = ctx.base;
      r.task_id = std::to_string(trial);
      r.seed = std::to_string(seed);
      if (!child) {
        r.metric = "error";
        r.value = "no parent with a valid child in 1000 draws";
        out.push_back(r);
        return out;
      }
      if (!is_child(*child, *parent))
        fail(ErrorCode::InvariantViolation, "derived " + child->id() + " is not a child of " + parent->id());
      r.task = child->id();
      std::optional<Count> eps;
      if (!correct_policies(*child).empty()) eps = utility(*child);
      r.utility = eps ? eps->str() : "";
      for (const auto& proxy : ps) {
        ReportRow row = r;
        row.proxy = proxy.name();
        row.metric = "parent";
        try {
          const auto pi = learn(*child, proxy);
          row.policy = pi.to_string();
          row.extension_size = std::to_string(ctx.lang->extension_size(ctx.lang->require_index(pi)));
          row.generalized = evaluate_generalization(pi, *parent) ? "true" : "false";
          row.value = parent->id();
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoCorrectPolicy) throw;
          row.metric = "error";
          row.value = std::string(to_string(e.code()));
        }
        row.wall_ms = sw.ms();
        out.push_back(std::move(row));
      }
      return out;
    });
    for (auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
  }
  return rows;
}

inline std::vector<ReportRow> run_compare_proxies(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto table = GeneralizationTable::build(ctx.lang, c.jobs);
  const auto ps = proxies(c);
  std::vector<ReportRow> rows;
  for (const auto& p : ps) {
    ReportRow r = ctx.base;
    r.proxy = p.name();
    r.metric = "disagreements";
    r.value = std::to_string(disagreements(table, p));
    rows.push_back(std::move(r));
  }
  for (const auto& a : ps)
    for (const auto& b : ps) {
      if (&a == &b) continue;
      ReportRow r = ctx.base;
      r.proxy = a.name() + "|" + b.name();
      r.metric = "sample_efficiency";
      r.value = std::to_string(sample_efficiency(table, a, b));
      rows.push_back(std::move(r));
    }
  return rows;
}

inline std::vector<VocabularyChoice> candidate_choices(const ExperimentConfig& c, const Environment& env) {
  const auto& spec = c.candidates;
  if (spec.is_string()) {
    auto all = all_vocabularies(env);
    if (spec == "all") return all;
    std::vector<VocabularyChoice> fit;
    for (auto& v : all) {
      std::vector<Program> programs;
      v.for_each([&](std::size_t p) { programs.push_back(env.program(p)); });
      if (enumerate_language(Environment::make(env.state_count(), programs, env.settings())).size() <=
          env.limits().task_space)
        fit.push_back(std::move(v));
    }
    return fit;
  }
  std::vector<VocabularyChoice> out;
  for (const auto& vj : spec) {
    VocabularyChoice v(env.vocabulary_size());
    std::vector<std::vector<std::size_t>> programs;
    try {
      programs = vj.get<std::vector<std::vector<std::size_t>>>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ParseError, "candidate " + vj.dump() + ": " + e.what());
    }
    for (const auto& states : programs) {
      const Program p(env.state_count(), states);
      const auto all = env.vocabulary();
      const auto it = std::find(all.begin(), all.end(), p);
      if (it == all.end()) fail(ErrorCode::InvalidVocabulary, "candidate program " + p.to_string() + " not in P");
      v.set(static_cast<std::size_t>(it - all.begin()));
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<Task> base_tasks(const RunContext& ctx) {
  const auto& c = ctx.config;
  if (!is_full_powerset(ctx.env))
    fail(ErrorCode::InvalidVocabulary, "utility and verify-bound need the full powerset vocabulary");
  if (c.task) {
    Json t = *c.task;
    t["env"] = to_json(ctx.env);
    return {task_from_json(t, c.base_dir, c.settings())};
  }
  std::vector<Task> out;
  for (const auto& t : enumerate_tasks(ctx.lang, sweep_bounds(c))) out.push_back(t);
  return out;
}

inline std::vector<ReportRow> run_utility(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto rhos = base_tasks(ctx);
  const CandidateSet candidates(ctx.lang, candidate_choices(c, ctx.env), false);
  auto per = parallel_map(rhos.size(), c.jobs, [&](std::size_t i) {
    Stopwatch sw(c.timing);
    const UninstantiatedTask rho(rhos[i]);
    std::vector<ReportRow> out;
    for (const auto& u : compare_vocabularies(rho, candidates).rows) {
      ReportRow r = ctx.base;
      r.task_id = std::to_string(i);
      r.task = rhos[i].id();
      r.candidate = u.vocabulary;
      r.policy = u.error ? "" : u.witness_programs;
      r.utility = u.utility ? u.utility->str() : "";
      r.metric = u.error ? "error" : "strict_child";
      r.value = u.error ? std::string(to_string(*u.error)) : (u.strict_child ? "true" : "false");
      r.wall_ms = sw.ms();
      out.push_back(std::move(r));
    }
    return out;
  });
  std::vector<ReportRow> rows;
  for (auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

inline std::vector<ReportRow> run_verify_bound(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto rhos = base_tasks(ctx);
  const CandidateSet candidates(ctx.lang, candidate_choices(c, ctx.env), true, c.jobs);
  auto per = parallel_map(rhos.size(), c.jobs, [&](std::size_t i) {
    Stopwatch sw(c.timing);
    const auto report = verify_upper_bound(UninstantiatedTask(rhos[i]), candidates);
    std::vector<ReportRow> out;
    ReportRow r = ctx.base;
    r.task_id = std::to_string(i);
    r.task = rhos[i].id();
    if (report.no_candidate()) {
      r.metric = "outcome";
      r.value = "NoCandidate";
      r.wall_ms = sw.ms();
      out.push_back(std::move(r));
      return out;
    }
    const auto& s = report.ranking[*report.selected];
    ReportRow sel = r;
    sel.candidate = candidates.restriction(s.candidate).label();
    sel.policy = s.policy.to_string();
    sel.extension_size = std::to_string(s.extension_size);
    sel.utility = report.utilities.rows[s.candidate].utility->str();
    sel.metric = "attained";
    sel.value = report.attained ? "true" : "false";
    sel.wall_ms = sw.ms();
    out.push_back(sel);
    sel.metric = "selected_probability";
    sel.value = to_string(s.probability);
    out.push_back(sel);
    const auto& best = report.ranking.front();
    ReportRow top = r;
    top.candidate = candidates.restriction(best.candidate).label();
    top.policy = best.policy.to_string();
    top.extension_size = std::to_string(best.extension_size);
    top.utility = report.utilities.rows[best.candidate].utility->str();
    top.metric = "best_probability";
    top.value = to_string(best.probability);
    top.wall_ms = sel.wall_ms;
    out.push_back(top);
    if (c.full_detail)
      for (std::size_t k = 0; k < report.ranking.size(); ++k) {
        const auto& p = report.ranking[k];
        ReportRow row = r;
        row.candidate = candidates.restriction(p.candidate).label();
        row.policy = p.policy.to_string();
        row.extension_size = std::to_string(p.extension_size);
        row.utility = report.utilities.rows[p.candidate].utility->str();
        row.metric = "rank_" + std::to_string(k);
        row.value = to_string(p.probability);
        row.wall_ms = sel.wall_ms;
        out.push_back(std::move(row));
      }
    return out;
  });
  std::vector<ReportRow> rows;
  for (auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

}  // namespace detail

/// Runs the configured experiment. Rows come back in trial order whatever
/// the job count.
inline std::vector<ReportRow> run_experiment(const ExperimentConfig& config) {
  const auto ctx = detail::make_context(config);
  switch (config.experiment) {
    case ExperimentKind::enumerate: return detail::run_enumerate(ctx);
    case ExperimentKind::learn: return detail::run_learn(ctx);
    case ExperimentKind::compare_proxies: return detail::run_compare_proxies(ctx);
    case ExperimentKind::utility: return detail::run_utility(ctx);
    case ExperimentKind::verify_bound: return detail::run_verify_bound(ctx);
    case ExperimentKind::sample_gen: return detail::run_sample_gen(ctx);
  }
  return {};
}

/// Header block carried by every report written from a config. Row content
/// does not depend on it, and it holds nothing that varies between runs.
inline Json report_meta(const ExperimentConfig& config) {
  Json j{{"tool", std::string("weakform ") + version},
         {"experiment", to_string(config.experiment)},
         {"config_hash", config_hash(config)},
         {"config", to_json(config).dump()},
         {"guards", to_json(config.guards)},
         {"seeds", config.seeds}};
  if (config.experiment == ExperimentKind::verify_bound || config.experiment == ExperimentKind::utility)
    j["universe"] = "finite: the listed candidate vocabularies over a finite powerset";
  return j;
}

inline Report run_report(const ExperimentConfig& config) {
  return Report{report_meta(config), run_experiment(config)};
}

}  // namespace weakform
