#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"

using namespace weakform;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvariantViolation;
}

fs::path scratch_dir() {
  auto dir = fs::temp_directory_path() / ("weakform_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const char* env2_config = R"({
  "experiment": "compare-proxies",
  "environment": {"states": 2, "vocabulary": [[0], [1], [0, 1]]},
  "proxies": ["weakness", "simplicity"]
})";

}  // namespace

TEST(Io, EnvironmentRoundTrip) {
  const auto dir = scratch_dir();
  put(dir / "env.json", R"({"states": 2, "vocabulary": [[0,1], [1], [0]]})");
  const auto env = load_environment(dir / "env.json");
  EXPECT_TRUE(env.reordered());
  EXPECT_EQ(to_json(env).dump(), R"({"states":2,"vocabulary":[[0],[1],[0,1]]})");
  EXPECT_EQ(environment_hash(env), environment_hash(mk_environment(2, {{0}, {1}, {0, 1}})));
  EXPECT_NE(environment_hash(env), environment_hash(mk_environment(2, {{0}, {1}})));
}

TEST(Io, ParseErrorsCarryPosition) {
  try {
    parse_json("{\n  \"states\": 2,\n  oops\n}", "env.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("env.json:3:"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([] { environment_from_json(Json::parse(R"({"states": 2})")); }), ErrorCode::ParseError);
}

TEST(Io, TaskFileWithEnvPath) {
  const auto dir = scratch_dir();
  put(dir / "env.json", R"({"states": 2, "vocabulary": [[0], [1], [0, 1]]})");
  put(dir / "task.json", R"({"env": "env.json", "inputs": [[2]], "outputs": [[0, 2]]})");
  const auto t = load_task(dir / "task.json");
  EXPECT_EQ(t.id(), "I=[[2]];O=[[0,2]]");
  const auto again = task_from_json(to_json(t));
  EXPECT_EQ(again.id(), t.id());
  put(dir / "bad.json", R"({"env": "env.json", "inputs": [[2]], "outputs": [[0]]})");
  EXPECT_EQ(code_of([&] { load_task(dir / "bad.json"); }), ErrorCode::OutputsNotInExtension);
}

TEST(Io, ProxyNames) {
  EXPECT_EQ(parse_proxy("weakness").kind(), Proxy::Kind::weakness);
  EXPECT_EQ(parse_proxy("simplicity").kind(), Proxy::Kind::simplicity);
  EXPECT_EQ(parse_proxy("random:42").seed(), 42u);
  EXPECT_EQ(code_of([] { parse_proxy("shortest"); }), ErrorCode::UnknownProxy);
  EXPECT_EQ(code_of([] { parse_proxy("random:"); }), ErrorCode::UnknownProxy);
  EXPECT_EQ(code_of([] { parse_proxy("random:99999999999999999999"); }), ErrorCode::UnknownProxy);
  const auto dir = scratch_dir();
  put(dir / "t.json", R"({"pairs": [[[0], [1]]]})");
  const auto p = parse_proxy("table:t.json", dir);
  const auto lang = Language::build(mk_environment(2, {{0}, {1}, {0, 1}}));
  EXPECT_TRUE(p.less(*lang, Statement{0}, Statement{1}));
  EXPECT_FALSE(p.less(*lang, Statement{1}, Statement{0}));
}

TEST(Io, GeneralizationTableCsv) {
  const auto lang = Language::build(mk_environment(2, {{0}, {1}, {0, 1}}));
  const auto csv = generalization_table_csv(GeneralizationTable::build(lang));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "statement,numerator,denominator");
  EXPECT_NE(csv.find("[0;2],61,2330\n"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(Io, RationalFormat) {
  EXPECT_EQ(to_string(Rational(59, 2330)), "59/2330");
  EXPECT_EQ(to_string(Rational(110, 2330)), "11/233");
  EXPECT_EQ(to_string(Rational(0)), "0/1");
}

TEST(Config, MinimalGetsEveryDefaultWritten) {
  const auto c = parse_config(R"({"experiment": "enumerate"})");
  const auto text = serialize(c);
  for (const char* key : {"\"environment\"", "\"guards\"", "\"proxies\"", "\"seeds\"", "\"jobs\"", "\"output\"",
                          "\"empty_statement\"", "\"candidates\"", "\"timing\""})
    EXPECT_NE(text.find(key), std::string::npos) << key;
  EXPECT_EQ(serialize(parse_config(text)), text);
}

TEST(Config, RoundTripsByteIdentically) {
  const auto c = parse_config(env2_config);
  const auto once = serialize(c);
  EXPECT_EQ(serialize(parse_config(once)), once);
  EXPECT_EQ(config_hash(parse_config(once)), config_hash(c));
}

TEST(Config, Errors) {
  EXPECT_EQ(code_of([] { parse_config(R"({"experiment": "enumerate", "proxies": ["shortest"]})"); }),
            ErrorCode::UnknownProxy);
  EXPECT_EQ(code_of([] { parse_config(R"({"experiment": "enumerate", "guards": {"vocabulary": 99}})"); }),
            ErrorCode::GuardConflict);
  EXPECT_EQ(code_of([] { parse_config(R"({"experiment": "enumerate", "typo": 1})"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_config(R"({"experiment": "nope"})"); }), ErrorCode::ParseError);
  try {
    parse_config("{\"experiment\": \"enumerate\",\n \"seeds\": [1,,2]}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("config:2:"), std::string::npos) << e.what();
  }
}

TEST(Report, CsvShapes) {
  ReportRow r;
  r.experiment = "x";
  r.task = "I=[[0,2]];O=[]";
  const auto csv = render_report(Report{Json(nullptr), {r}}, ReportFormat::csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_NE(csv.find("\"I=[[0,2]];O=[]\""), std::string::npos);
  EXPECT_EQ(code_of([] { render_report(Report{}, ReportFormat::csv); }), ErrorCode::EmptyReport);
}

TEST(Report, CsvAndJsonCarryTheSameFields) {
  const auto rows = run_experiment(parse_config(env2_config));
  const auto json = Json::parse(render_report(Report{Json(nullptr), rows}, ReportFormat::json));
  ASSERT_TRUE(json.is_array());
  ASSERT_EQ(json.size(), rows.size());
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto cs = cells(rows[i]);
    for (std::size_t c = 0; c < cols.size(); ++c) EXPECT_EQ(json[i][cols[c]].get<std::string>(), cs[c]);
  }
  // and the CSV line for each row is those same cells
  const auto csv = render_report(Report{Json(nullptr), rows}, ReportFormat::csv);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  for (const auto& r : rows) {
    std::getline(in, line);
    std::string want;
    const auto cs = cells(r);
    for (std::size_t c = 0; c < cs.size(); ++c) want += (c ? "," : "") + csv_escape(cs[c]);
    EXPECT_EQ(line, want);
  }
}

TEST(Report, AtomicWriteLeavesNothingOnFailure) {
  const auto dir = scratch_dir();
  const auto bad = dir / "missing" / "report.csv";
  ReportRow r;
  r.experiment = "x";
  EXPECT_EQ(code_of([&] { write_report({r}, bad, ReportFormat::csv); }), ErrorCode::IoError);
  EXPECT_FALSE(fs::exists(bad));
  EXPECT_FALSE(fs::exists(bad.string() + ".tmp"));
  const auto good = dir / "report.csv";
  write_report({r}, good, ReportFormat::csv);
  EXPECT_TRUE(fs::exists(good));
  EXPECT_FALSE(fs::exists(good.string() + ".tmp"));
}

TEST(Experiments, CompareProxiesCarriesExhaustiveValue) {
  const auto rows = run_experiment(parse_config(env2_config));
  const auto env = mk_environment(2, {{0}, {1}, {0, 1}});
  const auto want = std::to_string(sample_efficiency(env, Proxy::weakness(), Proxy::simplicity()));
  bool found = false;
  for (const auto& r : rows)
    if (r.metric == "sample_efficiency" && r.proxy == "weakness|simplicity") {
      EXPECT_EQ(r.value, want);
      found = true;
    }
  EXPECT_TRUE(found);
}

TEST(Experiments, VerifyBoundMirrorsLibrary) {
  const auto c = parse_config(R"({"experiment": "verify-bound", "environment": {"powerset": 2}})");
  const auto rows = run_experiment(c);
  const auto P = Language::build(full_powerset_vocabulary(2));
  const CandidateSet cs(P, all_vocabularies(P->environment()), true);
  std::size_t i = 0;
  std::map<std::string, std::string> attained;
  for (const auto& r : rows)
    if (r.metric == "attained" || r.value == "NoCandidate") attained[r.task_id] = r.value;
  for (const auto& t : enumerate_tasks(P)) {
    const auto rep = verify_upper_bound(UninstantiatedTask(t), cs);
    const auto want = rep.no_candidate() ? "NoCandidate" : (rep.attained ? "true" : "false");
    EXPECT_EQ(attained[std::to_string(i)], want) << t.id();
    ++i;
  }
  EXPECT_EQ(attained.size(), i);
}

TEST(Experiments, LearnChildrenAreChildren) {
  auto c = parse_config(R"({"experiment": "learn", "environment": {"states": 2, "vocabulary": [[0], [1], [0, 1]]},
                            "trials": 30, "child_inputs": 2, "seeds": [1, 2, 3]})");
  const auto rows = run_experiment(c);
  const auto lang = Language::build(mk_environment(2, {{0}, {1}, {0, 1}}));
  EXPECT_EQ(rows.size(), 3u * 30u * 2u);
  for (const auto& r : rows) {
    if (r.metric != "parent") continue;
    EXPECT_FALSE(r.policy.empty());
    EXPECT_TRUE(r.generalized == "true" || r.generalized == "false");
  }
}

TEST(Experiments, DeriveChildIsAlwaysAChild) {
  const auto lang = Language::build(mk_environment(3, {{0}, {1}, {0, 1}, {1, 2}}));
  const TaskSpace space(lang);
  Rng rng(5);
  int made = 0;
  for (int i = 0; i < 3000; ++i) {
    const auto parent = space.sample(rng);
    for (std::size_t k = 1; k <= 3; ++k) {
      const auto child = detail::derive_child(parent, k, rng);
      if (!child) continue;
      ++made;
      EXPECT_TRUE(is_child(*child, parent));
      EXPECT_EQ(child->input_bits().count(), std::min(k, parent.input_bits().count() - 1));
    }
  }
  EXPECT_GT(made, 1000);
}

TEST(Experiments, DeterministicAndJobIndependent) {
  for (const char* cfg : {R"({"experiment": "learn", "environment": {"generator": {"states": 3, "programs": 4, "seed": 9}},
                             "proxies": ["weakness", "simplicity", "random:4"], "trials": 25, "seeds": [1, 2]})",
                          R"({"experiment": "sample-gen", "environment": {"states": 2, "vocabulary": [[0], [1], [0, 1]]},
                             "samples": 500, "seeds": [3]})",
                          R"({"experiment": "utility", "environment": {"powerset": 2}, "max_inputs": 2})",
                          R"({"experiment": "enumerate", "environment": {"powerset": 2}, "detail": "full"})"}) {
    auto c = parse_config(cfg);
    const auto a = render_report(run_report(c), ReportFormat::csv);
    const auto b = render_report(run_report(c), ReportFormat::csv);
    EXPECT_EQ(a, b);
    c.jobs = 3;
    auto r3 = run_experiment(c);
    c.jobs = 1;
    EXPECT_EQ(r3, run_experiment(c)) << cfg;
  }
}

TEST(Experiments, GuardErrorsPropagate) {
  const auto c = parse_config(R"({"experiment": "compare-proxies", "environment": {"powerset": 3}})");
  EXPECT_EQ(code_of([&] { run_experiment(c); }), ErrorCode::TaskSpaceTooLarge);
}

TEST(Experiments, GeneratorIsSeeded) {
  const auto a = generate_environment(4, 6, 11), b = generate_environment(4, 6, 11);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.vocabulary_size(), 6u);
  EXPECT_EQ(code_of([] { generate_environment(2, 5, 1); }), ErrorCode::InvalidVocabulary);
}

TEST(VerifyReport, JsonAndTextAgree) {
  const auto P = Language::build(full_powerset_vocabulary(2));
  const CandidateSet cs(P, all_vocabularies(P->environment()), true);
  const UninstantiatedTask rho(mk_task(P, {Statement{3}}, {Statement{1, 3}}));
  const auto r = verify_upper_bound(rho, cs);
  ReportContext ctx{version, environment_hash(P->environment()), {}, P->environment().limits(), {0}, rho.base().id()};
  for (std::size_t i = 0; i < cs.size(); ++i) ctx.candidates.push_back(cs.restriction(i).label());
  const auto j = to_json(r, cs, ctx);
  const auto text = to_text(r, cs, ctx);
  EXPECT_EQ(j.at("context").at("version"), version);
  EXPECT_EQ(j.at("ranking").size(), r.ranking.size());
  for (const auto& p : j.at("ranking")) EXPECT_NE(text.find(p.at("probability").get<std::string>()), std::string::npos);
  EXPECT_NE(text.find(ctx.environment_hash), std::string::npos);
  EXPECT_NE(text.find("outcome: " + j.at("outcome").get<std::string>()), std::string::npos);
}
