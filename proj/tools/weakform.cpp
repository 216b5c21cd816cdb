// weakform: batch driver for the experiments in include/weakform/harness.hpp.
//
//   weakform <subcommand> --config <path> [--seed N] [--out <path>]
//            [--format csv|json|text] [--jobs N]
//
// Exit codes: 0 ok, 1 I/O error, 2 config or domain error, 3 guard
// exceeded, 4 internal invariant violation (a repro bundle is written).

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "weakform.hpp"

namespace {

using namespace weakform;

int exit_code(ErrorCode code) {
  if (code == ErrorCode::IoError) return 1;
  if (code == ErrorCode::InvariantViolation) return 4;
  if (is_guard_error(code)) return 3;
  return 2;
}

void write_repro(const ExperimentConfig& config, const std::string& out, const Error& e) {
  const std::string path = (out.empty() ? std::string("weakform") : out) + ".repro.json";
  const Json bundle{{"tool", std::string("weakform ") + version},
                    {"error", e.what()},
                    {"config_hash", config_hash(config)},
                    {"config", to_json(config)}};
  try {
    atomic_write(path, bundle.dump(2) + "\n");
    std::cerr << "weakform: repro bundle written to " << path << "\n";
  } catch (const Error& io) {
    std::cerr << "weakform: could not write repro bundle: " << io.what() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weakform: weakness, simplicity and utility experiments on finite environments"};
  app.require_subcommand(1);

  std::string config_path, out, format;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::string table_path;
  bool print_config = false;

  for (auto kind : {ExperimentKind::enumerate, ExperimentKind::learn, ExperimentKind::compare_proxies,
                    ExperimentKind::utility, ExperimentKind::verify_bound, ExperimentKind::sample_gen}) {
    auto* sub = app.add_subcommand(std::string(to_string(kind)), "run the " + std::string(to_string(kind)) + " experiment");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "replace the config's seed list with this one seed");
    sub->add_option("--out", out, "report path (default: config output.path, else stdout)");
    sub->add_option("--format", format, "csv, json or text")->check(CLI::IsMember({"csv", "json", "text"}));
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--print-config", print_config, "print the canonical config and exit");
    if (kind == ExperimentKind::compare_proxies)
      sub->add_option("--table", table_path, "also write the generalization table as CSV");
  }

  CLI11_PARSE(app, argc, argv);
  const auto* sub = app.get_subcommands().front();
  const auto kind = *parse_experiment_kind(sub->get_name());

  ExperimentConfig config;
  try {
    const std::filesystem::path path(config_path);
    Json doc = parse_json(read_file(path), path.string());
    if (doc.is_object() && !doc.contains("experiment")) doc["experiment"] = to_string(kind);
    config = parse_config(doc.dump(), path.parent_path());
    if (config.experiment != kind)
      fail(ErrorCode::ParseError, "config is for \"" + std::string(to_string(config.experiment)) +
                                      "\", not \"" + sub->get_name() + "\"");
    if (seed) config.seeds = {*seed};
    if (jobs) config.jobs = *jobs;
    if (!out.empty()) config.output = out;
    if (!format.empty()) config.format = *parse_report_format(format);
  } catch (const Error& e) {
    std::cerr << "weakform: " << e.what() << "\n";
    return exit_code(e.code());
  }

  if (print_config) {
    std::cout << serialize(config);
    return 0;
  }

  try {
    if (config.environment.kind == EnvironmentSource::Kind::file ||
        config.environment.kind == EnvironmentSource::Kind::inline_env) {
      if (build_environment(config).reordered())
        std::cerr << "weakform: warning: vocabulary reordered to canonical order; statement indices refer to it\n";
    }
    const Report report = run_report(config);
    if (!table_path.empty()) {
      const auto env = build_environment(config);
      atomic_write(table_path, generalization_table_csv(GeneralizationTable::build(Language::build(env), config.jobs)));
    }
    if (config.output.empty()) {
      std::cout << render_report(report, config.format);
    } else {
      write_report(report, config.base_dir.empty() || std::filesystem::path(config.output).is_absolute() || !out.empty()
                               ? std::filesystem::path(config.output)
                               : config.base_dir / config.output,
                   config.format);
    }
  } catch (const Error& e) {
    std::cerr << "weakform: " << e.what() << "\n";
    if (e.code() == ErrorCode::InvariantViolation) write_repro(config, config.output, e);
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "weakform: internal error: " << e.what() << "\n";
    write_repro(config, config.output, Error(ErrorCode::InvariantViolation, e.what()));
    return 4;
  }
  return 0;
}
