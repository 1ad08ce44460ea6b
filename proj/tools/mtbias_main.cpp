// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtbias/pipeline.hpp"
#include "mtbias/version.hpp"

namespace fs = std::filesystem;
using namespace mtbias;
using pipeline::CommandResult;

namespace {

struct RunFlags {
  std::string manifest;
  std::string out = "out";
  std::vector<std::string> methods;
  std::string alpha = "1";
  std::vector<double> alpha_grid;
  double entail_threshold = 0.5;
  double similarity_floor = 1e-6;
  double norm_tolerance = bias::kNormTolerance;
  std::size_t bins = 3;
  std::vector<std::string> references;
  std::size_t jobs = 1;
  std::int64_t seed = 0;
  bool strict = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool compute_flags) {
  cmd->add_option("--manifest", f.manifest, "Corpus manifest (JSON)")->required();
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--jobs", f.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Recorded in run.json")->capture_default_str();
  cmd->add_flag("--strict", f.strict, "Treat validation warnings as errors");
  if (compute_flags) {
    cmd->add_option("--methods", f.methods, "Comma-separated subset of shannon,se,s3e,ge")->delimiter(',');
    cmd->add_option("--alpha", f.alpha, "S3E exponent, or 'tune'")->capture_default_str();
    cmd->add_option("--alpha-grid", f.alpha_grid, "Candidate exponents for --alpha tune")->delimiter(',');
    cmd->add_option("--entail-threshold", f.entail_threshold)->capture_default_str();
    cmd->add_option("--similarity-floor", f.similarity_floor)->capture_default_str();
    cmd->add_option("--norm-tolerance", f.norm_tolerance)->capture_default_str();
  } else {
    cmd->add_option("--bins", f.bins, "COMET quantile bins")->capture_default_str();
    cmd->add_option("--reference", f.references, "Reference level override, cue=level");
  }
}

// Returns an error message for unusable flag values.
std::optional<std::string> to_config(const RunFlags& f, pipeline::RunConfig& c) {
  c.manifest = f.manifest;
  c.out_dir = f.out;
  if (!f.methods.empty()) {
    c.methods.clear();
    for (const auto& m : f.methods) {
      const auto parsed = parse_method(m);
      if (!parsed) return "unknown method '" + m + "'";
      c.methods.insert(*parsed);
    }
  }
  if (f.alpha == "tune") {
    c.alpha.reset();
  } else {
    double a = 0.0;
    const auto* end = f.alpha.data() + f.alpha.size();
    const auto [ptr, ec] = std::from_chars(f.alpha.data(), end, a);
    if (ec != std::errc() || ptr != end) return "--alpha must be a number or 'tune'";
    c.alpha = a;
  }
  if (!f.alpha_grid.empty()) c.alpha_grid = f.alpha_grid;
  c.entailment_threshold = f.entail_threshold;
  c.similarity_floor = f.similarity_floor;
  c.norm_tolerance = f.norm_tolerance;
  c.bins = f.bins;
  for (const auto& r : f.references) {
    const auto eq = r.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == r.size()) return "--reference expects cue=level";
    c.reference_overrides[r.substr(0, eq)] = r.substr(eq + 1);
  }
  c.jobs = f.jobs;
  c.seed = f.seed;
  c.strict = f.strict;
  try {
    pipeline::validate_config(c);
  } catch (const std::exception& e) {
    return e.what();
  }
  return std::nullopt;
}

int finish(const CommandResult& r) {
  for (const auto& m : r.messages) (r.exit_code == pipeline::kSuccess ? std::cout : std::cerr) << m << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gender-bias metrics for machine translation sample sets"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string manifest;
  std::string validate_out;
  bool validate_strict = false;
  auto* validate = app.add_subcommand("validate", "Check a corpus for schema and cross-file errors");
  validate->add_option("--manifest", manifest, "Corpus manifest (JSON)")->required();
  validate->add_option("--out", validate_out, "Write validation.json here");
  validate->add_flag("--strict", validate_strict, "Treat warnings as errors");

  std::string aug_in, aug_out, aug_lang, aug_names;
  bool keep_original = false;
  auto* augment = app.add_subcommand("augment-names", "Insert gendered person names after the focus noun");
  augment->add_option("--instances", aug_in, "Input instances.jsonl")->required();
  augment->add_option("--out", aug_out, "Output instances.jsonl")->required();
  augment->add_option("--language", aug_lang, "Target language code")->required();
  augment->add_option("--names", aug_names, "JSON {lang: {F: name, M: name}}");
  augment->add_flag("--keep-original", keep_original, "Also emit the unnamed instances");

  RunFlags compute_flags, analyze_flags, report_flags;
  auto* compute = app.add_subcommand("compute", "Per-instance entropy and surprisal metrics");
  add_run_flags(compute, compute_flags, true);
  auto* analyze = app.add_subcommand("analyze", "Cue effects, correlations and COMET bins");
  add_run_flags(analyze, analyze_flags, false);
  auto* report = app.add_subcommand("report", "Tables, rankings and plot data");
  add_run_flags(report, report_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pipeline::kUsage;
  }

  auto run = [](const RunFlags& f, CommandResult (*cmd)(const pipeline::RunConfig&)) {
    pipeline::RunConfig c;
    if (const auto err = to_config(f, c)) {
      std::cerr << "error: " << *err << '\n';
      return static_cast<int>(pipeline::kUsage);
    }
    return finish(cmd(c));
  };

  if (*validate) {
    return finish(pipeline::cmd_validate(
        manifest, validate_out.empty() ? std::nullopt : std::optional<fs::path>(validate_out), validate_strict));
  }
  if (*augment) {
    return finish(pipeline::cmd_augment_names(aug_in, aug_out, aug_lang,
                                              aug_names.empty() ? std::nullopt : std::optional<fs::path>(aug_names),
                                              keep_original));
  }
  if (*compute) return run(compute_flags, &pipeline::cmd_compute);
  if (*analyze) return run(analyze_flags, &pipeline::cmd_analyze);
  if (*report) return run(report_flags, &pipeline::cmd_report);
  return pipeline::kUsage;
}
