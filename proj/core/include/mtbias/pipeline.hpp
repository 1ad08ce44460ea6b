// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#pragma once

/**
 * @file pipeline.hpp
 * @brief Staged evaluation pipeline behind the command-line tool.
 *
 * Stages exchange files inside one output directory:
 *
 *   compute  -> metrics.jsonl, metrics.csv, summary.json, run.json
 *   analyze  -> effects.jsonl, effects.csv, correlations.json, bins.json
 *   report   -> report.txt, rankings.csv, delta_h.csv, anova.csv, violin.json
 *
 * Every output is a deterministic function of the manifest and config; the
 * worker count never changes a byte.
 */

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtbias/bias.hpp"
#include "mtbias/dataset.hpp"
#include "mtbias/stats.hpp"
#include "mtbias/types.hpp"

namespace mtbias::pipeline {

namespace fs = std::filesystem;

enum ExitCode : int { kSuccess = 0, kFailure = 1, kUsage = 2, kPartial = 3 };

struct RunConfig {
  fs::path manifest;
  fs::path out_dir = "out";
  std::set<Method> methods{Method::SE, Method::S3E, Method::GE};
  std::optional<double> alpha = 1.0;   // nullopt: tune over alpha_grid
  std::vector<double> alpha_grid{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  double entailment_threshold = 0.5;
  double similarity_floor = 1e-6;
  double norm_tolerance = bias::kNormTolerance;
  std::size_t bins = 3;
  std::map<std::string, std::string> reference_overrides;   // cue -> level
  std::size_t jobs = 1;
  std::int64_t seed = 0;
  bool strict = false;
};

/// Throws ValidationError when the config breaks its invariants.
void validate_config(const RunConfig& config);

struct CommandResult {
  int exit_code = kSuccess;
  std::vector<std::string> messages;
};

// ---------------------------------------------------------------------------
// Cues
// ---------------------------------------------------------------------------

struct CueSpec {
  std::string name;
  std::string reference;
};

/// Names, Recency, ImplicitCausality, Stereotype, Subject, Pronoun,
/// DefaultM, Ambiguity, with their default reference levels.
const std::vector<CueSpec>& cue_specs();

/// The level of `cue` for an instance translated into `language`; nullopt
/// when the cue does not apply (DefaultM outside Russian).
std::optional<std::string> cue_level(const Instance& instance, std::string_view cue,
                                     std::string_view language);

// ---------------------------------------------------------------------------
// Library-level stages
// ---------------------------------------------------------------------------

struct MethodSummary {
  bias::AmbiguityAggregate ambiguity;
  std::optional<double> delta_i_mean;   // mean of per-instance relative surprisal
  std::size_t n_delta_i = 0;
  std::optional<double> i_correct_mean;
  std::optional<double> i_incorrect_mean;
  std::optional<double> delta_i_of_means;
};

struct PairSummary {
  std::string model_id;
  std::string language;
  std::size_t n_instances = 0;
  std::optional<double> gender_accuracy;
  std::optional<double> logprob_correct_mean;
  std::optional<double> logprob_incorrect_mean;
  std::optional<double> delta_logprob;
  std::optional<double> comet_mean;
  std::map<Method, MethodSummary> methods;
};

struct ComputeOutput {
  std::vector<MetricRecord> records;   // sorted by (instance, model, language)
  std::vector<PairSummary> summaries;   // sorted by (model, language)
  std::optional<double> tuned_alpha;
  std::optional<double> tuned_correlation;
  double alpha_used = 1.0;
  std::vector<std::string> skipped;   // "<model>/<lang>/<method>: reason"
};

ComputeOutput compute_metrics(const dataset::CorpusManifest& manifest, const RunConfig& config);

/// Fills norm_h for every record/method from contrast groups keyed by
/// Instance::contrast_key within each (model, language).
void attach_normalized_entropy(std::vector<MetricRecord>& records,
                               const std::map<std::string, Instance>& instances,
                               double tolerance);

std::vector<PairSummary> summarize(std::span<const MetricRecord> records,
                                   const std::map<std::string, Instance>& instances);

/// Per (model, language, method, dependent) effect estimates over every cue.
/// `dependent` is "norm_h" or "h"; records lacking the value are dropped.
std::vector<dataset::EffectTableRow> analyze_effects(
    std::span<const MetricRecord> records, const std::map<std::string, Instance>& instances,
    std::string_view dependent, const std::map<std::string, std::string>& reference_overrides = {});

struct CorrelationRow {
  std::string x_metric;
  std::string y_metric;
  std::size_t n = 0;
  std::optional<double> spearman;
  std::optional<double> kendall;
};

/// Cross-pair rank correlations between gender accuracy and each relative
/// surprisal / log-prob metric.
std::vector<CorrelationRow> analyze_correlations(std::span<const PairSummary> summaries);

// ---------------------------------------------------------------------------
// Commands (CLI verbs)
// ---------------------------------------------------------------------------

CommandResult cmd_validate(const fs::path& manifest, const std::optional<fs::path>& out_dir,
                           bool strict);

CommandResult cmd_augment_names(const fs::path& instances_in, const fs::path& instances_out,
                                std::string_view language,
                                const std::optional<fs::path>& names_json, bool keep_original);

CommandResult cmd_compute(const RunConfig& config);
CommandResult cmd_analyze(const RunConfig& config);
CommandResult cmd_report(const RunConfig& config);

}  // namespace mtbias::pipeline
