// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#pragma once

/**
 * @file dataset.hpp
 * @brief Corpus file formats: loading, validation and deterministic writers.
 *
 * Record streams are line-delimited JSON (UTF-8). A stream may open with a
 * header object carrying "format_version"; loaders refuse a different major
 * version. Writers always emit the header, so an empty stream is a single
 * header line. Field names are documented in docs/formats.md.
 *
 * Embeddings may be inline float arrays or live in a flat little-endian
 * sidecar: an 8-byte unsigned row count followed by rows of 32-bit floats,
 * one row per sample in samples-file order.
 */

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtbias/stats.hpp"
#include "mtbias/types.hpp"

namespace mtbias::dataset {

namespace fs = std::filesystem;

inline constexpr std::string_view kFormatVersion = "1.0.0";

/// Major component of a semver string; nullopt when unparseable.
std::optional<int> major_version(std::string_view semver);

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct SamplesEntry {
  std::string model;
  std::string language;
  fs::path samples;
  std::optional<fs::path> embeddings;
  std::optional<fs::path> entailment;
};

struct CorpusManifest {
  std::string dataset_name;
  std::string format_version{kFormatVersion};
  std::vector<std::string> languages;
  std::vector<std::string> models;
  fs::path instances;
  std::vector<SamplesEntry> samples;
  std::optional<fs::path> scores;
  fs::path base_dir;   // relative paths resolve against this

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }
};

CorpusManifest load_manifest(const fs::path& path);
void write_manifest(const CorpusManifest& manifest, const fs::path& path);

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct ScoreRecord {
  std::string instance_id;
  std::string model_id;
  std::string language;
  std::vector<std::pair<std::string, double>> comet_scores;   // (reference_id, 0..100)
  std::optional<CueGender> prediction_gender;

  bool operator==(const ScoreRecord&) const = default;
};

struct EmbeddingTable {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> values;   // row-major
  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

std::vector<Instance> load_instances(const fs::path& path);
void write_instances(std::span<const Instance> instances, const fs::path& path);

/// All sample sets in a samples file, in file order, with sidecars resolved.
std::vector<SampleSet> load_sample_sets(const fs::path& path,
                                        const std::optional<fs::path>& embeddings = std::nullopt,
                                        const std::optional<fs::path>& entailment = std::nullopt);

SampleSet load_sample_set(const fs::path& path, std::string_view instance_id,
                          const std::optional<fs::path>& embeddings = std::nullopt,
                          const std::optional<fs::path>& entailment = std::nullopt);

/// Writes the samples stream. When `embeddings` is given, embeddings go to
/// that sidecar instead of inline; when `entailment` is given, matrices go
/// to that file.
void write_sample_sets(std::span<const SampleSet> sets, const fs::path& path,
                       const std::optional<fs::path>& embeddings = std::nullopt,
                       const std::optional<fs::path>& entailment = std::nullopt);

EmbeddingTable read_embedding_sidecar(const fs::path& path);
void write_embedding_sidecar(const EmbeddingTable& table, const fs::path& path);

std::map<std::string, EntailmentMatrix> load_entailment(const fs::path& path);

std::vector<ScoreRecord> load_scores(const fs::path& path);
void write_scores(std::span<const ScoreRecord> scores, const fs::path& path);

/// Rows sorted by (instance_id, model_id, language) before writing.
void write_metric_records(std::span<const MetricRecord> records, const fs::path& path);
std::vector<MetricRecord> load_metric_records(const fs::path& path);
void write_metric_records_csv(std::span<const MetricRecord> records, const fs::path& path);

struct EffectTableRow {
  std::string model_id;
  std::string language;
  Method method = Method::S3E;
  std::string dependent;   // "norm_h" or "h"
  stats::EffectEstimate estimate;

  bool operator==(const EffectTableRow&) const = default;
};

/// JSON-lines effect table; rows keep the caller's order.
void write_effect_tables(std::span<const EffectTableRow> rows, const fs::path& path);
std::vector<EffectTableRow> load_effect_tables(const fs::path& path);
void write_effect_tables_csv(std::span<const EffectTableRow> rows, const fs::path& path);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class Severity { Error, Warning };

struct Violation {
  Severity severity = Severity::Error;
  std::string file;
  std::size_t line = 0;   // 1-based; 0 when not line-specific
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  std::size_t errors() const;
  std::size_t warnings() const;
  bool ok(bool strict = false) const { return errors() == 0 && (!strict || warnings() == 0); }
  std::string to_json() const;
};

/// Cross-file corpus checks. Never throws for bad corpus content; every
/// problem becomes a located report entry.
ValidationReport validate_corpus(const CorpusManifest& manifest);

/// Loads the manifest first; an unparseable manifest is a single violation.
ValidationReport validate_corpus(const fs::path& manifest_path);

}  // namespace mtbias::dataset
