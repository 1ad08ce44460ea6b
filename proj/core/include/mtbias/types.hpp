// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mtbias {

// ---------------------------------------------------------------------------
// Gender vocabularies
// ---------------------------------------------------------------------------

/// Morphological gender of the translated focus noun in one sample.
enum class GenderLabel : std::uint8_t { Masculine, Feminine, Neutral, Unknown };

inline constexpr std::size_t kNumGenderLabels = 4;

/// Three-way gender used by source-side annotations (pronoun, stereotype,
/// recency, subject, gold).
enum class CueGender : std::uint8_t { F, M, N };

/// Role-bearing cue: which argument of the clause carries a gendered bias.
enum class RoleCue : std::uint8_t { SubjF, SubjM, ObjF, ObjM, None };

std::string_view to_string(GenderLabel g);
std::string_view to_string(CueGender g);
std::string_view to_string(RoleCue r);

/// Accepts "Masculine"/"Feminine"/"Neutral"/"Unknown" and the short forms
/// "M"/"F"/"N". Returns nullopt for anything else.
std::optional<GenderLabel> parse_gender_label(std::string_view s);
std::optional<CueGender> parse_cue_gender(std::string_view s);
std::optional<RoleCue> parse_role_cue(std::string_view s);

/// True when a sample label realises the given binary gold gender.
constexpr bool realises(GenderLabel label, CueGender gold) {
  return (gold == CueGender::M && label == GenderLabel::Masculine) ||
         (gold == CueGender::F && label == GenderLabel::Feminine);
}

/// The other binary gender; N maps to N.
constexpr CueGender opposite(CueGender g) {
  switch (g) {
    case CueGender::F: return CueGender::M;
    case CueGender::M: return CueGender::F;
    default: return CueGender::N;
  }
}

// ---------------------------------------------------------------------------
// Dense square matrix
// ---------------------------------------------------------------------------

/// Row-major n x n matrix of doubles.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
  SquareMatrix(std::size_t n, std::vector<double> row_major);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// scores(i, j) = probability that sample i entails sample j.
using EntailmentMatrix = SquareMatrix;

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

struct Sample {
  std::string text;
  double log_prob = 0.0;           // sequence log-probability, nats
  std::vector<double> embedding;   // empty when absent
  GenderLabel gender_label = GenderLabel::Unknown;

  bool operator==(const Sample&) const = default;
};

struct SamplingMeta {
  std::size_t num_samples = 0;
  double epsilon = 0.0;
  std::int64_t seed = 0;

  bool operator==(const SamplingMeta&) const = default;
};

/// Monte-Carlo draws for one (instance, model, language).
struct SampleSet {
  std::string instance_id;
  std::string model_id;
  std::string language;
  std::vector<Sample> samples;
  SamplingMeta sampling_meta;
  std::optional<EntailmentMatrix> entailment;

  std::size_t size() const noexcept { return samples.size(); }
  bool has_embeddings() const noexcept;

  bool operator==(const SampleSet&) const = default;
};

/// Throws ValidationError when the set breaks its invariants.
void validate_sample_set(const SampleSet& set);

struct ClusterAssignment {
  std::vector<std::size_t> cluster_of;
  std::size_t num_clusters = 0;
};

/// Throws ValidationError unless indices are contiguous 0..num_clusters-1.
void validate_assignment(const ClusterAssignment& assignment);

struct SimilarityConfig {
  double alpha = 1.0;
  double floor = 1e-6;
};

// ---------------------------------------------------------------------------
// Source instances
// ---------------------------------------------------------------------------

/// Half-open byte range into a source sentence.
struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const TextSpan&) const = default;
};

struct CueAnnotations {
  CueGender recency = CueGender::N;
  RoleCue ic_role = RoleCue::None;
  RoleCue stereotype_role = RoleCue::None;
  CueGender subject = CueGender::N;
  bool names_present = false;
  bool operator==(const CueAnnotations&) const = default;
};

struct Instance {
  std::string instance_id;
  std::string source_text;
  std::string focus_noun;
  TextSpan focus_span;
  std::optional<TextSpan> name_span;   // set by name augmentation
  CueGender pronoun_gender = CueGender::N;
  CueGender stereotype_gender = CueGender::N;
  CueAnnotations cues;
  bool ambiguous = true;
  std::string contrast_key;
  std::optional<CueGender> gold_gender;
  bool default_masculine = false;
  // Unrecognised JSON fields, kept verbatim (serialized) for round-trip.
  std::map<std::string, std::string> extra_fields;

  bool operator==(const Instance&) const = default;
};

/// Collects every invariant violation of a single instance (empty when valid).
std::vector<std::string> instance_violations(const Instance& instance);

struct ContrastGroup {
  std::string contrast_key;
  std::vector<std::string> member_instance_ids;
  bool operator==(const ContrastGroup&) const = default;
};

// ---------------------------------------------------------------------------
// Per-instance metric output
// ---------------------------------------------------------------------------

enum class Method : std::uint8_t { Shannon, SE, S3E, GE };

inline constexpr std::array<Method, 4> kAllMethods = {Method::Shannon, Method::SE, Method::S3E,
                                                      Method::GE};

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view s);

struct MethodResult {
  double entropy = 0.0;
  // Mean surprisal of samples carrying each GenderLabel (index by enum value).
  std::array<std::optional<double>, kNumGenderLabels> surprisal_by_gender{};
  std::optional<double> i_correct;
  std::optional<double> i_incorrect;
  std::optional<double> delta_i;
  std::optional<double> norm_h;

  bool operator==(const MethodResult&) const = default;
};

struct MetricRecord {
  std::string instance_id;
  std::string model_id;
  std::string language;
  std::map<Method, MethodResult> methods;
  std::optional<double> logprob_correct;
  std::optional<double> logprob_incorrect;
  std::optional<double> delta_logprob;
  std::optional<double> comet_score;
  std::optional<CueGender> prediction_gender;

  bool operator==(const MetricRecord&) const = default;
};

}  // namespace mtbias
