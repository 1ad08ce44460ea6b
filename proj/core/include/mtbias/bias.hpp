// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtbias/types.hpp"

namespace mtbias::bias {

/// Symmetric relative difference (a - b) / (0.5 (a + b)); 0 when both
/// inputs are below 1e-12. Inputs must be non-negative.
double relative_surprisal(double i_correct, double i_incorrect);

/// Same form for entropies; positive when the unambiguous partition is the
/// more uncertain one.
double relative_entropy(double h_unambiguous, double h_ambiguous);

/// Relative difference of mean sequence log-probabilities, positive when the
/// correct-gender translations are more probable.
double delta_logprob(double correct_mean, double incorrect_mean);

struct CorrectnessSurprisals {
  std::optional<double> i_correct;
  std::optional<double> i_incorrect;
};

/// Mean surprisal over samples realising the gold gender and over samples
/// realising the opposite binary gender. Neutral/Unknown samples count for
/// neither side.
CorrectnessSurprisals correctness_surprisals(const SampleSet& samples, CueGender gold_gender,
                                             std::span<const double> per_sample_surprisal);

/// Mean of `values` over samples realising gold vs opposite gender.
CorrectnessSurprisals class_means(const SampleSet& samples, CueGender gold_gender,
                                  std::span<const double> values);

/// Relative surprisal when both sides are present.
std::optional<double> delta_i(const CorrectnessSurprisals& s);

inline constexpr double kNormTolerance = 1e-9;

/// H(x) divided by the mean entropy over the whole group (x included). When
/// that mean is below `tolerance` every member is reported absent.
std::map<std::string, std::optional<double>> normalized_entropy(
    const ContrastGroup& group, const std::map<std::string, double>& entropies,
    double tolerance = kNormTolerance);

struct AmbiguityAggregate {
  std::optional<double> h_unambiguous;
  std::optional<double> h_ambiguous;
  std::optional<double> delta_h;
  std::size_t n_unambiguous = 0;
  std::size_t n_ambiguous = 0;
};

/// Means of a per-record method entropy over unambiguous and ambiguous
/// instances, and the relative entropy between them. Records without the
/// method or whose instance is unknown are skipped.
AmbiguityAggregate aggregate_ambiguity_entropies(std::span<const MetricRecord> records,
                                                 const std::map<std::string, Instance>& instances,
                                                 Method method);

/// Percentage of unambiguous instances whose predicted gender matches the
/// gold gender, over those with a prediction.
std::optional<double> gender_accuracy(std::span<const MetricRecord> records,
                                      const std::map<std::string, Instance>& instances);

// ---------------------------------------------------------------------------
// Contrast sets and name augmentation
// ---------------------------------------------------------------------------

/// Lower-case pronoun lexicon used to align minimal pairs.
bool is_pronoun(std::string_view token);

/// Word and punctuation tokens of a sentence (whitespace dropped).
std::vector<std::string> tokenize(std::string_view text);

/// Template used to match minimal pairs: tokens with every pronoun replaced
/// by a slot marker. An inserted name (name_span) is removed first.
std::string contrast_template(const Instance& instance);

/// Groups instances whose token sequences agree everywhere except at
/// positions where both tokens are pronouns. Output is sorted by key and
/// independent of input order; members are sorted by instance id.
std::vector<ContrastGroup> build_contrast_sets(std::span<const Instance> instances);

/// language -> gender -> name.
using NameTable = std::map<std::string, std::map<CueGender, std::string>>;

/// Names for es, fr, uk and ru used when no table is supplied.
const NameTable& default_name_table();

/// Inserts the language-specific name for the pronoun gender immediately
/// after the focus noun. Rejects ambiguous instances.
Instance augment_with_names(const Instance& instance, std::string_view language,
                            const NameTable& names = default_name_table());

/// Removes an inserted name, restoring the original text and spans.
Instance strip_name(const Instance& instance);

}  // namespace mtbias::bias
