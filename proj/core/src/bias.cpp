// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#include "mtbias/bias.hpp"

#include <cmath>
#include <string>

#include "mtbias/error.hpp"

namespace mtbias::bias {

namespace {

constexpr double kZero = 1e-12;

double symmetric_relative_difference(double a, double b) {
  if (a < kZero && b < kZero) return 0.0;
  return (a - b) / (0.5 * (a + b));
}

void require_non_negative(double a, double b, const char* who) {
  if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ValidationError(std::string(who) + ": inputs must be finite and non-negative");
  }
}

}  // namespace

double relative_surprisal(double i_correct, double i_incorrect) {
  require_non_negative(i_correct, i_incorrect, "relative_surprisal");
  return symmetric_relative_difference(i_correct, i_incorrect);
}

double relative_entropy(double h_unambiguous, double h_ambiguous) {
  require_non_negative(h_unambiguous, h_ambiguous, "relative_entropy");
  return symmetric_relative_difference(h_unambiguous, h_ambiguous);
}

double delta_logprob(double correct_mean, double incorrect_mean) {
  if (!std::isfinite(correct_mean) || !std::isfinite(incorrect_mean)) {
    throw ValidationError("delta_logprob: inputs must be finite");
  }
  const double scale = 0.5 * std::abs(correct_mean + incorrect_mean);
  if (scale < kZero) return 0.0;
  // Log-probs are negative, so the magnitude of the mean is the scale and a
  // larger (less negative) correct mean yields a positive value.
  return (correct_mean - incorrect_mean) / scale;
}

CorrectnessSurprisals class_means(const SampleSet& samples, CueGender gold_gender,
                                  std::span<const double> values) {
  if (gold_gender == CueGender::N) {
    throw ValidationError("correctness classes need a binary gold gender");
  }
  if (values.size() != samples.size()) {
    throw ValidationError("per-sample values are not aligned with the samples");
  }
  double sum_c = 0.0, sum_i = 0.0;
  std::size_t n_c = 0, n_i = 0;
  const CueGender wrong = opposite(gold_gender);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const GenderLabel label = samples.samples[k].gender_label;
    if (realises(label, gold_gender)) {
      sum_c += values[k];
      ++n_c;
    } else if (realises(label, wrong)) {
      sum_i += values[k];
      ++n_i;
    }
  }
  CorrectnessSurprisals out;
  if (n_c > 0) out.i_correct = sum_c / static_cast<double>(n_c);
  if (n_i > 0) out.i_incorrect = sum_i / static_cast<double>(n_i);
  return out;
}

CorrectnessSurprisals correctness_surprisals(const SampleSet& samples, CueGender gold_gender,
                                             std::span<const double> per_sample_surprisal) {
  return class_means(samples, gold_gender, per_sample_surprisal);
}

std::optional<double> delta_i(const CorrectnessSurprisals& s) {
  if (!s.i_correct || !s.i_incorrect) return std::nullopt;
  return relative_surprisal(*s.i_correct, *s.i_incorrect);
}

std::map<std::string, std::optional<double>> normalized_entropy(
    const ContrastGroup& group, const std::map<std::string, double>& entropies, double tolerance) {
  if (group.member_instance_ids.empty()) throw ValidationError("normalized_entropy: empty group");
  double total = 0.0;
  for (const auto& id : group.member_instance_ids) {
    const auto it = entropies.find(id);
    if (it == entropies.end()) {
      throw ValidationError("normalized_entropy: no entropy for member '" + id + "'");
    }
    total += it->second;
  }
  const double denom = total / static_cast<double>(group.member_instance_ids.size());
  std::map<std::string, std::optional<double>> out;
  for (const auto& id : group.member_instance_ids) {
    out[id] = denom < tolerance ? std::nullopt : std::optional<double>(entropies.at(id) / denom);
  }
  return out;
}

AmbiguityAggregate aggregate_ambiguity_entropies(std::span<const MetricRecord> records,
                                                 const std::map<std::string, Instance>& instances,
                                                 Method method) {
  double sum_u = 0.0, sum_a = 0.0;
  AmbiguityAggregate out;
  for (const auto& r : records) {
    const auto m = r.methods.find(method);
    const auto inst = instances.find(r.instance_id);
    if (m == r.methods.end() || inst == instances.end()) continue;
    if (inst->second.ambiguous) {
      sum_a += m->second.entropy;
      ++out.n_ambiguous;
    } else {
      sum_u += m->second.entropy;
      ++out.n_unambiguous;
    }
  }
  if (out.n_unambiguous > 0) out.h_unambiguous = sum_u / static_cast<double>(out.n_unambiguous);
  if (out.n_ambiguous > 0) out.h_ambiguous = sum_a / static_cast<double>(out.n_ambiguous);
  if (out.h_unambiguous && out.h_ambiguous) {
    out.delta_h = relative_entropy(*out.h_unambiguous, *out.h_ambiguous);
  }
  return out;
}

std::optional<double> gender_accuracy(std::span<const MetricRecord> records,
                                      const std::map<std::string, Instance>& instances) {
  std::size_t correct = 0, total = 0;
  for (const auto& r : records) {
    if (!r.prediction_gender) continue;
    const auto inst = instances.find(r.instance_id);
    if (inst == instances.end() || inst->second.ambiguous || !inst->second.gold_gender) continue;
    ++total;
    if (*r.prediction_gender == *inst->second.gold_gender) ++correct;
  }
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace mtbias::bias
