// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#include "mtbias/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>
#include <tuple>

#include "json_util.hpp"
#include "mtbias/entropy.hpp"
#include "mtbias/error.hpp"
#include "mtbias/version.hpp"
#include "pipeline_internal.hpp"

namespace mtbias::pipeline {

using detail::Json;

void validate_config(const RunConfig& c) {
  if (c.methods.empty()) throw ValidationError("at least one method is required");
  if (c.bins < 2) throw ValidationError("bins must be >= 2");
  if (!(c.entailment_threshold > 0.0 && c.entailment_threshold < 1.0)) {
    throw ValidationError("entailment threshold must lie in (0,1)");
  }
  if (!(c.similarity_floor > 0.0 && c.similarity_floor < 1.0)) {
    throw ValidationError("similarity floor must lie in (0,1)");
  }
  if (c.alpha && !(*c.alpha > 0.0 && std::isfinite(*c.alpha))) throw ValidationError("alpha must be > 0");
  if (!c.alpha) {
    if (c.alpha_grid.empty()) throw ValidationError("alpha grid is empty");
    for (double a : c.alpha_grid) {
      if (!(a > 0.0 && std::isfinite(a))) throw ValidationError("alpha grid values must be > 0");
    }
  }
  if (!(c.norm_tolerance > 0.0)) throw ValidationError("norm tolerance must be > 0");
  if (c.jobs == 0) throw ValidationError("jobs must be >= 1");
}

// ---------------------------------------------------------------------------
// Cues
// ---------------------------------------------------------------------------

const std::vector<CueSpec>& cue_specs() {
  static const std::vector<CueSpec> specs = {
      {"Names", "no name"},      {"Recency", "N"}, {"ImplicitCausality", "None"},
      {"Stereotype", "None"},    {"Subject", "N"}, {"Pronoun", "N"},
      {"DefaultM", "no default"}, {"Ambiguity", "unambiguous"},
  };
  return specs;
}

std::optional<std::string> cue_level(const Instance& x, std::string_view cue, std::string_view language) {
  if (cue == "Names") return std::string(x.cues.names_present ? "name" : "no name");
  if (cue == "Recency") return std::string(to_string(x.cues.recency));
  if (cue == "ImplicitCausality") return std::string(to_string(x.cues.ic_role));
  if (cue == "Stereotype") return std::string(to_string(x.cues.stereotype_role));
  if (cue == "Subject") return std::string(to_string(x.cues.subject));
  if (cue == "Pronoun") return std::string(to_string(x.pronoun_gender));
  if (cue == "DefaultM") {
    if (language != "ru") return std::nullopt;
    return std::string(x.default_masculine ? "default" : "no default");
  }
  if (cue == "Ambiguity") return std::string(x.ambiguous ? "ambiguous" : "unambiguous");
  throw ValidationError("unknown cue '" + std::string(cue) + "'");
}

// ---------------------------------------------------------------------------
// Parallel map
// ---------------------------------------------------------------------------

namespace internal {

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  // Report the lowest-index failure so the error does not depend on timing.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace internal

// ---------------------------------------------------------------------------
// Compute
// ---------------------------------------------------------------------------

namespace {

struct WorkResult {
  MetricRecord record;
  std::vector<std::string> skipped;
};

MethodResult method_result(const metrics::EntropyResult& h, const SampleSet& set, const Instance& x) {
  MethodResult r;
  r.entropy = h.entropy;
  std::array<double, kNumGenderLabels> sums{};
  std::array<std::size_t, kNumGenderLabels> counts{};
  for (std::size_t k = 0; k < set.size(); ++k) {
    const auto g = static_cast<std::size_t>(set.samples[k].gender_label);
    sums[g] += h.per_sample_surprisal[k];
    ++counts[g];
  }
  for (std::size_t g = 0; g < kNumGenderLabels; ++g) {
    if (counts[g] > 0) r.surprisal_by_gender[g] = sums[g] / static_cast<double>(counts[g]);
  }
  if (!x.ambiguous && x.gold_gender) {
    const auto cs = bias::correctness_surprisals(set, *x.gold_gender, h.per_sample_surprisal);
    r.i_correct = cs.i_correct;
    r.i_incorrect = cs.i_incorrect;
    r.delta_i = bias::delta_i(cs);
  }
  return r;
}

WorkResult compute_one(const SampleSet& set, const Instance& x, const RunConfig& config, double alpha) {
  WorkResult out;
  MetricRecord& rec = out.record;
  rec.instance_id = set.instance_id;
  rec.model_id = set.model_id;
  rec.language = set.language;
  const std::string pair = set.model_id + "/" + set.language + "/";

  for (Method m : config.methods) {
    switch (m) {
      case Method::Shannon:
        rec.methods[m] = method_result(metrics::sequence_entropy(set), set, x);
        break;
      case Method::SE:
        if (!set.entailment) {
          out.skipped.push_back(pair + "SE: no entailment matrices");
          break;
        }
        rec.methods[m] = method_result(
            metrics::semantic_entropy(metrics::cluster_by_entailment(set, *set.entailment, config.entailment_threshold)),
            set, x);
        break;
      case Method::S3E:
        if (!set.has_embeddings()) {
          out.skipped.push_back(pair + "S3E: no embeddings");
          break;
        }
        rec.methods[m] = method_result(
            metrics::s3e_entropy(metrics::cosine_similarity_matrix(set, config.similarity_floor),
                                 {alpha, config.similarity_floor}),
            set, x);
        break;
      case Method::GE:
        rec.methods[m] = method_result(metrics::gender_entropy(set), set, x);
        break;
    }
  }

  if (!x.ambiguous && x.gold_gender) {
    std::vector<double> lp;
    lp.reserve(set.size());
    for (const auto& s : set.samples) lp.push_back(s.log_prob);
    const auto means = bias::class_means(set, *x.gold_gender, lp);
    rec.logprob_correct = means.i_correct;
    rec.logprob_incorrect = means.i_incorrect;
    if (means.i_correct && means.i_incorrect) {
      rec.delta_logprob = bias::delta_logprob(*means.i_correct, *means.i_incorrect);
    }
  }
  return out;
}

template <typename T>
std::optional<double> mean_of(const std::vector<T>& xs) {
  if (xs.empty()) return std::nullopt;
  double acc = 0.0;
  for (double v : xs) acc += v;
  return acc / static_cast<double>(xs.size());
}

}  // namespace

void attach_normalized_entropy(std::vector<MetricRecord>& records,
                               const std::map<std::string, Instance>& instances, double tolerance) {
  using GroupKey = std::tuple<std::string, std::string, std::string>;
  std::map<GroupKey, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    const auto it = instances.find(r.instance_id);
    std::string key;
    if (it == instances.end()) {
      key = "#" + r.instance_id;
    } else if (!it->second.contrast_key.empty()) {
      key = it->second.contrast_key;
    } else {
      key = "~" + bias::contrast_template(it->second);
    }
    groups[{r.model_id, r.language, std::move(key)}].push_back(k);
  }
  for (const auto& [key, members] : groups) {
    for (Method m : kAllMethods) {
      ContrastGroup g;
      g.contrast_key = std::get<2>(key);
      std::map<std::string, double> entropies;
      std::map<std::string, std::size_t> where;
      for (std::size_t k : members) {
        const auto it = records[k].methods.find(m);
        if (it == records[k].methods.end()) continue;
        g.member_instance_ids.push_back(records[k].instance_id);
        entropies[records[k].instance_id] = it->second.entropy;
        where[records[k].instance_id] = k;
      }
      if (g.member_instance_ids.empty()) continue;
      for (const auto& [id, value] : bias::normalized_entropy(g, entropies, tolerance)) {
        records[where[id]].methods[m].norm_h = value;
      }
    }
  }
}

std::vector<PairSummary> summarize(std::span<const MetricRecord> records,
                                   const std::map<std::string, Instance>& instances) {
  std::map<std::pair<std::string, std::string>, std::vector<MetricRecord>> by_pair;
  for (const auto& r : records) by_pair[{r.model_id, r.language}].push_back(r);

  std::vector<PairSummary> out;
  for (const auto& [pair, recs] : by_pair) {
    PairSummary s;
    s.model_id = pair.first;
    s.language = pair.second;
    s.n_instances = recs.size();
    s.gender_accuracy = bias::gender_accuracy(recs, instances);
    std::vector<double> lpc, lpi, comet;
    for (const auto& r : recs) {
      if (r.logprob_correct) lpc.push_back(*r.logprob_correct);
      if (r.logprob_incorrect) lpi.push_back(*r.logprob_incorrect);
      if (r.comet_score) comet.push_back(*r.comet_score);
    }
    s.logprob_correct_mean = mean_of(lpc);
    s.logprob_incorrect_mean = mean_of(lpi);
    if (s.logprob_correct_mean && s.logprob_incorrect_mean) {
      s.delta_logprob = bias::delta_logprob(*s.logprob_correct_mean, *s.logprob_incorrect_mean);
    }
    s.comet_mean = mean_of(comet);

    for (Method m : kAllMethods) {
      bool present = false;
      std::vector<double> di, ic, ii;
      for (const auto& r : recs) {
        const auto it = r.methods.find(m);
        if (it == r.methods.end()) continue;
        present = true;
        if (it->second.delta_i) di.push_back(*it->second.delta_i);
        if (it->second.i_correct) ic.push_back(*it->second.i_correct);
        if (it->second.i_incorrect) ii.push_back(*it->second.i_incorrect);
      }
      if (!present) continue;
      MethodSummary ms;
      ms.ambiguity = bias::aggregate_ambiguity_entropies(recs, instances, m);
      ms.delta_i_mean = mean_of(di);
      ms.n_delta_i = di.size();
      ms.i_correct_mean = mean_of(ic);
      ms.i_incorrect_mean = mean_of(ii);
      if (ms.i_correct_mean && ms.i_incorrect_mean) {
        ms.delta_i_of_means = bias::relative_surprisal(*ms.i_correct_mean, *ms.i_incorrect_mean);
      }
      s.methods[m] = ms;
    }
    out.push_back(std::move(s));
  }
  return out;
}

ComputeOutput compute_metrics(const dataset::CorpusManifest& manifest, const RunConfig& config) {
  validate_config(config);
  ComputeOutput out;

  const auto instance_list = dataset::load_instances(manifest.resolve(manifest.instances));
  std::map<std::string, Instance> instances;
  for (const auto& x : instance_list) instances.emplace(x.instance_id, x);

  std::map<std::tuple<std::string, std::string, std::string>, dataset::ScoreRecord> scores;
  if (manifest.scores) {
    for (auto& s : dataset::load_scores(manifest.resolve(*manifest.scores))) {
      scores.emplace(std::make_tuple(s.instance_id, s.model_id, s.language), std::move(s));
    }
  }

  auto entries = manifest.samples;
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.model, a.language) < std::tie(b.model, b.language);
  });
  std::vector<SampleSet> sets;
  for (const auto& e : entries) {
    auto loaded = dataset::load_sample_sets(manifest.resolve(e.samples),
                                            e.embeddings ? std::optional(manifest.resolve(*e.embeddings)) : std::nullopt,
                                            e.entailment ? std::optional(manifest.resolve(*e.entailment)) : std::nullopt);
    for (auto& s : loaded) {
      if (!instances.contains(s.instance_id)) {
        throw ValidationError(e.samples.string() + ": sample set for unknown instance '" + s.instance_id + "'");
      }
      sets.push_back(std::move(s));
    }
  }

  out.alpha_used = config.alpha.value_or(1.0);
  if (config.methods.contains(Method::S3E) && !config.alpha) {
    std::vector<SampleSet> calibration;
    for (const auto& s : sets) {
      if (s.has_embeddings()) calibration.push_back(s);
    }
    const auto choice = metrics::tune_alpha(calibration, config.alpha_grid, config.similarity_floor);
    out.tuned_alpha = choice.alpha;
    out.tuned_correlation = choice.correlation;
    out.alpha_used = choice.alpha;
  }

  std::vector<WorkResult> results(sets.size());
  internal::parallel_for(sets.size(), config.jobs, [&](std::size_t i) {
    results[i] = compute_one(sets[i], instances.at(sets[i].instance_id), config, out.alpha_used);
  });

  std::set<std::string> skipped;
  for (auto& w : results) {
    auto& r = w.record;
    if (const auto it = scores.find({r.instance_id, r.model_id, r.language}); it != scores.end()) {
      std::vector<double> vals;
      for (const auto& [ref, v] : it->second.comet_scores) vals.push_back(v);
      if (!vals.empty()) r.comet_score = stats::max_reference_aggregation(vals);
      r.prediction_gender = it->second.prediction_gender;
    }
    skipped.insert(w.skipped.begin(), w.skipped.end());
    out.records.push_back(std::move(r));
  }
  out.skipped.assign(skipped.begin(), skipped.end());

  attach_normalized_entropy(out.records, instances, config.norm_tolerance);
  std::sort(out.records.begin(), out.records.end(), [](const MetricRecord& a, const MetricRecord& b) {
    return std::tie(a.instance_id, a.model_id, a.language) < std::tie(b.instance_id, b.model_id, b.language);
  });
  out.summaries = summarize(out.records, instances);
  return out;
}

// ---------------------------------------------------------------------------
// Analyze
// ---------------------------------------------------------------------------

std::vector<dataset::EffectTableRow> analyze_effects(std::span<const MetricRecord> records,
                                                     const std::map<std::string, Instance>& instances,
                                                     std::string_view dependent,
                                                     const std::map<std::string, std::string>& reference_overrides) {
  if (dependent != "norm_h" && dependent != "h") {
    throw ValidationError("dependent variable must be norm_h or h");
  }
  std::map<std::pair<std::string, std::string>, std::vector<const MetricRecord*>> by_pair;
  for (const auto& r : records) by_pair[{r.model_id, r.language}].push_back(&r);

  std::vector<dataset::EffectTableRow> rows;
  for (const auto& [pair, recs] : by_pair) {
    for (Method m : kAllMethods) {
      for (const auto& cue : cue_specs()) {
        std::vector<double> values;
        std::vector<std::string> levels;
        for (const MetricRecord* r : recs) {
          const auto mit = r->methods.find(m);
          const auto inst = instances.find(r->instance_id);
          if (mit == r->methods.end() || inst == instances.end()) continue;
          const std::optional<double> v = dependent == "h" ? std::optional(mit->second.entropy) : mit->second.norm_h;
          if (!v) continue;
          auto level = cue_level(inst->second, cue.name, pair.second);
          if (!level) continue;
          values.push_back(*v);
          levels.push_back(std::move(*level));
        }
        const auto ov = reference_overrides.find(cue.name);
        const std::string& reference = ov != reference_overrides.end() ? ov->second : cue.reference;
        if (std::find(levels.begin(), levels.end(), reference) == levels.end()) continue;
        for (auto& e : stats::single_effect_anova(values, levels, reference, cue.name)) {
          rows.push_back({pair.first, pair.second, m, std::string(dependent), std::move(e)});
        }
      }
    }
  }
  return rows;
}

std::vector<CorrelationRow> analyze_correlations(std::span<const PairSummary> summaries) {
  std::vector<std::pair<std::string, std::function<std::optional<double>(const PairSummary&)>>> metrics;
  for (Method m : kAllMethods) {
    metrics.emplace_back("delta_i_" + std::string(to_string(m)), [m](const PairSummary& s) -> std::optional<double> {
      const auto it = s.methods.find(m);
      return it == s.methods.end() ? std::nullopt : it->second.delta_i_mean;
    });
  }
  metrics.emplace_back("delta_logprob", [](const PairSummary& s) { return s.delta_logprob; });

  std::vector<CorrelationRow> rows;
  for (const auto& [name, get] : metrics) {
    std::vector<double> x, y;
    for (const auto& s : summaries) {
      const auto v = get(s);
      if (!s.gender_accuracy || !v) continue;
      x.push_back(*s.gender_accuracy);
      y.push_back(*v);
    }
    CorrelationRow row{"gender_accuracy", name, x.size(), std::nullopt, std::nullopt};
    if (x.size() >= 3) {
      row.spearman = stats::spearman_rho(x, y);
      row.kendall = stats::kendall_tau_b(x, y);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mtbias::pipeline
