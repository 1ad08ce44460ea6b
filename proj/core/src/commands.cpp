// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

// CLI verbs: file plumbing around the library stages.

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <tuple>

#include "json_util.hpp"
#include "mtbias/error.hpp"
#include "mtbias/pipeline.hpp"
#include "mtbias/version.hpp"

namespace mtbias::pipeline {

using detail::Json;
using detail::optional_number;

namespace {

constexpr const char* kMetricsFile = "metrics.jsonl";
constexpr const char* kEffectsFile = "effects.jsonl";
constexpr const char* kBinsFile = "bins.json";

void write_json(const Json& j, const fs::path& path) {
  auto out = detail::open_for_write(path);
  out << j.dump(2) << '\n';
  detail::finish_write(out, path);
}

void write_text(const std::string& text, const fs::path& path) {
  auto out = detail::open_for_write(path);
  out << text;
  detail::finish_write(out, path);
}

Json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void require_upstream(const fs::path& file, std::string_view producer) {
  if (!fs::exists(file)) {
    throw IoError(file.string() + " not found; run `mtbias " + std::string(producer) + "` first");
  }
}

std::string format_violation(const dataset::Violation& v) {
  std::string s = v.file;
  if (v.line > 0) s += ":" + std::to_string(v.line);
  s += v.severity == dataset::Severity::Error ? ": error" : ": warning";
  s += " [" + v.code + "] " + v.message;
  return s;
}

template <typename Fn>
CommandResult guarded(Fn&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    return {kFailure, {std::string("error: ") + e.what()}};
  } catch (const IoError& e) {
    return {kFailure, {std::string("error: ") + e.what()}};
  } catch (const std::exception& e) {
    return {kFailure, {std::string("error: ") + e.what()}};
  }
}

std::map<std::string, Instance> instance_map(const dataset::CorpusManifest& m) {
  std::map<std::string, Instance> out;
  for (auto& x : dataset::load_instances(m.resolve(m.instances))) out.emplace(x.instance_id, std::move(x));
  return out;
}

std::string method_key(Method m) { return std::string(to_string(m)); }

Json summary_json(const PairSummary& s) {
  Json methods = Json::object();
  for (const auto& [m, ms] : s.methods) {
    methods[method_key(m)] = {
        {"h_unambiguous", optional_number(ms.ambiguity.h_unambiguous)},
        {"h_ambiguous", optional_number(ms.ambiguity.h_ambiguous)},
        {"delta_h", optional_number(ms.ambiguity.delta_h)},
        {"n_unambiguous", ms.ambiguity.n_unambiguous},
        {"n_ambiguous", ms.ambiguity.n_ambiguous},
        {"delta_i_mean", optional_number(ms.delta_i_mean)},
        {"n_delta_i", ms.n_delta_i},
        {"i_correct_mean", optional_number(ms.i_correct_mean)},
        {"i_incorrect_mean", optional_number(ms.i_incorrect_mean)},
        {"delta_i_of_means", optional_number(ms.delta_i_of_means)},
    };
  }
  return {
      {"model_id", s.model_id},
      {"language", s.language},
      {"n_instances", s.n_instances},
      {"gender_accuracy", optional_number(s.gender_accuracy)},
      {"logprob_correct_mean", optional_number(s.logprob_correct_mean)},
      {"logprob_incorrect_mean", optional_number(s.logprob_incorrect_mean)},
      {"delta_logprob", optional_number(s.delta_logprob)},
      {"comet_mean", optional_number(s.comet_mean)},
      {"methods", std::move(methods)},
  };
}

Json run_json(const RunConfig& c, const dataset::CorpusManifest& m, const ComputeOutput& out) {
  Json methods = Json::array();
  for (Method x : c.methods) methods.push_back(method_key(x));
  Json overrides = Json::object();
  for (const auto& [cue, level] : c.reference_overrides) overrides[cue] = level;
  return {
      {"format_version", dataset::kFormatVersion},
      {"tool_version", kToolVersion},
      {"dataset_name", m.dataset_name},
      {"methods", std::move(methods)},
      {"alpha_mode", c.alpha ? "fixed" : "tuned"},
      {"alpha", out.alpha_used},
      {"alpha_grid", c.alpha ? Json(nullptr) : Json(c.alpha_grid)},
      {"tuned_correlation", optional_number(out.tuned_correlation)},
      {"entailment_threshold", c.entailment_threshold},
      {"similarity_floor", c.similarity_floor},
      {"norm_tolerance", c.norm_tolerance},
      {"bins", c.bins},
      {"reference_overrides", std::move(overrides)},
      {"seed", c.seed},
      {"n_records", out.records.size()},
      {"skipped", out.skipped},
  };
}

Json bins_json(const stats::BinningResult& b) {
  Json bins = Json::array();
  for (const auto& s : b.bins) {
    Json density = Json::array();
    for (const auto& p : s.density) density.push_back({p.x, p.density});
    bins.push_back({
        {"bin_index", s.bin_index},
        {"lo", s.lo},
        {"hi", s.hi},
        {"condition", std::string(stats::to_string(s.condition))},
        {"count", s.count},
        {"min", optional_number(s.min)},
        {"q1", optional_number(s.q1)},
        {"median", optional_number(s.median)},
        {"q3", optional_number(s.q3)},
        {"max", optional_number(s.max)},
        {"values", s.values},
        {"density", std::move(density)},
    });
  }
  return {{"edges", b.edges}, {"num_bins", b.num_bins}, {"collapsed", b.collapsed}, {"bins", std::move(bins)}};
}

std::string fmt(const std::optional<double>& v, int precision = 4) {
  if (!v) return "N/A";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << *v;
  return os.str();
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

struct Ranking {
  std::string metric;
  bool ascending;
  std::vector<std::pair<std::string, double>> order;
};

std::vector<Ranking> build_rankings(std::span<const MetricRecord> records, std::span<const PairSummary> summaries,
                                    const std::map<std::string, Instance>& instances) {
  auto label = [](const std::string& model, const std::string& lang) { return model + "/" + lang; };
  std::vector<Ranking> out;
  auto add = [&](std::string metric, bool ascending, const std::map<std::string, double>& values) {
    if (!values.empty()) out.push_back({std::move(metric), ascending, stats::rank_models(values, ascending)});
  };

  std::map<std::string, std::pair<double, std::size_t>> comet_unamb;
  for (const auto& r : records) {
    const auto it = instances.find(r.instance_id);
    if (!r.comet_score || it == instances.end() || it->second.ambiguous) continue;
    auto& acc = comet_unamb[label(r.model_id, r.language)];
    acc.first += *r.comet_score;
    ++acc.second;
  }
  std::map<std::string, double> v;
  for (const auto& [k, acc] : comet_unamb) v[k] = acc.first / static_cast<double>(acc.second);
  add("comet_unambiguous", false, v);

  auto collect = [&](const std::function<std::optional<double>(const PairSummary&)>& get) {
    std::map<std::string, double> values;
    for (const auto& s : summaries) {
      if (const auto x = get(s)) values[label(s.model_id, s.language)] = *x;
    }
    return values;
  };
  add("comet_all", false, collect([](const PairSummary& s) { return s.comet_mean; }));
  add("gender_accuracy", false, collect([](const PairSummary& s) { return s.gender_accuracy; }));
  for (Method m : kAllMethods) {
    add("delta_i_" + method_key(m), true, collect([m](const PairSummary& s) -> std::optional<double> {
          const auto it = s.methods.find(m);
          return it == s.methods.end() ? std::nullopt : it->second.delta_i_mean;
        }));
  }
  for (Method m : kAllMethods) {
    add("delta_h_" + method_key(m), true, collect([m](const PairSummary& s) -> std::optional<double> {
          const auto it = s.methods.find(m);
          return it == s.methods.end() ? std::nullopt : it->second.ambiguity.delta_h;
        }));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

CommandResult cmd_validate(const fs::path& manifest, const std::optional<fs::path>& out_dir, bool strict) {
  if (!fs::exists(manifest)) return {kUsage, {"error: manifest '" + manifest.string() + "' not found"}};
  return guarded([&]() -> CommandResult {
    const auto report = dataset::validate_corpus(manifest);
    CommandResult r;
    for (const auto& v : report.violations) r.messages.push_back(format_violation(v));
    r.messages.push_back(std::to_string(report.errors()) + " error(s), " + std::to_string(report.warnings()) +
                         " warning(s)");
    if (out_dir) write_text(report.to_json() + "\n", *out_dir / "validation.json");
    r.exit_code = report.ok(strict) ? kSuccess : kFailure;
    return r;
  });
}

CommandResult cmd_augment_names(const fs::path& instances_in, const fs::path& instances_out,
                                std::string_view language, const std::optional<fs::path>& names_json,
                                bool keep_original) {
  return guarded([&]() -> CommandResult {
    bias::NameTable table = bias::default_name_table();
    if (names_json) {
      table.clear();
      const Json j = read_json(*names_json);
      if (!j.is_object()) throw ValidationError(names_json->string() + ": expected an object keyed by language");
      for (const auto& [lang, genders] : j.items()) {
        if (!genders.is_object()) throw ValidationError(names_json->string() + ": '" + lang + "' must be an object");
        for (const auto& [g, name] : genders.items()) {
          if (!name.is_string()) throw ValidationError(names_json->string() + ": names must be strings");
          const auto gender = parse_cue_gender(g);
          if (!gender) throw ValidationError(names_json->string() + ": unknown gender '" + g + "'");
          table[lang][*gender] = name.get<std::string>();
        }
      }
    }
    const auto input = dataset::load_instances(instances_in);
    std::vector<Instance> out;
    std::size_t added = 0;
    for (const auto& x : input) {
      if (keep_original || x.ambiguous) out.push_back(x);
      if (x.ambiguous) continue;
      out.push_back(bias::augment_with_names(x, language, table));
      ++added;
    }
    dataset::write_instances(out, instances_out);
    return {kSuccess, {"wrote " + std::to_string(out.size()) + " instances (" + std::to_string(added) +
                       " named) to " + instances_out.string()}};
  });
}

CommandResult cmd_compute(const RunConfig& config) {
  if (!fs::exists(config.manifest)) return {kUsage, {"error: manifest '" + config.manifest.string() + "' not found"}};
  return guarded([&]() -> CommandResult {
    validate_config(config);
    const auto manifest = dataset::load_manifest(config.manifest);
    const auto report = dataset::validate_corpus(manifest);
    if (!report.ok(config.strict)) {
      CommandResult r{kFailure, {}};
      for (const auto& v : report.violations) r.messages.push_back(format_violation(v));
      r.messages.push_back("corpus validation failed; run `mtbias validate` for the full report");
      return r;
    }

    const auto out = compute_metrics(manifest, config);
    dataset::write_metric_records(out.records, config.out_dir / kMetricsFile);
    dataset::write_metric_records_csv(out.records, config.out_dir / "metrics.csv");
    Json pairs = Json::array();
    for (const auto& s : out.summaries) pairs.push_back(summary_json(s));
    write_json({{"format_version", dataset::kFormatVersion}, {"pairs", std::move(pairs)}},
               config.out_dir / "summary.json");
    write_json(run_json(config, manifest, out), config.out_dir / "run.json");

    CommandResult r;
    for (const auto& v : report.violations) r.messages.push_back(format_violation(v));
    for (const auto& s : out.skipped) r.messages.push_back("skipped " + s);
    if (out.tuned_alpha) r.messages.push_back("tuned alpha = " + detail::format_number(*out.tuned_alpha));
    r.messages.push_back("wrote " + std::to_string(out.records.size()) + " metric records to " +
                         config.out_dir.string());
    r.exit_code = out.skipped.empty() ? kSuccess : kPartial;
    return r;
  });
}

CommandResult cmd_analyze(const RunConfig& config) {
  if (!fs::exists(config.manifest)) return {kUsage, {"error: manifest '" + config.manifest.string() + "' not found"}};
  return guarded([&]() -> CommandResult {
    validate_config(config);
    require_upstream(config.out_dir / kMetricsFile, "compute");
    const auto manifest = dataset::load_manifest(config.manifest);
    const auto instances = instance_map(manifest);
    const auto records = dataset::load_metric_records(config.out_dir / kMetricsFile);

    for (const auto& [cue, level] : config.reference_overrides) {
      const auto& specs = cue_specs();
      if (std::none_of(specs.begin(), specs.end(), [&](const CueSpec& c) { return c.name == cue; })) {
        throw ValidationError("unknown cue '" + cue + "' in --reference");
      }
    }

    auto effects = analyze_effects(records, instances, "norm_h", config.reference_overrides);
    auto raw = analyze_effects(records, instances, "h", config.reference_overrides);
    effects.insert(effects.end(), std::make_move_iterator(raw.begin()), std::make_move_iterator(raw.end()));
    dataset::write_effect_tables(effects, config.out_dir / kEffectsFile);
    dataset::write_effect_tables_csv(effects, config.out_dir / "effects.csv");

    const auto summaries = summarize(records, instances);
    Json corr = Json::array();
    for (const auto& c : analyze_correlations(summaries)) {
      corr.push_back({{"x", c.x_metric},
                      {"y", c.y_metric},
                      {"n", c.n},
                      {"spearman", optional_number(c.spearman)},
                      {"kendall_tau_b", optional_number(c.kendall)}});
    }
    write_json({{"format_version", dataset::kFormatVersion}, {"n_systems", summaries.size()},
                {"correlations", std::move(corr)}},
               config.out_dir / "correlations.json");

    std::map<std::tuple<std::string, std::string, Method>, std::vector<stats::BinInput>> inputs;
    for (const auto& r : records) {
      const auto inst = instances.find(r.instance_id);
      if (!r.comet_score || inst == instances.end()) continue;
      for (const auto& [m, res] : r.methods) {
        inputs[{r.model_id, r.language, m}].push_back({*r.comet_score, res.entropy, inst->second.ambiguous});
      }
    }
    Json plots = Json::array();
    for (const auto& [key, in] : inputs) {
      Json p = bins_json(stats::comet_bins(in, config.bins));
      p["model_id"] = std::get<0>(key);
      p["language"] = std::get<1>(key);
      p["method"] = method_key(std::get<2>(key));
      plots.push_back(std::move(p));
    }
    write_json({{"format_version", dataset::kFormatVersion}, {"k", config.bins}, {"plots", std::move(plots)}},
               config.out_dir / kBinsFile);

    const auto no_p = std::count_if(effects.begin(), effects.end(),
                                    [](const dataset::EffectTableRow& e) { return !e.estimate.p_value; });
    CommandResult r;
    r.messages.push_back("wrote " + std::to_string(effects.size()) + " effect estimates");
    if (no_p > 0) r.messages.push_back(std::to_string(no_p) + " estimate(s) lack a p-value (group size < 2)");
    return r;
  });
}

CommandResult cmd_report(const RunConfig& config) {
  if (!fs::exists(config.manifest)) return {kUsage, {"error: manifest '" + config.manifest.string() + "' not found"}};
  return guarded([&]() -> CommandResult {
    require_upstream(config.out_dir / kMetricsFile, "compute");
    require_upstream(config.out_dir / kEffectsFile, "analyze");
    require_upstream(config.out_dir / kBinsFile, "analyze");
    const auto manifest = dataset::load_manifest(config.manifest);
    const auto instances = instance_map(manifest);
    const auto records = dataset::load_metric_records(config.out_dir / kMetricsFile);
    const auto effects = dataset::load_effect_tables(config.out_dir / kEffectsFile);
    const Json bins = read_json(config.out_dir / kBinsFile);
    const auto summaries = summarize(records, instances);
    const auto rankings = build_rankings(records, summaries, instances);

    std::ostringstream txt;
    txt << "mtbias report (" << manifest.dataset_name << ")\n\n";

    txt << "== Systems ==\n";
    txt << pad("system", 20) << pad("n", 6) << pad("gender_acc", 12) << pad("comet", 10) << pad("dlogprob", 10);
    for (Method m : kAllMethods) txt << pad("dI_" + method_key(m), 12) << pad("dH_" + method_key(m), 12);
    txt << "\n";
    for (const auto& s : summaries) {
      txt << pad(s.model_id + "/" + s.language, 20) << pad(std::to_string(s.n_instances), 6)
          << pad(fmt(s.gender_accuracy, 2), 12) << pad(fmt(s.comet_mean), 10) << pad(fmt(s.delta_logprob), 10);
      for (Method m : kAllMethods) {
        const auto it = s.methods.find(m);
        txt << pad(fmt(it == s.methods.end() ? std::nullopt : it->second.delta_i_mean), 12)
            << pad(fmt(it == s.methods.end() ? std::nullopt : it->second.ambiguity.delta_h), 12);
      }
      txt << "\n";
    }

    std::ostringstream rank_csv;
    rank_csv << "metric,order,rank,system,value\n";
    txt << "\n== Rankings ==\n";
    for (const auto& rk : rankings) {
      txt << rk.metric << (rk.ascending ? " (ascending)" : " (descending)") << ":";
      std::size_t i = 0;
      for (const auto& [sys, v] : rk.order) {
        ++i;
        txt << (i == 1 ? " " : rk.ascending ? " < " : " > ") << sys;
        rank_csv << rk.metric << ',' << (rk.ascending ? "ascending" : "descending") << ',' << i << ',' << sys << ','
                 << detail::format_number(v) << '\n';
      }
      txt << "\n";
    }

    std::ostringstream dh_csv;
    dh_csv << "model_id,language,method,h_unambiguous,h_ambiguous,delta_h,n_unambiguous,n_ambiguous\n";
    for (const auto& s : summaries) {
      for (const auto& [m, ms] : s.methods) {
        const auto& a = ms.ambiguity;
        dh_csv << s.model_id << ',' << s.language << ',' << method_key(m) << ','
               << detail::format_optional(a.h_unambiguous) << ',' << detail::format_optional(a.h_ambiguous) << ','
               << detail::format_optional(a.delta_h) << ',' << a.n_unambiguous << ',' << a.n_ambiguous << '\n';
      }
    }

    std::ostringstream anova_csv;
    anova_csv << "model_id,language,method,dependent,cue,level,reference_level,coefficient,p_value,significant,"
                 "marker,n_level,n_reference\n";
    txt << "\n== Cue effects on normalised entropy (* p < 0.05, N/A: no test) ==\n";
    for (const auto& e : effects) {
      const auto& est = e.estimate;
      const std::string marker = est.significant ? "*" : (est.p_value ? "" : "N/A");
      anova_csv << e.model_id << ',' << e.language << ',' << method_key(e.method) << ',' << e.dependent << ','
                << est.cue << ',' << est.level << ',' << est.reference_level << ','
                << detail::format_number(est.coefficient) << ',' << detail::format_optional(est.p_value) << ','
                << (est.significant ? "true" : "false") << ',' << marker << ',' << est.n_level << ','
                << est.n_reference << '\n';
      if (e.dependent != "norm_h") continue;
      txt << pad(e.model_id + "/" + e.language, 20) << pad(method_key(e.method), 8)
          << pad(est.cue + ":" + est.level, 28) << pad(fmt(est.coefficient), 10) << "p=" << pad(fmt(est.p_value), 8)
          << marker << "\n";
    }

    Json violin = Json::array();
    for (const auto& p : bins.at("plots")) {
      Json panels = Json::array();
      for (const auto& b : p.at("bins")) {
        panels.push_back({{"bin_index", b.at("bin_index")},
                          {"range", {b.at("lo"), b.at("hi")}},
                          {"condition", b.at("condition")},
                          {"count", b.at("count")},
                          {"box", {{"min", b.at("min")}, {"q1", b.at("q1")}, {"median", b.at("median")},
                                   {"q3", b.at("q3")}, {"max", b.at("max")}}},
                          {"density", b.at("density")}});
      }
      violin.push_back({{"model_id", p.at("model_id")}, {"language", p.at("language")}, {"method", p.at("method")},
                        {"x_axis", "comet"}, {"y_axis", "entropy"}, {"collapsed", p.at("collapsed")},
                        {"panels", std::move(panels)}});
    }

    write_text(txt.str(), config.out_dir / "report.txt");
    write_text(rank_csv.str(), config.out_dir / "rankings.csv");
    write_text(dh_csv.str(), config.out_dir / "delta_h.csv");
    write_text(anova_csv.str(), config.out_dir / "anova.csv");
    write_json({{"format_version", dataset::kFormatVersion}, {"plots", std::move(violin)}},
               config.out_dir / "violin.json");
    return {kSuccess, {"wrote report to " + (config.out_dir / "report.txt").string()}};
  });
}

}  // namespace mtbias::pipeline
