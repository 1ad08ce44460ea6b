// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

// Cross-file corpus validation. Nothing in here may throw on bad corpus
// content: each problem becomes a located Violation.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "json_util.hpp"
#include "mtbias/bias.hpp"
#include "mtbias/dataset.hpp"
#include "mtbias/error.hpp"
#include "record_codec.hpp"

namespace mtbias::dataset {

using detail::Json;

std::size_t ValidationReport::errors() const {
  return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                [](const Violation& v) { return v.severity == Severity::Error; }));
}

std::size_t ValidationReport::warnings() const { return violations.size() - errors(); }

std::string ValidationReport::to_json() const {
  Json j;
  j["errors"] = errors();
  j["warnings"] = warnings();
  Json arr = Json::array();
  for (const auto& v : violations) {
    arr.push_back({{"severity", v.severity == Severity::Error ? "error" : "warning"},
                   {"file", v.file},
                   {"line", v.line},
                   {"code", v.code},
                   {"message", v.message}});
  }
  j["violations"] = std::move(arr);
  return j.dump(2) + "\n";
}

namespace {

class Reporter {
 public:
  explicit Reporter(ValidationReport& report) : report_(report) {}

  void error(const fs::path& file, std::size_t line, std::string code, std::string message) {
    report_.violations.push_back({Severity::Error, file.generic_string(), line, std::move(code), std::move(message)});
  }
  void warning(const fs::path& file, std::size_t line, std::string code, std::string message) {
    report_.violations.push_back({Severity::Warning, file.generic_string(), line, std::move(code), std::move(message)});
  }

 private:
  ValidationReport& report_;
};

struct Row {
  std::size_t line;
  Json value;
};

/// Tolerant JSONL reader: unreadable files, bad JSON and version mismatches
/// become violations; the surviving rows are returned.
std::optional<std::vector<Row>> read_rows(const fs::path& path, Reporter& rep) {
  std::vector<detail::JsonLine> lines;
  try {
    lines = detail::read_lines(path);
  } catch (const std::exception& e) {
    rep.error(path, 0, "unreadable-file", e.what());
    return std::nullopt;
  }
  std::vector<Row> rows;
  bool first = true;
  for (auto& [line, text] : lines) {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const std::exception& e) {
      rep.error(path, line, "malformed-json", e.what());
      first = false;
      continue;
    }
    if (first && j.is_object() && j.contains("format_version") && !j.contains("instance_id")) {
      first = false;
      const Json& v = j["format_version"];
      if (!v.is_string() || major_version(v.get<std::string>()) != major_version(kFormatVersion)) {
        rep.error(path, line, "format-version", "unsupported format_version " + v.dump());
      }
      continue;
    }
    first = false;
    rows.push_back({line, std::move(j)});
  }
  return rows;
}

struct InstanceIndex {
  std::map<std::string, Instance> by_id;
};

InstanceIndex check_instances(const CorpusManifest& m, Reporter& rep) {
  InstanceIndex idx;
  const fs::path path = m.resolve(m.instances);
  const auto rows = read_rows(path, rep);
  if (!rows) return idx;
  const bool has_ru = std::find(m.languages.begin(), m.languages.end(), "ru") != m.languages.end();

  for (const auto& [line, j] : *rows) {
    Instance x;
    try {
      x = codec::instance_from_json(j);
    } catch (const std::exception& e) {
      rep.error(path, line, "schema", e.what());
      continue;
    }
    for (const auto& v : instance_violations(x)) rep.error(path, line, "invariant", "'" + x.instance_id + "': " + v);
    if (x.default_masculine && !has_ru) {
      rep.error(path, line, "default-m-without-ru",
                "'" + x.instance_id + "' is flagged default-masculine but the corpus has no ru target");
    }
    if (!idx.by_id.emplace(x.instance_id, x).second) {
      rep.error(path, line, "duplicate-instance", "instance id '" + x.instance_id + "' repeats");
    }
  }

  // Contrast groups declared through contrast_key.
  std::map<std::string, std::vector<const Instance*>> groups;
  for (const auto& [id, x] : idx.by_id) {
    if (!x.contrast_key.empty()) groups[x.contrast_key].push_back(&x);
  }
  for (const auto& [key, members] : groups) {
    std::set<CueGender> pronouns;
    const std::string tmpl = bias::contrast_template(*members.front());
    for (const Instance* x : members) {
      if (!pronouns.insert(x->pronoun_gender).second) {
        rep.error(path, 0, "contrast-group",
                  "contrast group '" + key + "' has two members with pronoun " + std::string(to_string(x->pronoun_gender)));
      }
      if (bias::contrast_template(*x) != tmpl) {
        rep.error(path, 0, "contrast-group",
                  "'" + x->instance_id + "' differs from contrast group '" + key + "' beyond pronoun tokens");
      }
    }
  }
  return idx;
}

void check_samples_entry(const CorpusManifest& m, const SamplesEntry& entry, const InstanceIndex& idx,
                         Reporter& rep) {
  const fs::path path = m.resolve(entry.samples);
  const auto rows = read_rows(path, rep);
  if (!rows) return;

  std::vector<std::pair<std::size_t, SampleSet>> sets;
  std::set<std::string> seen;
  for (const auto& [line, j] : *rows) {
    SampleSet s;
    try {
      s = codec::sample_set_from_json(j);
    } catch (const std::exception& e) {
      rep.error(path, line, "schema", e.what());
      continue;
    }
    if (s.model_id != entry.model || s.language != entry.language) {
      rep.error(path, line, "pair-mismatch",
                "record declares " + s.model_id + "/" + s.language + " inside the " + entry.model + "/" +
                    entry.language + " samples file");
    }
    if (!idx.by_id.contains(s.instance_id)) {
      rep.error(path, line, "unknown-instance", "samples for unknown instance '" + s.instance_id + "'");
    }
    if (!seen.insert(s.instance_id).second) {
      rep.error(path, line, "duplicate-sample-set", "second sample set for '" + s.instance_id + "'");
    }
    if (s.samples.empty()) rep.error(path, line, "empty-sample-set", "'" + s.instance_id + "' has no samples");
    sets.emplace_back(line, std::move(s));
  }
  for (const auto& [id, x] : idx.by_id) {
    if (!seen.contains(id)) {
      rep.error(path, 0, "missing-coverage", "no samples for instance '" + id + "' (" + entry.model + "/" + entry.language + ")");
    }
  }

  if (entry.embeddings) {
    const fs::path epath = m.resolve(*entry.embeddings);
    try {
      const EmbeddingTable t = read_embedding_sidecar(epath);
      std::size_t total = 0;
      for (const auto& [line, s] : sets) total += s.size();
      if (t.rows != total) {
        rep.error(epath, 0, "embedding-rows",
                  "sidecar has " + std::to_string(t.rows) + " rows for " + std::to_string(total) + " samples");
      } else {
        std::size_t row = 0;
        for (auto& [line, s] : sets) {
          for (auto& smp : s.samples) {
            const auto r = t.row(row++);
            smp.embedding.assign(r.begin(), r.end());
          }
        }
      }
    } catch (const std::exception& e) {
      rep.error(epath, 0, "embedding-sidecar", e.what());
    }
  }

  if (entry.entailment) {
    const fs::path tpath = m.resolve(*entry.entailment);
    if (const auto trows = read_rows(tpath, rep)) {
      std::map<std::string, std::size_t> sizes;
      for (const auto& [line, s] : sets) sizes[s.instance_id] = s.size();
      std::set<std::string> seen_m;
      for (const auto& [line, j] : *trows) {
        try {
          auto [id, mat] = codec::entailment_from_json(j);
          if (!seen_m.insert(id).second) rep.error(tpath, line, "duplicate-entailment", "second matrix for '" + id + "'");
          const auto it = sizes.find(id);
          if (it == sizes.end()) {
            rep.error(tpath, line, "unknown-instance", "entailment for '" + id + "' without a sample set");
            continue;
          }
          SampleSet probe;
          probe.instance_id = id;
          probe.samples.resize(it->second);
          probe.entailment = std::move(mat);
          validate_sample_set(probe);
        } catch (const std::exception& e) {
          rep.error(tpath, line, "entailment", e.what());
        }
      }
    }
  }

  for (const auto& [line, s] : sets) {
    if (s.samples.empty()) continue;
    try {
      validate_sample_set(s);
    } catch (const std::exception& e) {
      rep.error(path, line, "sample-set", e.what());
    }
  }
}

void check_scores(const CorpusManifest& m, const InstanceIndex& idx, Reporter& rep) {
  const fs::path path = m.resolve(*m.scores);
  const auto rows = read_rows(path, rep);
  if (!rows) return;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& [line, j] : *rows) {
    ScoreRecord r;
    try {
      r = codec::score_from_json(j);
    } catch (const std::exception& e) {
      rep.error(path, line, "schema", e.what());
      continue;
    }
    if (!seen.emplace(r.instance_id, r.model_id, r.language).second) {
      rep.error(path, line, "duplicate-score", "second score record for " + r.instance_id + " " + r.model_id + "/" + r.language);
    }
    std::set<std::string> refs;
    for (const auto& [ref, score] : r.comet_scores) {
      if (!(score >= 0.0 && score <= 100.0)) {
        rep.error(path, line, "score-range", "COMET score " + detail::format_number(score) + " outside [0,100]");
      }
      if (!refs.insert(ref).second) rep.error(path, line, "duplicate-reference", "reference id '" + ref + "' repeats");
    }
    const auto it = idx.by_id.find(r.instance_id);
    if (it == idx.by_id.end()) {
      rep.error(path, line, "unknown-instance", "scores for unknown instance '" + r.instance_id + "'");
      continue;
    }
    if (it->second.ambiguous && !r.comet_scores.empty() && r.comet_scores.size() < 2) {
      rep.warning(path, line, "multi-reference-required",
                  "ambiguous instance '" + r.instance_id + "' has a single reference score; both gendered references are expected");
    }
  }
}

}  // namespace

ValidationReport validate_corpus(const CorpusManifest& m) {
  ValidationReport report;
  Reporter rep(report);
  const fs::path manifest_file = m.base_dir / "manifest.json";

  if (major_version(m.format_version) != major_version(kFormatVersion)) {
    rep.error(manifest_file, 0, "format-version", "unsupported format_version '" + m.format_version + "'");
  }

  const InstanceIndex idx = check_instances(m, rep);

  std::map<std::pair<std::string, std::string>, std::size_t> pairs;
  for (const auto& e : m.samples) {
    ++pairs[{e.model, e.language}];
    if (std::find(m.models.begin(), m.models.end(), e.model) == m.models.end() ||
        std::find(m.languages.begin(), m.languages.end(), e.language) == m.languages.end()) {
      rep.error(manifest_file, 0, "undeclared-pair", "samples entry " + e.model + "/" + e.language + " is not in models x languages");
    }
  }
  for (const auto& model : m.models) {
    for (const auto& lang : m.languages) {
      const auto n = pairs[{model, lang}];
      if (n == 0) rep.error(manifest_file, 0, "missing-samples-file", "no samples file for " + model + "/" + lang);
      if (n > 1) rep.error(manifest_file, 0, "duplicate-samples-file", std::to_string(n) + " samples files for " + model + "/" + lang);
    }
  }

  for (const auto& e : m.samples) check_samples_entry(m, e, idx, rep);
  if (m.scores) check_scores(m, idx, rep);
  return report;
}

ValidationReport validate_corpus(const fs::path& manifest_path) {
  CorpusManifest m;
  try {
    m = load_manifest(manifest_path);
  } catch (const std::exception& e) {
    ValidationReport report;
    report.violations.push_back({Severity::Error, manifest_path.generic_string(), 0, "manifest", e.what()});
    return report;
  }
  auto report = validate_corpus(m);
  for (auto& v : report.violations) {
    if (v.file == (m.base_dir / "manifest.json").generic_string()) v.file = manifest_path.generic_string();
  }
  return report;
}

}  // namespace mtbias::dataset
