// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mtbias/dataset.hpp"
#include "mtbias/error.hpp"
#include "support/helpers.hpp"
#include "support/synthetic.hpp"

using namespace mtbias;
using namespace mtbias::dataset;
using mtbias::testing::Rng;
using mtbias::testing::slurp;
using mtbias::testing::spit;
using mtbias::testing::TempDir;

namespace {

std::size_t count_code(const ValidationReport& r, const std::string& code) {
  return static_cast<std::size_t>(std::count_if(r.violations.begin(), r.violations.end(),
                                                [&](const Violation& v) { return v.code == code; }));
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

Instance mechanic(CueGender g) {
  Instance x;
  const std::string pron = g == CueGender::F ? "she" : g == CueGender::M ? "he" : "they";
  x.instance_id = std::string("mech-") + std::string(to_string(g));
  x.source_text = "The mechanic called to inform someone that " + pron + " had completed the repair.";
  x.focus_noun = "mechanic";
  x.focus_span = {4, 12};
  x.pronoun_gender = g;
  x.stereotype_gender = CueGender::M;
  x.ambiguous = g == CueGender::N;
  if (!x.ambiguous) x.gold_gender = g;
  x.contrast_key = "mechanic-repair";
  x.cues.recency = g;
  x.cues.subject = g;
  return x;
}

MetricRecord random_record(Rng& rng, std::size_t i) {
  MetricRecord r;
  r.instance_id = "i" + std::to_string(1000 + i);
  r.model_id = i % 2 ? "opus" : "m2m";
  r.language = i % 3 ? "es" : "ru";
  for (Method m : kAllMethods) {
    if (rng.uniform() < 0.2) continue;
    MethodResult mr;
    mr.entropy = rng.uniform(0.0, 3.0);
    for (auto& g : mr.surprisal_by_gender) {
      if (rng.uniform() < 0.7) g = rng.uniform(0.0, 5.0);
    }
    if (rng.uniform() < 0.8) mr.i_correct = rng.uniform(0.0, 4.0) / 3.0;
    if (rng.uniform() < 0.8) mr.i_incorrect = std::exp(-rng.uniform(0.0, 30.0));
    if (mr.i_correct && mr.i_incorrect) mr.delta_i = (*mr.i_correct - *mr.i_incorrect) / 7.0;
    if (rng.uniform() < 0.9) mr.norm_h = mr.entropy / 1.2345;
    r.methods[m] = mr;
  }
  if (rng.uniform() < 0.7) {
    r.logprob_correct = -rng.uniform(1.0, 200.0);
    r.logprob_incorrect = -rng.uniform(1.0, 200.0);
    r.delta_logprob = 0.1 / 3.0;
  }
  if (rng.uniform() < 0.8) r.comet_score = rng.uniform(0.0, 100.0);
  if (rng.uniform() < 0.8) r.prediction_gender = rng.uniform() < 0.5 ? CueGender::F : CueGender::M;
  return r;
}

// What a sampler run has to emit: five instances, eight draws each, unit
// embeddings, unit-diagonal entailment and one score per reference.
fs::path write_sampler_run(const fs::path& dir, std::uint64_t seed) {
  Rng rng(seed);
  fs::create_directories(dir);
  std::vector<Instance> instances;
  for (int i = 0; i < 5; ++i) instances.push_back(mtbias::testing::random_instance(rng, "s" + std::to_string(i), i % 2 == 1));
  write_instances(instances, dir / "instances.jsonl");

  std::vector<SampleSet> sets;
  std::vector<ScoreRecord> scores;
  for (const auto& x : instances) {
    auto s = mtbias::testing::random_sample_set(rng, x, "opus", "ru", 8, 6, 0.7);
    for (auto& smp : s.samples) {
      double norm = 0.0;
      for (double v : smp.embedding) norm += v * v;
      for (double& v : smp.embedding) v /= std::sqrt(norm);
    }
    EntailmentMatrix m(8, 0.0);
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        double dot = 0.0;
        for (std::size_t d = 0; d < 6; ++d) dot += s.samples[i].embedding[d] * s.samples[j].embedding[d];
        m(i, j) = i == j ? 1.0 : std::clamp(0.5 * (1.0 + dot), 0.0, 1.0);
      }
    }
    s.entailment = m;
    sets.push_back(std::move(s));
    ScoreRecord sc{x.instance_id, "opus", "ru", {{"ref-1", 70.0}}, CueGender::M};
    if (x.ambiguous) sc.comet_scores.emplace_back("ref-2", 65.5);
    scores.push_back(std::move(sc));
  }
  write_sample_sets(sets, dir / "samples.jsonl", dir / "samples.f32", dir / "entail.jsonl");
  write_scores(scores, dir / "scores.jsonl");

  CorpusManifest manifest;
  manifest.dataset_name = "sampler-run";
  manifest.languages = {"ru"};
  manifest.models = {"opus"};
  manifest.instances = "instances.jsonl";
  manifest.samples.push_back({"opus", "ru", "samples.jsonl", fs::path("samples.f32"), fs::path("entail.jsonl")});
  manifest.scores = "scores.jsonl";
  write_manifest(manifest, dir / "manifest.json");
  return dir / "manifest.json";
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("format versions") {
  CHECK(major_version("1.0.0") == 1);
  CHECK(major_version("12.3.4") == 12);
  CHECK_FALSE(major_version("x.1"));
}

TEST_CASE("instances") {
  TempDir dir("instances");
  SUBCASE("empty file") {
    spit(dir / "empty.jsonl", "");
    CHECK(load_instances(dir / "empty.jsonl").empty());
  }
  SUBCASE("mechanic fixture round-trips") {
    std::vector<Instance> xs = {mechanic(CueGender::M), mechanic(CueGender::F), mechanic(CueGender::N)};
    xs[0].extra_fields["annotator"] = "\"a1\"";
    write_instances(xs, dir / "mech.jsonl");
    const auto back = load_instances(dir / "mech.jsonl");
    REQUIRE(back.size() == 3);
    CHECK(back == xs);
    CHECK(std::all_of(back.begin(), back.end(), [](const Instance& x) { return x.contrast_key == "mechanic-repair"; }));
  }
  SUBCASE("ambiguous with a gold gender is rejected") {
    Instance x = mechanic(CueGender::N);
    write_instances(std::vector<Instance>{x}, dir / "bad.jsonl");
    const std::string text = replace_once(slurp(dir / "bad.jsonl"), "\"gold_gender\":null", "\"gold_gender\":\"M\"");
    spit(dir / "bad.jsonl", text);
    CHECK_THROWS_AS(load_instances(dir / "bad.jsonl"), ValidationError);
  }
  SUBCASE("malformed line reports its line number") {
    write_instances(std::vector<Instance>{mechanic(CueGender::M)}, dir / "broken.jsonl");
    spit(dir / "broken.jsonl", slurp(dir / "broken.jsonl") + "{not json\n");
    try {
      load_instances(dir / "broken.jsonl");
      FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("broken.jsonl:3") != std::string::npos);
    }
  }
  SUBCASE("unsupported major version") {
    spit(dir / "v2.jsonl", "{\"format_version\":\"2.0.0\",\"kind\":\"instances\"}\n");
    CHECK_THROWS_AS(load_instances(dir / "v2.jsonl"), ValidationError);
  }
}

TEST_CASE("sample sets") {
  TempDir dir("samples");
  Rng rng(51);
  std::vector<SampleSet> sets;
  for (int k = 0; k < 3; ++k) {
    const Instance x = mtbias::testing::random_instance(rng, "s" + std::to_string(k), k == 2);
    sets.push_back(mtbias::testing::random_sample_set(rng, x, "opus", "es", k == 0 ? 128 : 5, 4, 0.7));
  }

  SUBCASE("sidecars round-trip through float32") {
    write_sample_sets(sets, dir / "s.jsonl", dir / "s.f32", dir / "e.jsonl");
    const auto back = load_sample_sets(dir / "s.jsonl", dir / "s.f32", dir / "e.jsonl");
    REQUIRE(back.size() == 3);
    CHECK(back[0].size() == 128);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(back[k].instance_id == sets[k].instance_id);
      CHECK(back[k].entailment == sets[k].entailment);
      for (std::size_t i = 0; i < sets[k].size(); ++i) {
        CHECK(back[k].samples[i].log_prob == sets[k].samples[i].log_prob);
        CHECK(back[k].samples[i].gender_label == sets[k].samples[i].gender_label);
        for (std::size_t d = 0; d < 4; ++d) {
          CHECK(back[k].samples[i].embedding[d] ==
                static_cast<double>(static_cast<float>(sets[k].samples[i].embedding[d])));
        }
      }
    }
    const auto one = load_sample_set(dir / "s.jsonl", "s1", dir / "s.f32", dir / "e.jsonl");
    CHECK(one.size() == 5);
    CHECK(one.samples[0].embedding == back[1].samples[0].embedding);
    CHECK_THROWS_AS(load_sample_set(dir / "s.jsonl", "nope"), ValidationError);
  }
  SUBCASE("inline embeddings keep full precision") {
    write_sample_sets(sets, dir / "inline.jsonl");
    const auto back = load_sample_sets(dir / "inline.jsonl");
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(back[k].samples == sets[k].samples);
      CHECK_FALSE(back[k].entailment);
    }
  }
  SUBCASE("positive log-probability is rejected") {
    sets[1].samples[0].log_prob = -0.5;
    write_sample_sets(sets, dir / "lp.jsonl");
    spit(dir / "lp.jsonl", replace_once(slurp(dir / "lp.jsonl"), "\"log_prob\":-0.5", "\"log_prob\":0.5"));
    CHECK_THROWS_AS(load_sample_sets(dir / "lp.jsonl"), ValidationError);
  }
  SUBCASE("sidecar with the wrong row count") {
    write_sample_sets(sets, dir / "s.jsonl", dir / "s.f32");
    EmbeddingTable t = read_embedding_sidecar(dir / "s.f32");
    CHECK(t.rows == 128 + 5 + 5);
    CHECK(t.dim == 4);
    t.rows -= 1;
    t.values.resize(t.rows * t.dim);
    write_embedding_sidecar(t, dir / "short.f32");
    CHECK_THROWS_AS(load_sample_sets(dir / "s.jsonl", dir / "short.f32"), ValidationError);
  }
}

TEST_CASE("scores and metric records") {
  TempDir dir("records");
  SUBCASE("scores round-trip") {
    const std::vector<ScoreRecord> scores = {{"a", "opus", "es", {{"ref-m", 74.2}, {"ref-f", 76.9}}, CueGender::F},
                                             {"b", "opus", "es", {{"ref", 80.0}}, std::nullopt}};
    write_scores(scores, dir / "scores.jsonl");
    CHECK(load_scores(dir / "scores.jsonl") == scores);
  }
  SUBCASE("empty record list is header only") {
    write_metric_records(std::vector<MetricRecord>{}, dir / "m.jsonl");
    const std::string text = slurp(dir / "m.jsonl");
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    CHECK(text.find("format_version") != std::string::npos);
    CHECK(load_metric_records(dir / "m.jsonl").empty());
  }
  SUBCASE("one hundred records round-trip losslessly and sorted") {
    Rng rng(53);
    std::vector<MetricRecord> recs;
    for (std::size_t i = 0; i < 100; ++i) recs.push_back(random_record(rng, 99 - i));
    write_metric_records(recs, dir / "m.jsonl");
    const auto back = load_metric_records(dir / "m.jsonl");
    auto sorted = recs;
    std::sort(sorted.begin(), sorted.end(), [](const MetricRecord& a, const MetricRecord& b) {
      return std::tie(a.instance_id, a.model_id, a.language) < std::tie(b.instance_id, b.model_id, b.language);
    });
    CHECK(back == sorted);

    write_metric_records(back, dir / "again.jsonl");
    CHECK(slurp(dir / "again.jsonl") == slurp(dir / "m.jsonl"));
    write_metric_records_csv(back, dir / "m.csv");
    const std::string csv = slurp(dir / "m.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 101);
  }
  SUBCASE("effect tables round-trip") {
    std::vector<EffectTableRow> rows;
    rows.push_back({"opus", "es", Method::S3E, "norm_h", {"Names", "name", "no name", 0.3, 1e-9, true, false, 200, 200}});
    rows.push_back({"opus", "es", Method::GE, "h", {"Recency", "F", "N", -0.01, std::nullopt, false, false, 1, 40}});
    write_effect_tables(rows, dir / "e.jsonl");
    CHECK(load_effect_tables(dir / "e.jsonl") == rows);
  }
}

TEST_CASE("manifest and corpus validation") {
  TempDir dir("validate");
  const auto manifest = mtbias::testing::write_fixture_corpus(dir.path(), {});

  SUBCASE("manifest round-trip") {
    const auto m = load_manifest(manifest);
    CHECK(m.models == std::vector<std::string>{"m2m", "opus"});
    CHECK(m.samples.size() == 4);
    CHECK(m.base_dir == dir.path());
  }
  SUBCASE("consistent fixture") {
    const auto report = validate_corpus(manifest);
    for (const auto& v : report.violations) MESSAGE(v.code << ": " << v.message);
    CHECK(report.violations.empty());
    CHECK(report.ok(true));
  }
  SUBCASE("missing coverage") {
    const fs::path samples = dir / "samples_opus_es.jsonl";
    std::string text = slurp(samples);
    // Drop the last sample set; the sidecars then also disagree, which is reported separately.
    text.erase(text.rfind('\n', text.size() - 2) + 1);
    spit(samples, text);
    const auto report = validate_corpus(manifest);
    CHECK(count_code(report, "missing-coverage") == 1);
    CHECK_FALSE(report.ok());
  }
  SUBCASE("single reference for an ambiguous instance warns") {
    auto scores = load_scores(dir / "scores.jsonl");
    const auto it = std::find_if(scores.begin(), scores.end(),
                                 [](const ScoreRecord& s) { return s.comet_scores.size() == 2; });
    REQUIRE(it != scores.end());
    it->comet_scores.pop_back();
    write_scores(scores, dir / "scores.jsonl");
    const auto report = validate_corpus(manifest);
    CHECK(report.errors() == 0);
    CHECK(count_code(report, "multi-reference-required") == 1);
    CHECK(report.ok(false));
    CHECK_FALSE(report.ok(true));
  }
  SUBCASE("unreadable file is a report entry") {
    fs::remove(dir / "scores.jsonl");
    const auto report = validate_corpus(manifest);
    CHECK(report.errors() >= 1);
  }
  SUBCASE("unparseable manifest") {
    spit(dir / "bad.json", "{");
    const auto report = validate_corpus(dir / "bad.json");
    CHECK(report.errors() == 1);
  }
}

TEST_CASE("sampler contract: a five-instance run validates cleanly and reruns identically") {
  TempDir dir("sampler");
  const auto a = write_sampler_run(dir / "a", 99);
  const auto b = write_sampler_run(dir / "b", 99);
  const auto report = validate_corpus(a);
  for (const auto& v : report.violations) MESSAGE(v.code << ": " << v.message);
  CHECK(report.violations.empty());

  const auto manifest = load_manifest(a);
  const auto sets = load_sample_sets(manifest.resolve("samples.jsonl"), manifest.resolve("samples.f32"),
                                     manifest.resolve("entail.jsonl"));
  REQUIRE(sets.size() == 5);
  for (const auto& s : sets) {
    CHECK(s.size() == 8);
    REQUIRE(s.entailment);
    for (std::size_t i = 0; i < 8; ++i) CHECK((*s.entailment)(i, i) == 1.0);
  }
  CHECK(slurp(dir / "a" / "samples.jsonl") == slurp(dir / "b" / "samples.jsonl"));
  CHECK(slurp(dir / "a" / "samples.f32") == slurp(dir / "b" / "samples.f32"));
}

}  // TEST_SUITE
