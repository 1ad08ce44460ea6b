// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#include <doctest.h>

#include <cmath>

#include "mtbias/error.hpp"
#include "mtbias/pipeline.hpp"
#include "support/helpers.hpp"
#include "support/synthetic.hpp"

using namespace mtbias;
using namespace mtbias::pipeline;
using mtbias::testing::TempDir;

namespace {

std::map<std::string, Instance> load_instance_map(const fs::path& manifest) {
  const auto m = dataset::load_manifest(manifest);
  std::map<std::string, Instance> out;
  for (auto& x : dataset::load_instances(m.resolve(m.instances))) out.emplace(x.instance_id, x);
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config validation") {
  RunConfig c;
  CHECK_NOTHROW(validate_config(c));
  c.bins = 1;
  CHECK_THROWS_AS(validate_config(c), ValidationError);
  c = {};
  c.entailment_threshold = 1.0;
  CHECK_THROWS_AS(validate_config(c), ValidationError);
  c = {};
  c.methods.clear();
  CHECK_THROWS_AS(validate_config(c), ValidationError);
  c = {};
  c.alpha.reset();
  c.alpha_grid = {1.0, -2.0};
  CHECK_THROWS_AS(validate_config(c), ValidationError);
}

TEST_CASE("cue levels") {
  Instance x;
  x.pronoun_gender = CueGender::F;
  x.ambiguous = false;
  x.cues.ic_role = RoleCue::ObjM;
  x.default_masculine = true;
  CHECK(cue_level(x, "Names", "es") == "no name");
  CHECK(cue_level(x, "ImplicitCausality", "es") == std::string(to_string(RoleCue::ObjM)));
  CHECK(cue_level(x, "Pronoun", "es") == "F");
  CHECK(cue_level(x, "Ambiguity", "es") == "unambiguous");
  CHECK_FALSE(cue_level(x, "DefaultM", "es"));
  CHECK(cue_level(x, "DefaultM", "ru") == "default");
  CHECK_THROWS_AS(cue_level(x, "Weather", "es"), ValidationError);
  CHECK(cue_specs().size() == 8);
}

TEST_CASE("compute on the fixture corpus") {
  TempDir dir("compute");
  const auto manifest_path = mtbias::testing::write_fixture_corpus(dir.path(), {});
  const auto manifest = dataset::load_manifest(manifest_path);
  const auto instances = load_instance_map(manifest_path);

  SUBCASE("gender entropy only") {
    RunConfig c;
    c.methods = {Method::GE};
    const auto out = compute_metrics(manifest, c);
    CHECK(out.records.size() == instances.size() * 4);
    for (const auto& r : out.records) {
      CHECK(r.methods.size() == 1);
      CHECK(r.methods.count(Method::GE) == 1);
    }
    CHECK(out.skipped.empty());
    CHECK(out.summaries.size() == 4);
  }
  SUBCASE("all methods, norm-H averages to one per group") {
    RunConfig c;
    c.methods = {Method::Shannon, Method::SE, Method::S3E, Method::GE};
    const auto out = compute_metrics(manifest, c);
    std::map<std::tuple<std::string, std::string, std::string, Method>, std::vector<double>> groups;
    for (const auto& r : out.records) {
      for (const auto& [m, res] : r.methods) {
        CHECK(res.entropy >= 0.0);
        if (res.norm_h) groups[{r.model_id, r.language, instances.at(r.instance_id).contrast_key, m}].push_back(*res.norm_h);
      }
      const auto& x = instances.at(r.instance_id);
      if (x.ambiguous) {
        CHECK_FALSE(r.delta_logprob);
        CHECK_FALSE(r.methods.at(Method::GE).delta_i);
      }
      CHECK(r.comet_score.has_value());
    }
    CHECK_FALSE(groups.empty());
    for (const auto& [key, vals] : groups) {
      double sum = 0.0;
      for (double v : vals) sum += v;
      CHECK(std::abs(sum / static_cast<double>(vals.size()) - 1.0) < 1e-9);
    }
  }
  SUBCASE("tuned alpha is taken from the grid") {
    RunConfig c;
    c.methods = {Method::S3E};
    c.alpha.reset();
    const auto out = compute_metrics(manifest, c);
    REQUIRE(out.tuned_alpha);
    CHECK(std::find(c.alpha_grid.begin(), c.alpha_grid.end(), *out.tuned_alpha) != c.alpha_grid.end());
    CHECK(out.alpha_used == *out.tuned_alpha);
  }
  SUBCASE("worker count does not change results") {
    RunConfig c;
    c.methods = {Method::Shannon, Method::SE, Method::S3E, Method::GE};
    const auto one = compute_metrics(manifest, c);
    c.jobs = 4;
    const auto four = compute_metrics(manifest, c);
    CHECK(one.records == four.records);
  }
}

TEST_CASE("missing optional inputs skip a method") {
  TempDir dir("skip");
  mtbias::testing::FixtureOptions o;
  o.entailment = false;
  o.embeddings = false;
  const auto manifest = dataset::load_manifest(mtbias::testing::write_fixture_corpus(dir.path(), o));
  RunConfig c;
  const auto out = compute_metrics(manifest, c);
  CHECK(out.skipped.size() == 8);
  for (const auto& r : out.records) {
    CHECK(r.methods.count(Method::GE) == 1);
    CHECK(r.methods.count(Method::SE) == 0);
    CHECK(r.methods.count(Method::S3E) == 0);
  }
}

TEST_CASE("effects on constant and planted data") {
  SUBCASE("constant entropy gives zero coefficients") {
    auto corpus = mtbias::testing::planted_names_corpus(3, 30, 0.0, 0.0);
    const auto rows = analyze_effects(corpus.records, corpus.instances, "h");
    CHECK_FALSE(rows.empty());
    for (const auto& r : rows) {
      CHECK(r.estimate.coefficient == 0.0);
      CHECK_FALSE(r.estimate.significant);
    }
  }
  SUBCASE("a planted names shift is recovered") {
    auto corpus = mtbias::testing::planted_names_corpus(5, 100, 0.3, 0.05);
    const auto rows = analyze_effects(corpus.records, corpus.instances, "h");
    const auto it = std::find_if(rows.begin(), rows.end(),
                                 [](const dataset::EffectTableRow& r) { return r.estimate.cue == "Names"; });
    REQUIRE(it != rows.end());
    CHECK(it->estimate.level == "name");
    CHECK(it->estimate.reference_level == "no name");
    CHECK(it->estimate.coefficient == doctest::Approx(0.3).epsilon(0.1));
    CHECK(it->estimate.p_value.value() < 1e-3);
  }
  SUBCASE("reference override") {
    auto corpus = mtbias::testing::planted_names_corpus(5, 30, 0.3, 0.05);
    const auto rows = analyze_effects(corpus.records, corpus.instances, "h", {{"Names", "name"}});
    const auto it = std::find_if(rows.begin(), rows.end(),
                                 [](const dataset::EffectTableRow& r) { return r.estimate.cue == "Names"; });
    REQUIRE(it != rows.end());
    CHECK(it->estimate.level == "no name");
    CHECK(it->estimate.coefficient < 0.0);
  }
  SUBCASE("norm_h rows skip records without a value") {
    auto corpus = mtbias::testing::planted_names_corpus(5, 30, 0.3, 0.05);
    CHECK(analyze_effects(corpus.records, corpus.instances, "norm_h").empty());
    CHECK_THROWS_AS(analyze_effects(corpus.records, corpus.instances, "delta"), ValidationError);
  }
}

TEST_CASE("cross-system correlations") {
  std::vector<PairSummary> s(4);
  const double acc[] = {60, 70, 80, 90};
  const double di[] = {0.0, -0.05, -0.1, -0.2};
  for (int i = 0; i < 4; ++i) {
    s[i].model_id = "m" + std::to_string(i);
    s[i].language = "es";
    s[i].gender_accuracy = acc[i];
    s[i].methods[Method::S3E].delta_i_mean = di[i];
  }
  const auto rows = analyze_correlations(s);
  const auto it = std::find_if(rows.begin(), rows.end(), [](const CorrelationRow& r) { return r.y_metric == "delta_i_S3E"; });
  REQUIRE(it != rows.end());
  CHECK(it->n == 4);
  CHECK(it->spearman.value() == doctest::Approx(-1.0));
  CHECK(it->kendall.value() == doctest::Approx(-1.0));
  const auto se = std::find_if(rows.begin(), rows.end(), [](const CorrelationRow& r) { return r.y_metric == "delta_i_SE"; });
  REQUIRE(se != rows.end());
  CHECK(se->n == 0);
  CHECK_FALSE(se->spearman);
}

}  // TEST_SUITE
