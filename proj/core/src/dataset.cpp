// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#include "mtbias/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json_util.hpp"
#include "mtbias/error.hpp"
#include "record_codec.hpp"

namespace mtbias::dataset {

using detail::FieldError;
using detail::get_bool;
using detail::get_number;
using detail::get_optional_number;
using detail::get_string;
using detail::Json;
using detail::require;

std::optional<int> major_version(std::string_view semver) {
  const auto dot = semver.find('.');
  const std::string_view head = semver.substr(0, dot);
  if (head.empty()) return std::nullopt;
  int v = 0;
  for (char c : head) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

namespace codec {

namespace {

CueGender cue_gender_field(const Json& j, std::string_view key) {
  const auto s = get_string(j, key);
  const auto g = parse_cue_gender(s);
  if (!g) throw FieldError("field '" + std::string(key) + "' must be F, M or N (got '" + s + "')");
  return *g;
}

RoleCue role_field(const Json& j, std::string_view key) {
  const auto s = get_string(j, key);
  const auto r = parse_role_cue(s);
  if (!r) {
    throw FieldError("field '" + std::string(key) +
                     "' must be SubjF, SubjM, ObjF, ObjM or None (got '" + s + "')");
  }
  return *r;
}

TextSpan span_field(const Json& j, std::string_view key) {
  const Json& v = require(j, key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_unsigned() || !v[1].is_number_unsigned()) {
    throw FieldError("field '" + std::string(key) + "' must be [begin, end] byte offsets");
  }
  return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
}

const std::set<std::string, std::less<>> kInstanceFields = {
    "instance_id", "source_text",  "focus_noun",  "focus_span",        "name_span",
    "pronoun_gender", "stereotype_gender", "cues", "ambiguous", "contrast_key",
    "gold_gender", "default_masculine"};

}  // namespace

Instance instance_from_json(const Json& j) {
  Instance x;
  x.instance_id = get_string(j, "instance_id");
  x.source_text = get_string(j, "source_text");
  x.focus_noun = get_string(j, "focus_noun");
  x.focus_span = span_field(j, "focus_span");
  if (const auto it = j.find("name_span"); it != j.end() && !it->is_null()) {
    x.name_span = span_field(j, "name_span");
  }
  x.pronoun_gender = cue_gender_field(j, "pronoun_gender");
  x.stereotype_gender = cue_gender_field(j, "stereotype_gender");
  const Json& cues = require(j, "cues");
  x.cues.recency = cue_gender_field(cues, "recency");
  x.cues.ic_role = role_field(cues, "ic_role");
  x.cues.stereotype_role = role_field(cues, "stereotype_role");
  x.cues.subject = cue_gender_field(cues, "subject");
  x.cues.names_present = get_bool(cues, "names_present");
  x.ambiguous = get_bool(j, "ambiguous");
  if (const auto it = j.find("contrast_key"); it != j.end() && !it->is_null()) {
    x.contrast_key = get_string(j, "contrast_key");
  }
  if (const auto it = j.find("gold_gender"); it != j.end() && !it->is_null()) {
    x.gold_gender = cue_gender_field(j, "gold_gender");
  }
  if (const auto it = j.find("default_masculine"); it != j.end() && !it->is_null()) {
    x.default_masculine = get_bool(j, "default_masculine");
  }
  for (const auto& [key, value] : j.items()) {
    if (!kInstanceFields.contains(key)) x.extra_fields[key] = value.dump();
  }
  return x;
}

Json instance_to_json(const Instance& x) {
  Json j;
  j["instance_id"] = x.instance_id;
  j["source_text"] = x.source_text;
  j["focus_noun"] = x.focus_noun;
  j["focus_span"] = {x.focus_span.begin, x.focus_span.end};
  if (x.name_span) j["name_span"] = {x.name_span->begin, x.name_span->end};
  j["pronoun_gender"] = to_string(x.pronoun_gender);
  j["stereotype_gender"] = to_string(x.stereotype_gender);
  j["cues"] = {{"recency", to_string(x.cues.recency)},
               {"ic_role", to_string(x.cues.ic_role)},
               {"stereotype_role", to_string(x.cues.stereotype_role)},
               {"subject", to_string(x.cues.subject)},
               {"names_present", x.cues.names_present}};
  j["ambiguous"] = x.ambiguous;
  j["contrast_key"] = x.contrast_key;
  j["gold_gender"] = x.gold_gender ? Json(to_string(*x.gold_gender)) : Json(nullptr);
  j["default_masculine"] = x.default_masculine;
  for (const auto& [key, raw] : x.extra_fields) j[key] = Json::parse(raw);
  return j;
}

SampleSet sample_set_from_json(const Json& j) {
  SampleSet s;
  s.instance_id = get_string(j, "instance_id");
  s.model_id = get_string(j, "model_id");
  s.language = get_string(j, "language");
  if (const auto it = j.find("sampling_meta"); it != j.end() && !it->is_null()) {
    const Json& m = *it;
    if (const auto n = get_optional_number(m, "num_samples")) {
      if (*n < 0) throw FieldError("sampling_meta.num_samples must be non-negative");
      s.sampling_meta.num_samples = static_cast<std::size_t>(*n);
    }
    if (const auto e = get_optional_number(m, "epsilon")) s.sampling_meta.epsilon = *e;
    if (const auto sd = m.find("seed"); sd != m.end() && sd->is_number_integer()) {
      s.sampling_meta.seed = sd->get<std::int64_t>();
    }
  }
  const Json& arr = require(j, "samples");
  if (!arr.is_array()) throw FieldError("field 'samples' must be an array");
  s.samples.reserve(arr.size());
  for (const Json& e : arr) {
    Sample smp;
    smp.text = get_string(e, "text");
    const Json& lp = require(e, "log_prob");
    if (!lp.is_number()) throw FieldError("field 'log_prob' must be a number");
    smp.log_prob = lp.get<double>();
    const auto label = get_string(e, "gender_label");
    const auto g = parse_gender_label(label);
    if (!g) throw FieldError("unknown gender_label '" + label + "'");
    smp.gender_label = *g;
    if (const auto it = e.find("embedding"); it != e.end() && !it->is_null()) {
      if (!it->is_array()) throw FieldError("field 'embedding' must be an array");
      smp.embedding.reserve(it->size());
      for (const Json& v : *it) {
        if (!v.is_number()) throw FieldError("embedding entries must be numbers");
        smp.embedding.push_back(v.get<double>());
      }
    }
    s.samples.push_back(std::move(smp));
  }
  return s;
}

Json sample_set_to_json(const SampleSet& s, bool inline_embeddings) {
  Json j;
  j["instance_id"] = s.instance_id;
  j["model_id"] = s.model_id;
  j["language"] = s.language;
  j["sampling_meta"] = {{"num_samples", s.sampling_meta.num_samples},
                        {"epsilon", s.sampling_meta.epsilon},
                        {"seed", s.sampling_meta.seed}};
  Json arr = Json::array();
  for (const auto& smp : s.samples) {
    Json e;
    e["text"] = smp.text;
    e["log_prob"] = smp.log_prob;
    e["gender_label"] = to_string(smp.gender_label);
    if (inline_embeddings && !smp.embedding.empty()) e["embedding"] = smp.embedding;
    arr.push_back(std::move(e));
  }
  j["samples"] = std::move(arr);
  return j;
}

std::pair<std::string, EntailmentMatrix> entailment_from_json(const Json& j) {
  auto id = get_string(j, "instance_id");
  const double n_raw = get_number(j, "n");
  if (n_raw < 0 || n_raw != std::floor(n_raw)) throw FieldError("field 'n' must be a count");
  const auto n = static_cast<std::size_t>(n_raw);
  const Json& scores = require(j, "scores");
  if (!scores.is_array()) throw FieldError("field 'scores' must be an array");
  if (scores.size() != n * n) {
    throw FieldError("entailment for '" + id + "' has " + std::to_string(scores.size()) +
                     " scores, expected " + std::to_string(n * n));
  }
  std::vector<double> data;
  data.reserve(scores.size());
  for (const Json& v : scores) {
    if (!v.is_number()) throw FieldError("entailment scores must be numbers");
    data.push_back(v.get<double>());
  }
  return {std::move(id), EntailmentMatrix(n, std::move(data))};
}

ScoreRecord score_from_json(const Json& j) {
  ScoreRecord r;
  r.instance_id = get_string(j, "instance_id");
  r.model_id = get_string(j, "model_id");
  r.language = get_string(j, "language");
  const Json& arr = require(j, "comet_scores");
  if (!arr.is_array()) throw FieldError("field 'comet_scores' must be an array");
  for (const Json& e : arr) r.comet_scores.emplace_back(get_string(e, "reference_id"), get_number(e, "score"));
  if (const auto it = j.find("prediction_gender"); it != j.end() && !it->is_null()) {
    r.prediction_gender = cue_gender_field(j, "prediction_gender");
  }
  return r;
}

Json score_to_json(const ScoreRecord& r) {
  Json j;
  j["instance_id"] = r.instance_id;
  j["model_id"] = r.model_id;
  j["language"] = r.language;
  Json arr = Json::array();
  for (const auto& [ref, score] : r.comet_scores) arr.push_back({{"reference_id", ref}, {"score", score}});
  j["comet_scores"] = std::move(arr);
  j["prediction_gender"] = r.prediction_gender ? Json(to_string(*r.prediction_gender)) : Json(nullptr);
  return j;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

Json metric_record_to_json(const MetricRecord& r) {
  using detail::optional_number;
  Json j;
  j["instance_id"] = r.instance_id;
  j["model_id"] = r.model_id;
  j["language"] = r.language;
  for (Method m : kAllMethods) {
    const auto it = r.methods.find(m);
    if (it == r.methods.end()) continue;
    const std::string s = lower(to_string(m));
    const MethodResult& v = it->second;
    j["h_" + s] = v.entropy;
    j["norm_h_" + s] = optional_number(v.norm_h);
    j["i_correct_" + s] = optional_number(v.i_correct);
    j["i_incorrect_" + s] = optional_number(v.i_incorrect);
    j["delta_i_" + s] = optional_number(v.delta_i);
    Json by_gender;
    for (std::size_t g = 0; g < kNumGenderLabels; ++g) {
      by_gender[std::string(to_string(static_cast<GenderLabel>(g)))] = optional_number(v.surprisal_by_gender[g]);
    }
    j["surprisal_by_gender_" + s] = std::move(by_gender);
  }
  j["logprob_correct"] = optional_number(r.logprob_correct);
  j["logprob_incorrect"] = optional_number(r.logprob_incorrect);
  j["delta_logprob"] = optional_number(r.delta_logprob);
  j["comet_score"] = optional_number(r.comet_score);
  j["prediction_gender"] = r.prediction_gender ? Json(to_string(*r.prediction_gender)) : Json(nullptr);
  return j;
}

MetricRecord metric_record_from_json(const Json& j) {
  MetricRecord r;
  r.instance_id = get_string(j, "instance_id");
  r.model_id = get_string(j, "model_id");
  r.language = get_string(j, "language");
  for (Method m : kAllMethods) {
    const std::string s = lower(to_string(m));
    if (!j.contains("h_" + s)) continue;
    MethodResult v;
    v.entropy = get_number(j, "h_" + s);
    v.norm_h = get_optional_number(j, "norm_h_" + s);
    v.i_correct = get_optional_number(j, "i_correct_" + s);
    v.i_incorrect = get_optional_number(j, "i_incorrect_" + s);
    v.delta_i = get_optional_number(j, "delta_i_" + s);
    if (const auto it = j.find("surprisal_by_gender_" + s); it != j.end() && it->is_object()) {
      for (std::size_t g = 0; g < kNumGenderLabels; ++g) {
        v.surprisal_by_gender[g] = get_optional_number(*it, to_string(static_cast<GenderLabel>(g)));
      }
    }
    r.methods[m] = v;
  }
  r.logprob_correct = get_optional_number(j, "logprob_correct");
  r.logprob_incorrect = get_optional_number(j, "logprob_incorrect");
  r.delta_logprob = get_optional_number(j, "delta_logprob");
  r.comet_score = get_optional_number(j, "comet_score");
  if (const auto it = j.find("prediction_gender"); it != j.end() && !it->is_null()) {
    r.prediction_gender = cue_gender_field(j, "prediction_gender");
  }
  return r;
}

Json effect_row_to_json(const EffectTableRow& row) {
  const auto& e = row.estimate;
  Json j;
  j["model_id"] = row.model_id;
  j["language"] = row.language;
  j["method"] = to_string(row.method);
  j["dependent"] = row.dependent;
  j["cue"] = e.cue;
  j["level"] = e.level;
  j["reference_level"] = e.reference_level;
  j["coefficient"] = e.coefficient;
  j["p_value"] = detail::optional_number(e.p_value);
  j["significant"] = e.significant;
  j["degenerate"] = e.degenerate;
  j["n_level"] = e.n_level;
  j["n_reference"] = e.n_reference;
  return j;
}

EffectTableRow effect_row_from_json(const Json& j) {
  EffectTableRow row;
  row.model_id = get_string(j, "model_id");
  row.language = get_string(j, "language");
  const auto m = parse_method(get_string(j, "method"));
  if (!m) throw FieldError("unknown method");
  row.method = *m;
  row.dependent = get_string(j, "dependent");
  auto& e = row.estimate;
  e.cue = get_string(j, "cue");
  e.level = get_string(j, "level");
  e.reference_level = get_string(j, "reference_level");
  e.coefficient = get_number(j, "coefficient");
  e.p_value = get_optional_number(j, "p_value");
  e.significant = get_bool(j, "significant");
  e.degenerate = get_bool(j, "degenerate");
  e.n_level = static_cast<std::size_t>(get_number(j, "n_level"));
  e.n_reference = static_cast<std::size_t>(get_number(j, "n_reference"));
  return row;
}

}  // namespace codec

// ---------------------------------------------------------------------------
// Streams
// ---------------------------------------------------------------------------

namespace {

std::string located(const fs::path& path, std::size_t line, const std::string& msg) {
  return path.string() + ":" + std::to_string(line) + ": " + msg;
}

bool is_header(const Json& j) {
  return j.is_object() && j.contains("format_version") && !j.contains("instance_id") &&
         !j.contains("model_id");
}

void check_header(const Json& j, const fs::path& path, std::size_t line) {
  const Json& v = j["format_version"];
  const auto major = v.is_string() ? major_version(v.get<std::string>()) : std::nullopt;
  if (major != major_version(kFormatVersion)) {
    throw ValidationError(located(path, line, "unsupported format_version " + v.dump()));
  }
}

/// Parsed record lines of a JSONL stream, header checked and dropped.
std::vector<std::pair<std::size_t, Json>> parse_stream(const fs::path& path) {
  std::vector<std::pair<std::size_t, Json>> out;
  bool first = true;
  for (auto& [line, text] : detail::read_lines(path)) {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ValidationError(located(path, line, std::string("malformed JSON: ") + e.what()));
    }
    if (first && is_header(j)) {
      check_header(j, path, line);
      first = false;
      continue;
    }
    first = false;
    out.emplace_back(line, std::move(j));
  }
  return out;
}

Json header(std::string_view kind) {
  return Json{{"format_version", kFormatVersion}, {"kind", kind}};
}

template <typename T, typename Fn>
std::vector<T> decode_stream(const fs::path& path, Fn&& decode) {
  std::vector<T> out;
  std::vector<std::string> problems;
  for (auto& [line, j] : parse_stream(path)) {
    try {
      out.push_back(decode(j));
    } catch (const FieldError& e) {
      problems.push_back(located(path, line, e.what()));
    } catch (const ValidationError& e) {
      problems.push_back(located(path, line, e.what()));
    }
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += p + "\n";
    msg.pop_back();
    throw ValidationError(msg);
  }
  return out;
}

void write_stream(const fs::path& path, std::string_view kind, const std::vector<Json>& rows) {
  auto out = detail::open_for_write(path);
  out << header(kind).dump() << '\n';
  for (const auto& r : rows) out << r.dump() << '\n';
  detail::finish_write(out, path);
}

std::string join_strings(const std::vector<std::string>& xs) {
  std::string s;
  for (const auto& x : xs) s += (s.empty() ? "" : "; ") + x;
  return s;
}

}  // namespace

std::vector<Instance> load_instances(const fs::path& path) {
  return decode_stream<Instance>(path, [](const Json& j) {
    Instance x = codec::instance_from_json(j);
    if (const auto v = instance_violations(x); !v.empty()) {
      throw ValidationError("instance '" + x.instance_id + "': " + join_strings(v));
    }
    return x;
  });
}

void write_instances(std::span<const Instance> instances, const fs::path& path) {
  std::vector<Json> rows;
  for (const auto& x : instances) rows.push_back(codec::instance_to_json(x));
  write_stream(path, "instances", rows);
}

EmbeddingTable read_embedding_sidecar(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  unsigned char head[8];
  if (!in.read(reinterpret_cast<char*>(head), 8)) {
    throw ValidationError(path.string() + ": embedding sidecar shorter than its 8-byte header");
  }
  std::uint64_t rows = 0;
  for (int b = 7; b >= 0; --b) rows = (rows << 8) | head[b];
  std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EmbeddingTable t;
  t.rows = static_cast<std::size_t>(rows);
  if (payload.size() % 4 != 0) {
    throw ValidationError(path.string() + ": embedding payload is not a whole number of floats");
  }
  const std::size_t floats = payload.size() / 4;
  if (rows == 0) {
    if (floats != 0) throw ValidationError(path.string() + ": zero rows but non-empty payload");
    return t;
  }
  if (floats % rows != 0) {
    throw ValidationError(path.string() + ": " + std::to_string(floats) +
                          " floats do not divide into " + std::to_string(rows) + " rows");
  }
  t.dim = floats / rows;
  t.values.resize(floats);
  for (std::size_t k = 0; k < floats; ++k) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(payload[k * 4 + b]);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    t.values[k] = f;
  }
  return t;
}

void write_embedding_sidecar(const EmbeddingTable& table, const fs::path& path) {
  if (table.values.size() != table.rows * table.dim) {
    throw ValidationError("embedding table size does not match rows x dim");
  }
  auto out = detail::open_for_write(path);
  std::uint64_t rows = table.rows;
  for (int b = 0; b < 8; ++b) out.put(static_cast<char>((rows >> (8 * b)) & 0xff));
  for (float f : table.values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    for (int b = 0; b < 4; ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  detail::finish_write(out, path);
}

std::map<std::string, EntailmentMatrix> load_entailment(const fs::path& path) {
  std::map<std::string, EntailmentMatrix> out;
  auto pairs = decode_stream<std::pair<std::string, EntailmentMatrix>>(path, codec::entailment_from_json);
  for (auto& [id, m] : pairs) {
    if (!out.emplace(id, std::move(m)).second) {
      throw ValidationError(path.string() + ": duplicate entailment matrix for '" + id + "'");
    }
  }
  return out;
}

std::vector<SampleSet> load_sample_sets(const fs::path& path, const std::optional<fs::path>& embeddings,
                                        const std::optional<fs::path>& entailment) {
  std::vector<std::size_t> lines;
  std::vector<SampleSet> sets;
  std::vector<std::string> problems;
  for (auto& [line, j] : parse_stream(path)) {
    try {
      sets.push_back(codec::sample_set_from_json(j));
      lines.push_back(line);
    } catch (const std::exception& e) {
      problems.push_back(located(path, line, e.what()));
    }
  }
  if (!problems.empty()) throw ValidationError(join_strings(problems));

  if (embeddings) {
    const EmbeddingTable table = read_embedding_sidecar(*embeddings);
    std::size_t total = 0;
    for (const auto& s : sets) total += s.size();
    if (table.rows != total) {
      throw ValidationError(embeddings->string() + ": sidecar has " + std::to_string(table.rows) +
                            " rows for " + std::to_string(total) + " samples");
    }
    std::size_t row = 0;
    for (auto& s : sets) {
      for (auto& smp : s.samples) {
        const auto r = table.row(row++);
        smp.embedding.assign(r.begin(), r.end());
      }
    }
  }
  if (entailment) {
    auto matrices = load_entailment(*entailment);
    for (auto& s : sets) {
      if (auto it = matrices.find(s.instance_id); it != matrices.end()) s.entailment = std::move(it->second);
    }
  }
  for (std::size_t k = 0; k < sets.size(); ++k) {
    try {
      validate_sample_set(sets[k]);
    } catch (const ValidationError& e) {
      problems.push_back(located(path, lines[k], e.what()));
    }
  }
  if (!problems.empty()) throw ValidationError(join_strings(problems));
  return sets;
}

SampleSet load_sample_set(const fs::path& path, std::string_view instance_id,
                          const std::optional<fs::path>& embeddings,
                          const std::optional<fs::path>& entailment) {
  auto sets = load_sample_sets(path, embeddings, entailment);
  for (auto& s : sets) {
    if (s.instance_id == instance_id) return std::move(s);
  }
  throw ValidationError(path.string() + ": no sample set for instance '" + std::string(instance_id) + "'");
}

void write_sample_sets(std::span<const SampleSet> sets, const fs::path& path,
                       const std::optional<fs::path>& embeddings,
                       const std::optional<fs::path>& entailment) {
  std::vector<Json> rows;
  for (const auto& s : sets) rows.push_back(codec::sample_set_to_json(s, !embeddings));
  write_stream(path, "samples", rows);

  if (embeddings) {
    EmbeddingTable t;
    for (const auto& s : sets) {
      for (const auto& smp : s.samples) {
        if (t.rows == 0) t.dim = smp.embedding.size();
        if (smp.embedding.size() != t.dim) throw ValidationError("ragged embeddings cannot go to a sidecar");
        for (double v : smp.embedding) t.values.push_back(static_cast<float>(v));
        ++t.rows;
      }
    }
    write_embedding_sidecar(t, *embeddings);
  }
  if (entailment) {
    std::vector<Json> mats;
    for (const auto& s : sets) {
      if (!s.entailment) continue;
      mats.push_back(Json{{"instance_id", s.instance_id}, {"n", s.entailment->size()}, {"scores", s.entailment->data()}});
    }
    write_stream(*entailment, "entailment", mats);
  }
}

std::vector<ScoreRecord> load_scores(const fs::path& path) {
  return decode_stream<ScoreRecord>(path, codec::score_from_json);
}

void write_scores(std::span<const ScoreRecord> scores, const fs::path& path) {
  std::vector<Json> rows;
  for (const auto& r : scores) rows.push_back(codec::score_to_json(r));
  write_stream(path, "scores", rows);
}

namespace {

std::vector<MetricRecord> sorted_records(std::span<const MetricRecord> records) {
  std::vector<MetricRecord> v(records.begin(), records.end());
  std::sort(v.begin(), v.end(), [](const MetricRecord& a, const MetricRecord& b) {
    return std::tie(a.instance_id, a.model_id, a.language) < std::tie(b.instance_id, b.model_id, b.language);
  });
  return v;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_metric_records(std::span<const MetricRecord> records, const fs::path& path) {
  std::vector<Json> rows;
  for (const auto& r : sorted_records(records)) rows.push_back(codec::metric_record_to_json(r));
  write_stream(path, "metric_records", rows);
}

std::vector<MetricRecord> load_metric_records(const fs::path& path) {
  return decode_stream<MetricRecord>(path, codec::metric_record_from_json);
}

void write_metric_records_csv(std::span<const MetricRecord> records, const fs::path& path) {
  auto out = detail::open_for_write(path);
  out << "instance_id,model_id,language";
  for (Method m : kAllMethods) {
    const auto s = std::string(to_string(m));
    out << ",h_" << s << ",norm_h_" << s << ",i_correct_" << s << ",i_incorrect_" << s << ",delta_i_" << s;
  }
  out << ",logprob_correct,logprob_incorrect,delta_logprob,comet_score,prediction_gender\n";
  for (const auto& r : sorted_records(records)) {
    out << csv_field(r.instance_id) << ',' << csv_field(r.model_id) << ',' << csv_field(r.language);
    for (Method m : kAllMethods) {
      const auto it = r.methods.find(m);
      if (it == r.methods.end()) {
        out << ",,,,,";
        continue;
      }
      const auto& v = it->second;
      out << ',' << detail::format_number(v.entropy) << ',' << detail::format_optional(v.norm_h) << ','
          << detail::format_optional(v.i_correct) << ',' << detail::format_optional(v.i_incorrect) << ','
          << detail::format_optional(v.delta_i);
    }
    out << ',' << detail::format_optional(r.logprob_correct) << ','
        << detail::format_optional(r.logprob_incorrect) << ',' << detail::format_optional(r.delta_logprob)
        << ',' << detail::format_optional(r.comet_score) << ','
        << (r.prediction_gender ? to_string(*r.prediction_gender) : "") << '\n';
  }
  detail::finish_write(out, path);
}

void write_effect_tables(std::span<const EffectTableRow> rows, const fs::path& path) {
  std::vector<Json> js;
  for (const auto& r : rows) js.push_back(codec::effect_row_to_json(r));
  write_stream(path, "effects", js);
}

std::vector<EffectTableRow> load_effect_tables(const fs::path& path) {
  return decode_stream<EffectTableRow>(path, codec::effect_row_from_json);
}

void write_effect_tables_csv(std::span<const EffectTableRow> rows, const fs::path& path) {
  auto out = detail::open_for_write(path);
  out << "model_id,language,method,dependent,cue,level,reference_level,coefficient,p_value,"
         "significant,degenerate,n_level,n_reference\n";
  for (const auto& r : rows) {
    const auto& e = r.estimate;
    out << csv_field(r.model_id) << ',' << csv_field(r.language) << ',' << to_string(r.method) << ','
        << r.dependent << ',' << csv_field(e.cue) << ',' << csv_field(e.level) << ','
        << csv_field(e.reference_level) << ',' << detail::format_number(e.coefficient) << ','
        << detail::format_optional(e.p_value) << ',' << (e.significant ? "true" : "false") << ','
        << (e.degenerate ? "true" : "false") << ',' << e.n_level << ',' << e.n_reference << '\n';
  }
  detail::finish_write(out, path);
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> string_list(const Json& j, std::string_view key) {
  const Json& v = require(j, key);
  if (!v.is_array()) throw FieldError("field '" + std::string(key) + "' must be an array of strings");
  std::vector<std::string> out;
  for (const Json& e : v) {
    if (!e.is_string()) throw FieldError("field '" + std::string(key) + "' must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::optional<fs::path> optional_path(const Json& j, std::string_view key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FieldError("field '" + std::string(key) + "' must be a path string");
  return fs::path(it->get<std::string>());
}

}  // namespace

CorpusManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Json j;
  try {
    j = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON: " + e.what());
  }
  try {
    CorpusManifest m;
    m.base_dir = path.parent_path();
    m.format_version = get_string(j, "format_version");
    if (major_version(m.format_version) != major_version(kFormatVersion)) {
      throw FieldError("unsupported format_version '" + m.format_version + "'");
    }
    m.dataset_name = get_string(j, "dataset_name");
    m.languages = string_list(j, "languages");
    m.models = string_list(j, "models");
    m.instances = get_string(j, "instances");
    m.scores = optional_path(j, "scores");
    const Json& samples = require(j, "samples");
    if (!samples.is_array()) throw FieldError("field 'samples' must be an array");
    for (const Json& e : samples) {
      SamplesEntry s;
      s.model = get_string(e, "model");
      s.language = get_string(e, "language");
      s.samples = get_string(e, "path");
      s.embeddings = optional_path(e, "embeddings");
      s.entailment = optional_path(e, "entailment");
      m.samples.push_back(std::move(s));
    }
    return m;
  } catch (const FieldError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_manifest(const CorpusManifest& m, const fs::path& path) {
  Json j;
  j["format_version"] = m.format_version;
  j["dataset_name"] = m.dataset_name;
  j["languages"] = m.languages;
  j["models"] = m.models;
  j["instances"] = m.instances.generic_string();
  j["scores"] = m.scores ? Json(m.scores->generic_string()) : Json(nullptr);
  Json arr = Json::array();
  for (const auto& s : m.samples) {
    Json e{{"model", s.model}, {"language", s.language}, {"path", s.samples.generic_string()}};
    e["embeddings"] = s.embeddings ? Json(s.embeddings->generic_string()) : Json(nullptr);
    e["entailment"] = s.entailment ? Json(s.entailment->generic_string()) : Json(nullptr);
    arr.push_back(std::move(e));
  }
  j["samples"] = std::move(arr);
  auto out = detail::open_for_write(path);
  out << j.dump(2) << '\n';
  detail::finish_write(out, path);
}

}  // namespace mtbias::dataset
