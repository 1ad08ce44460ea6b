// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#include "mtbias/types.hpp"

#include <cmath>
#include <string>

#include "mtbias/error.hpp"

namespace mtbias {

std::string_view to_string(GenderLabel g) {
  switch (g) {
    case GenderLabel::Masculine: return "Masculine";
    case GenderLabel::Feminine: return "Feminine";
    case GenderLabel::Neutral: return "Neutral";
    case GenderLabel::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string_view to_string(CueGender g) {
  switch (g) {
    case CueGender::F: return "F";
    case CueGender::M: return "M";
    case CueGender::N: return "N";
  }
  return "N";
}

std::string_view to_string(RoleCue r) {
  switch (r) {
    case RoleCue::SubjF: return "SubjF";
    case RoleCue::SubjM: return "SubjM";
    case RoleCue::ObjF: return "ObjF";
    case RoleCue::ObjM: return "ObjM";
    case RoleCue::None: return "None";
  }
  return "None";
}

std::optional<GenderLabel> parse_gender_label(std::string_view s) {
  if (s == "Masculine" || s == "M") return GenderLabel::Masculine;
  if (s == "Feminine" || s == "F") return GenderLabel::Feminine;
  if (s == "Neutral" || s == "N") return GenderLabel::Neutral;
  if (s == "Unknown") return GenderLabel::Unknown;
  return std::nullopt;
}

std::optional<CueGender> parse_cue_gender(std::string_view s) {
  if (s == "F") return CueGender::F;
  if (s == "M") return CueGender::M;
  if (s == "N") return CueGender::N;
  return std::nullopt;
}

std::optional<RoleCue> parse_role_cue(std::string_view s) {
  if (s == "SubjF") return RoleCue::SubjF;
  if (s == "SubjM") return RoleCue::SubjM;
  if (s == "ObjF") return RoleCue::ObjF;
  if (s == "ObjM") return RoleCue::ObjM;
  if (s == "None") return RoleCue::None;
  return std::nullopt;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Shannon: return "Shannon";
    case Method::SE: return "SE";
    case Method::S3E: return "S3E";
    case Method::GE: return "GE";
  }
  return "SE";
}

std::optional<Method> parse_method(std::string_view s) {
  if (s == "Shannon" || s == "shannon") return Method::Shannon;
  if (s == "SE" || s == "se") return Method::SE;
  if (s == "S3E" || s == "s3e") return Method::S3E;
  if (s == "GE" || s == "ge") return Method::GE;
  return std::nullopt;
}

SquareMatrix::SquareMatrix(std::size_t n, std::vector<double> row_major)
    : n_(n), data_(std::move(row_major)) {
  if (data_.size() != n * n) {
    throw ValidationError("matrix payload has " + std::to_string(data_.size()) +
                          " entries, expected " + std::to_string(n * n));
  }
}

bool SampleSet::has_embeddings() const noexcept {
  if (samples.empty()) return false;
  for (const auto& s : samples) {
    if (s.embedding.empty()) return false;
  }
  return true;
}

void validate_sample_set(const SampleSet& set) {
  const std::string where = "sample set '" + set.instance_id + "'";
  if (set.samples.empty()) throw ValidationError(where + ": no samples");
  std::size_t dim = 0;
  bool any_embedding = false;
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    const Sample& s = set.samples[i];
    if (!std::isfinite(s.log_prob) || s.log_prob > 0.0) {
      throw ValidationError(where + ": sample " + std::to_string(i) +
                            " log_prob must be finite and <= 0");
    }
    if (s.embedding.empty()) continue;
    if (!any_embedding) {
      dim = s.embedding.size();
      any_embedding = true;
    } else if (s.embedding.size() != dim) {
      throw ValidationError(where + ": sample " + std::to_string(i) +
                            " embedding dimension differs from the first sample");
    }
    double norm2 = 0.0;
    for (double v : s.embedding) {
      if (!std::isfinite(v)) {
        throw ValidationError(where + ": sample " + std::to_string(i) + " embedding not finite");
      }
      norm2 += v * v;
    }
    if (norm2 <= 0.0) {
      throw ValidationError(where + ": sample " + std::to_string(i) + " embedding has zero norm");
    }
  }
  if (any_embedding && !set.has_embeddings()) {
    throw ValidationError(where + ": embeddings present on some samples only");
  }
  if (set.entailment) {
    const auto& m = *set.entailment;
    if (m.size() != set.samples.size()) {
      throw ValidationError(where + ": entailment matrix is " + std::to_string(m.size()) + "x" +
                            std::to_string(m.size()) + " for " +
                            std::to_string(set.samples.size()) + " samples");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m(i, i) != 1.0) throw ValidationError(where + ": entailment diagonal must be 1");
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (!(m(i, j) >= 0.0 && m(i, j) <= 1.0)) {
          throw ValidationError(where + ": entailment entry outside [0,1]");
        }
      }
    }
  }
}

void validate_assignment(const ClusterAssignment& assignment) {
  if (assignment.cluster_of.empty()) throw ValidationError("empty cluster assignment");
  std::vector<bool> seen(assignment.num_clusters, false);
  for (std::size_t c : assignment.cluster_of) {
    if (c >= assignment.num_clusters) {
      throw ValidationError("cluster index " + std::to_string(c) + " out of range");
    }
    seen[c] = true;
  }
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) throw ValidationError("cluster " + std::to_string(c) + " has no members");
  }
}

std::vector<std::string> instance_violations(const Instance& x) {
  std::vector<std::string> out;
  if (x.instance_id.empty()) out.emplace_back("instance_id is empty");
  if (x.ambiguous != (x.pronoun_gender == CueGender::N)) {
    out.emplace_back("ambiguous must be true iff pronoun_gender is N");
  }
  if (x.ambiguous && x.gold_gender) out.emplace_back("ambiguous instance carries gold_gender");
  if (!x.ambiguous && !x.gold_gender) out.emplace_back("unambiguous instance lacks gold_gender");
  if (x.gold_gender && *x.gold_gender == CueGender::N) out.emplace_back("gold_gender must be M or F");
  if (x.focus_span.begin >= x.focus_span.end || x.focus_span.end > x.source_text.size()) {
    out.emplace_back("focus_span outside source_text");
  } else if (!x.focus_noun.empty() &&
             x.source_text.compare(x.focus_span.begin, x.focus_span.end - x.focus_span.begin,
                                   x.focus_noun) != 0) {
    out.emplace_back("focus_span does not cover focus_noun");
  }
  if (x.name_span) {
    if (x.name_span->begin >= x.name_span->end || x.name_span->end > x.source_text.size()) {
      out.emplace_back("name_span outside source_text");
    }
    if (!x.cues.names_present) out.emplace_back("name_span set but names_present is false");
  }
  return out;
}

}  // namespace mtbias
