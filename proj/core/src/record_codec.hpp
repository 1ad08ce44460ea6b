// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

// JSON encoders/decoders for the record streams. Decoders throw
// detail::FieldError on schema problems.

#pragma once

#include <string>
#include <utility>

#include "json_util.hpp"
#include "mtbias/dataset.hpp"

namespace mtbias::dataset::codec {

using detail::Json;

Instance instance_from_json(const Json& j);
Json instance_to_json(const Instance& x);

SampleSet sample_set_from_json(const Json& j);
Json sample_set_to_json(const SampleSet& s, bool inline_embeddings);

std::pair<std::string, EntailmentMatrix> entailment_from_json(const Json& j);

ScoreRecord score_from_json(const Json& j);
Json score_to_json(const ScoreRecord& r);

Json metric_record_to_json(const MetricRecord& r);
MetricRecord metric_record_from_json(const Json& j);

Json effect_row_to_json(const EffectTableRow& row);
EffectTableRow effect_row_from_json(const Json& j);

}  // namespace mtbias::dataset::codec
