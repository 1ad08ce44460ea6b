// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#pragma once

#include <string_view>

namespace mtbias {

inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace mtbias
