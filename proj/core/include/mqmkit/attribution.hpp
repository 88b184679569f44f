/*
 * Copyright 2026 The mqmkit Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mqmkit {

// Meta-metric values (same metric, same granularity) under the three
// material modes.
struct AttributionInput {
  double v_src = 0.0;
  double v_ref = 0.0;
  double v_joint = 0.0;
};

// How the unavailable translation-only value v(empty) is stood in for.
enum class EmptyCoalition {
  // phi_s uses v_ref, phi_r uses v_src.
  Symmetric,
  // Both players use v_ref.
  RefBaseline,
};

std::string_view to_string(EmptyCoalition e);
EmptyCoalition parse_empty_coalition(std::string_view text);

struct AttributionResult {
  double phi_s = 0.0;
  double phi_r = 0.0;
  // Exact values in units of 1e-9 / 2 (inputs are quantized to 1e-9 first),
  // so the identities between the two can be checked without rounding.
  std::int64_t phi_s_half_nanos = 0;
  std::int64_t phi_r_half_nanos = 0;
  EmptyCoalition reading = EmptyCoalition::Symmetric;
  std::string approximation_note;
};

// Two-player Shapley values of source and reference information:
//   phi_s = ((v_src - e_s) + (v_joint - v_ref)) / 2
//   phi_r = ((v_ref - e_r) + (v_joint - v_src)) / 2
// with e_s, e_r the stand-ins for v(empty).
AttributionResult shapley_mt(const AttributionInput& input, EmptyCoalition reading = EmptyCoalition::Symmetric);

// Half-nano units of v_joint - (v_src + v_ref) / 2 after quantization.
std::int64_t shapley_sum_half_nanos(const AttributionInput& input);

}  // namespace mqmkit
