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

#include "mqmkit/attribution.hpp"

#include <cmath>

#include "mqmkit/error.hpp"
#include "mqmkit/text.hpp"

namespace mqmkit {

namespace {

constexpr double kNanosPerUnit = 1e9;
// Inputs above this magnitude would overflow the exact representation.
constexpr double kMaxMagnitude = 1e9;

std::int64_t quantize(double v) {
  if (!std::isfinite(v) || std::abs(v) > kMaxMagnitude)
    throw PreconditionError("attribution inputs must be finite and at most 1e9 in magnitude");
  return std::llround(v * kNanosPerUnit);
}

double from_half_nanos(std::int64_t h) { return static_cast<double>(h) / (2.0 * kNanosPerUnit); }

}  // namespace

std::string_view to_string(EmptyCoalition e) {
  return e == EmptyCoalition::Symmetric ? "symmetric" : "ref-baseline";
}

EmptyCoalition parse_empty_coalition(std::string_view text) {
  const std::string t = text::to_lower(text::trim(text));
  if (t == "symmetric") return EmptyCoalition::Symmetric;
  if (t == "ref-baseline" || t == "ref_baseline" || t == "ref") return EmptyCoalition::RefBaseline;
  throw UsageError("unknown empty-coalition reading '" + std::string(text) + "' (expected symmetric or ref-baseline)");
}

AttributionResult shapley_mt(const AttributionInput& input, EmptyCoalition reading) {
  const std::int64_t src = quantize(input.v_src);
  const std::int64_t ref = quantize(input.v_ref);
  const std::int64_t joint = quantize(input.v_joint);

  const std::int64_t empty_for_s = ref;
  const std::int64_t empty_for_r = reading == EmptyCoalition::Symmetric ? src : ref;

  AttributionResult r;
  r.reading = reading;
  r.phi_s_half_nanos = (src - empty_for_s) + (joint - ref);
  r.phi_r_half_nanos = (ref - empty_for_r) + (joint - src);
  r.phi_s = from_half_nanos(r.phi_s_half_nanos);
  r.phi_r = from_half_nanos(r.phi_r_half_nanos);
  r.approximation_note = reading == EmptyCoalition::Symmetric
                             ? "v(empty) approximated by v_ref for phi_s and by v_src for phi_r"
                             : "v(empty) approximated by v_ref for both phi_s and phi_r";
  return r;
}

std::int64_t shapley_sum_half_nanos(const AttributionInput& input) {
  return 2 * quantize(input.v_joint) - quantize(input.v_src) - quantize(input.v_ref);
}

}  // namespace mqmkit
