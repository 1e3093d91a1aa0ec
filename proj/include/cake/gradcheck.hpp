// Copyright 2026 The cake Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <vector>

#include "cake/tape.hpp"

namespace cake {

// Central finite differences against the tape's analytic gradients, run in
// 64-bit (finite differences are unreliable in float). The builder must be
// deterministic in the parameters: given a fresh tape and one leaf id per
// parameter array, it returns the scalar loss node.
//
// Returns max over all parameter entries of
//   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
using LossBuilder = std::function<int(Tape<double>&, const std::vector<int>&)>;

inline double grad_check(std::vector<Array<double>>& params, const LossBuilder& build,
                         double step = 1e-5) {
  auto eval = [&](Tape<double>& tape, std::vector<int>* leaves_out) {
    tape.reset();
    std::vector<int> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) leaves.push_back(tape.leaf(p));
    const int loss = build(tape, leaves);
    check(tape.shape(loss).is_scalar(), "grad_check: builder must return a scalar loss");
    check(tape.value_finite(loss), "grad_check: non-finite loss");
    if (leaves_out) *leaves_out = leaves;
    return loss;
  };

  Tape<double> tape;
  std::vector<int> leaves;
  const int loss = eval(tape, &leaves);
  tape.backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double* g = tape.gradient(leaves[i]);
    analytic.emplace_back(g, g + params[i].data.size());
  }

  double max_rel = 0.0;
  Tape<double> probe;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = 0; j < params[i].data.size(); ++j) {
      const double saved = params[i].data[j];
      params[i].data[j] = saved + step;
      const double up = probe.scalar_value(eval(probe, nullptr));
      params[i].data[j] = saved - step;
      const double down = probe.scalar_value(eval(probe, nullptr));
      params[i].data[j] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[i][j];
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (rel > max_rel) max_rel = rel;
    }
  }
  return max_rel;
}

}  // namespace cake
