// Copyright 2026 The mia-causal-eval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIA_PROPENSITY_MODEL_HPP
#define MIA_PROPENSITY_MODEL_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mia/kernels.hpp"

namespace mia {

enum class PropensityKind { kOracle, kLogistic, kConstant };

// pi(x) = sigmoid(intercept + slope . a), optionally clipped to
// [floor, ceiling]. Oracle and logistic models are both affine in the
// features, so a single representation covers every kind.
struct PropensityModel {
  PropensityKind kind = PropensityKind::kConstant;
  double intercept = 0.0;                 // log-odds offset
  std::vector<double> slope;              // empty for constant models
  double ceiling = 1.0;                   // 1 - eta cap; 1 means unclipped
  double floor = 0.0;                     // symmetric floor; 0 means none
  bool separation_warning = false;        // logistic fit hit huge weights
  std::string provenance;

  double log_odds(std::span<const double> features) const {
    double z = intercept;
    if (!slope.empty()) {
      if (slope.size() != features.size()) {
        throw std::invalid_argument("propensity: feature dim mismatch");
      }
      z += kernels::dot(slope, features);
    }
    return z;
  }

  double evaluate(std::span<const double> features) const {
    for (double v : features) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("propensity: non-finite feature");
      }
    }
    const double z = log_odds(features);
    const double p = 1.0 / (1.0 + std::exp(-z));
    return std::min(ceiling, std::max(floor, p));
  }

  static PropensityModel constant(double p) {
    PropensityModel m;
    m.kind = PropensityKind::kConstant;
    m.intercept = std::log(p / (1.0 - p));
    m.provenance = "constant";
    return m;
  }
};

}  // namespace mia

#endif  // MIA_PROPENSITY_MODEL_HPP
