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

#ifndef MIA_ATTACKS_HPP
#define MIA_ATTACKS_HPP

#include <span>

#include "mia/trainers.hpp"

namespace mia {

enum class AttackKind { kLossBased };

// RawLoss reports the squared error itself (members score lower;
// ATE-style metrics stay on this side so their sign matches a
// memorizing trainer having negative ATE). HigherScoreMeansMember
// negates it so ROC-style metrics give a better-than-chance attack
// AUC > 0.5.
enum class ScoreOrientation { kHigherScoreMeansMember, kRawLoss };

struct AttackSpec {
  AttackKind kind = AttackKind::kLossBased;
  ScoreOrientation orientation = ScoreOrientation::kRawLoss;
};

inline double score(const AttackSpec& attack, const ModelParams& model,
                    std::span<const double> features, double label) {
  const double l = loss(model, features, label);
  return attack.orientation == ScoreOrientation::kRawLoss ? l : -l;
}

inline double score(const AttackSpec& attack, const ModelParams& model,
                    const LabeledPoint& point) {
  return score(attack, model, point.features, point.label);
}

}  // namespace mia

#endif  // MIA_ATTACKS_HPP
