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

#ifndef MIA_PROPENSITY_HPP
#define MIA_PROPENSITY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mia/propensity_model.hpp"
#include "mia/protocols.hpp"
#include "mia/synthgen.hpp"

// Learned propensity scores: logistic regression via damped Newton
// (dual/Woodbury solve when d > n), k-fold cross-fitting, overlap
// clipping and the mean absolute odds-gap diagnostic.

namespace mia {

struct LogisticFitConfig {
  std::size_t max_iter = 50;
  double tol = 1e-8;
  std::uint64_t seed = 0;
};

struct FoldPlan {
  std::size_t k = 2;
  std::vector<std::size_t> assignment;  // record index -> fold id
  std::uint64_t seed = 0;
};

FoldPlan make_fold_plan(std::size_t n_records, std::size_t k,
                        std::uint64_t seed);

// Maximizes the mean membership log-likelihood with an intercept.
// Features are standardized internally; the returned weights fold the
// standardization back in. Near-separable fits stop at max_iter and set
// separation_warning (clip before feeding IPW).
PropensityModel fit_logistic(const Matrix& member_x, const Matrix& nonmember_x,
                             const LogisticFitConfig& cfg = {});

struct CrossFitResult {
  std::vector<double> pi_values;         // per record, from out-of-fold models
  std::vector<PropensityModel> fold_models;
  bool separation_warning = false;
};

CrossFitResult cross_fit(const EvidenceSet& ev, const FoldPlan& plan,
                         const LogisticFitConfig& cfg = {});

// Caps evaluations at 1 - eta and floors them at eta, so IPW weights
// stay within [eta/(1-eta), (1-eta)/eta].
PropensityModel clip(const PropensityModel& model, double eta);

// Clamp raw cross-fit values the same way.
std::vector<double> clip_values(std::vector<double> pi_values, double eta);

// Mean absolute odds difference E|pi/(1-pi) - pihat/(1-pihat)| over a
// non-member sample.
double delta_pi(const PropensityModel& hat, const PropensityModel& oracle,
                const Dataset& nonmember_sample);

std::string propensity_to_json(const PropensityModel& model);
PropensityModel propensity_from_json(const std::string& json_text);

}  // namespace mia

#endif  // MIA_PROPENSITY_HPP
