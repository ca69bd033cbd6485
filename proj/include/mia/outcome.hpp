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

#ifndef MIA_OUTCOME_HPP
#define MIA_OUTCOME_HPP

#include "mia/estimators.hpp"
#include "mia/propensity_model.hpp"
#include "mia/protocols.hpp"

// Control-arm outcome models (mu0 and the threshold family mu0,t) for
// the G-formula and AIPW estimators. The fitted model is a one-
// dimensional index regression: records are projected onto the
// propensity log-odds direction and binned by control-arm quantiles;
// each bin carries an empirical mean and exceedance profile.

namespace mia {

struct OutcomeFitConfig {
  std::size_t n_bins = 20;
  std::size_t grid_size = 101;  // thresholds over the pooled score range
};

OutcomeModel fit_outcome_model(const EvidenceSet& ev,
                               const PropensityModel& direction,
                               const OutcomeFitConfig& cfg = {});

// Ignores covariates entirely: mu0 is the control-arm mean and mu0,t
// the control-arm empirical exceedance. Equivalent to n_bins = 1.
OutcomeModel covariate_free_outcome(const EvidenceSet& ev,
                                    std::size_t grid_size = 101);

// mu0 == value and mu0,t == exceedance for every x and t; test helper.
OutcomeModel constant_outcome(double value, double exceedance,
                              std::vector<double> threshold_grid);

}  // namespace mia

#endif  // MIA_OUTCOME_HPP
