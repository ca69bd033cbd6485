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

#ifndef MIA_STABILITY_HPP
#define MIA_STABILITY_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "mia/synthgen.hpp"
#include "mia/trainers.hpp"

// Empirical stability constants via one-point replacement, plus the
// deviation-bound expression used for order-of-magnitude reporting.
// The true constants are suprema over all datasets; these maxima over
// sampled perturbations are lower-bound estimates and are labeled as
// such in the serialized output.

namespace mia {

using TrainerFn = std::function<ModelParams(const Dataset&, std::uint64_t)>;

TrainerFn make_trainer_fn(const TrainerConfig& cfg);
bool trainer_is_randomized(const TrainerConfig& cfg);

struct StabilityConfig {
  bool randomized = false;  // average the inner expectation over seeds
  std::size_t n_seeds = 5;  // inner seeds when randomized
};

struct StabilityEstimate {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  std::size_t n_perturbations = 0;
  std::size_t n_test = 0;
  std::string trainer_fingerprint;
};

// Max over perturbations of |mean test loss change| after replacing one
// training point with a fresh draw.
double estimate_error_stability(const ProblemSpec& spec, const TrainerFn& fn,
                                std::size_t n_train, std::size_t n_perturb,
                                std::size_t n_test, std::uint64_t seed,
                                const StabilityConfig& cfg = {});

// Max over perturbations and retained training points k of the absolute
// per-point loss change.
double estimate_training_stability(const ProblemSpec& spec,
                                   const TrainerFn& fn, std::size_t n_train,
                                   std::size_t n_perturb, std::uint64_t seed,
                                   const StabilityConfig& cfg = {});

// sqrt(t/n)/eta + sqrt(n t alpha^2) + sqrt(n t beta^2) + delta_pi,
// without the theorems' unspecified universal constant. Reporting only.
double theorem_deviation(double alpha_hat, double beta_hat, double n, double t,
                         std::optional<double> eta = std::nullopt,
                         std::optional<double> delta_pi = std::nullopt);

std::string trainer_fingerprint(const TrainerConfig& cfg);
std::string stability_to_json(const StabilityEstimate& est);

}  // namespace mia

#endif  // MIA_STABILITY_HPP
