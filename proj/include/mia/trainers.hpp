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

#ifndef MIA_TRAINERS_HPP
#define MIA_TRAINERS_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mia/linalg.hpp"
#include "mia/synthgen.hpp"

namespace mia {

struct ModelParams {
  std::vector<double> weights;
};

enum class TrainerVariant { kRidgeClosedForm, kDpSgd };

struct TrainerConfig {
  TrainerVariant variant = TrainerVariant::kRidgeClosedForm;
  // ridge
  double ridge_lambda = 1.0;
  // dp-sgd
  double lr = 0.01;
  std::size_t epochs = 75;
  std::size_t batch_size = 128;
  double clip_norm = 1.0;
  double noise_sd = 0.0;       // per-step Gaussian noise std (pre clip/batch scaling)
  double l2_lambda = 0.0;
  // reported only, never recomputed
  double dp_epsilon = 0.0;
  double dp_delta = 0.0;
};

// Per-training instrumentation; max_clipped_norm lets tests assert that
// every per-example contribution respected the clip bound.
struct DpSgdStats {
  std::size_t steps = 0;
  double max_clipped_norm = 0.0;
};

// argmin_theta  sum_i (a_i . theta - b_i)^2 + lambda ||theta||^2
// Solved through the primal normal equations when d <= n and through
// the dual (kernel) system theta = A^T (A A^T + lambda I)^-1 b when
// d > n.
ModelParams train_ridge(const Dataset& data, double lambda);

ModelParams train_dpsgd(const Dataset& data, const TrainerConfig& cfg,
                        std::uint64_t seed, DpSgdStats* stats = nullptr);

// Unregularized squared error at one point.
double loss(const ModelParams& model, std::span<const double> features,
            double label);

double loss(const ModelParams& model, const LabeledPoint& point);

// Total number of train_* invocations in this process. The zero-run
// protocol test asserts this does not move.
std::uint64_t trainer_invocation_count();

// Caches the dual factorization of a fixed base dataset so that models
// "base plus one extra point" cost O(n^2) each instead of a fresh
// O(n^3) solve. Exact: the bordered system is the dual system of the
// extended dataset.
class DualRidgeExtension {
 public:
  DualRidgeExtension(const Dataset& base, double lambda);

  // Model trained on the base dataset alone.
  const ModelParams& base_model() const { return base_model_; }

  // Squared-error loss at (x, b) of the model trained on
  // base + {(x, b)}. Does not materialize theta.
  double loss_at_included_point(std::span<const double> features,
                                double label) const;

 private:
  const Dataset& base_;
  double lambda_;
  Matrix chol_;                  // lower factor of A A^T + lambda I
  std::vector<double> dual_coeffs_;  // (A A^T + lambda I)^-1 b
  ModelParams base_model_;
};

std::string trainer_config_to_json(const TrainerConfig& cfg);
TrainerConfig trainer_config_from_json(const std::string& json_text);

// Flat CSV export of the weight vector, one value per line.
void write_model_csv(const ModelParams& model, const std::string& path);

}  // namespace mia

#endif  // MIA_TRAINERS_HPP
