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

#include "mia/trainers.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mia/kernels.hpp"
#include "mia/rng.hpp"

namespace mia {

namespace {

std::atomic<std::uint64_t> g_trainer_calls{0};

ModelParams ridge_primal(const Dataset& data, double lambda) {
  const std::size_t d = data.dim;
  const std::size_t n = data.size();
  Matrix m(d, d);
  // A^T A, accumulated row by row
  for (std::size_t i = 0; i < n; ++i) {
    auto row = data.features.row(i);
    for (std::size_t p = 0; p < d; ++p) {
      kernels::axpy(row[p], row, m.row(p));
    }
  }
  for (std::size_t p = 0; p < d; ++p) m(p, p) += lambda;
  std::vector<double> rhs(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    kernels::axpy(data.labels[i], data.features.row(i), rhs);
  }
  cholesky_in_place(m);
  return ModelParams{cholesky_solve(m, rhs)};
}

ModelParams ridge_dual(const Dataset& data, double lambda) {
  const std::size_t n = data.size();
  Matrix m = gram(data.features);
  for (std::size_t i = 0; i < n; ++i) m(i, i) += lambda;
  cholesky_in_place(m);
  const std::vector<double> alpha = cholesky_solve(m, data.labels);
  std::vector<double> theta(data.dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    kernels::accumulate_row(alpha[i], data.features.row(i), theta);
  }
  return ModelParams{std::move(theta)};
}

}  // namespace

ModelParams train_ridge(const Dataset& data, double lambda) {
  if (data.size() == 0) throw std::invalid_argument("train_ridge: empty data");
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("train_ridge: lambda must be positive");
  }
  g_trainer_calls.fetch_add(1, std::memory_order_relaxed);
  return data.dim <= data.size() ? ridge_primal(data, lambda)
                                 : ridge_dual(data, lambda);
}

ModelParams train_dpsgd(const Dataset& data, const TrainerConfig& cfg,
                        std::uint64_t seed, DpSgdStats* stats) {
  const std::size_t n = data.size();
  const std::size_t d = data.dim;
  if (cfg.batch_size > n) {
    throw std::invalid_argument("train_dpsgd: batch_size exceeds n");
  }
  if (cfg.batch_size == 0 || cfg.epochs == 0) {
    throw std::invalid_argument("train_dpsgd: bad config");
  }
  g_trainer_calls.fetch_add(1, std::memory_order_relaxed);

  RngStream rng = RngStream::derive(seed, {0xd959dULL});
  std::vector<double> theta(d, 0.0);
  std::vector<double> grad(d);
  std::vector<double> sum(d);
  std::vector<double> example_grad(d);
  const std::size_t steps_per_epoch = n / cfg.batch_size;
  const double noise_scale =
      cfg.noise_sd * cfg.clip_norm / static_cast<double>(cfg.batch_size);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto perm = rng.permutation(static_cast<std::uint32_t>(n));
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      std::fill(sum.begin(), sum.end(), 0.0);
      for (std::size_t k = 0; k < cfg.batch_size; ++k) {
        const std::size_t i = perm[s * cfg.batch_size + k];
        auto row = data.features.row(i);
        const double residual =
            kernels::dot(row, theta) - data.labels[i];
        // d/dtheta [ (a.theta - b)^2 + l2 ||theta||^2 ]
        example_grad.assign(theta.begin(), theta.end());
        kernels::scale(2.0 * cfg.l2_lambda, example_grad);
        kernels::axpy(2.0 * residual, row, example_grad);
        const double norm =
            std::sqrt(kernels::squared_norm(example_grad));
        if (!std::isfinite(norm)) {
          throw std::runtime_error("train_dpsgd: non-finite gradient");
        }
        const double factor =
            norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
        kernels::axpy(factor, example_grad, sum);
        if (stats != nullptr) {
          stats->max_clipped_norm =
              std::max(stats->max_clipped_norm, norm * factor);
        }
      }
      grad.assign(sum.begin(), sum.end());
      kernels::scale(1.0 / static_cast<double>(cfg.batch_size), grad);
      if (cfg.noise_sd > 0.0) {
        for (auto& g : grad) g += noise_scale * rng.normal();
      }
      kernels::axpy(-cfg.lr, grad, theta);
      if (stats != nullptr) ++stats->steps;
    }
  }
  return ModelParams{std::move(theta)};
}

double loss(const ModelParams& model, std::span<const double> features,
            double label) {
  if (model.weights.size() != features.size()) {
    throw std::invalid_argument("loss: dim mismatch");
  }
  const double r = kernels::dot(model.weights, features) - label;
  return r * r;
}

double loss(const ModelParams& model, const LabeledPoint& point) {
  return loss(model, point.features, point.label);
}

std::uint64_t trainer_invocation_count() {
  return g_trainer_calls.load(std::memory_order_relaxed);
}

DualRidgeExtension::DualRidgeExtension(const Dataset& base, double lambda)
    : base_(base), lambda_(lambda) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("ridge: lambda must be positive");
  }
  g_trainer_calls.fetch_add(1, std::memory_order_relaxed);
  const std::size_t n = base.size();
  chol_ = gram(base.features);
  for (std::size_t i = 0; i < n; ++i) chol_(i, i) += lambda;
  cholesky_in_place(chol_);
  dual_coeffs_ = cholesky_solve(chol_, base.labels);
  std::vector<double> theta(base.dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    kernels::accumulate_row(dual_coeffs_[i], base.features.row(i), theta);
  }
  base_model_.weights = std::move(theta);
}

double DualRidgeExtension::loss_at_included_point(
    std::span<const double> features, double label) const {
  const std::size_t n = base_.size();
  // bordered dual system: [M c; c^T gamma] alpha = [b; label]
  std::vector<double> c(n);
  kernels::matvec_rows(base_.features.flat(), n, base_.dim, features, c);
  const std::vector<double> u = cholesky_solve(chol_, c);
  const double gamma = kernels::squared_norm(features) + lambda_;
  const double schur = gamma - kernels::dot(c, u);
  const double alpha_last =
      (label - kernels::dot(c, dual_coeffs_)) / schur;
  // prediction at the extra point: c . alpha_top + (x.x) alpha_last
  double pred = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pred += c[i] * (dual_coeffs_[i] - u[i] * alpha_last);
  }
  pred += kernels::squared_norm(features) * alpha_last;
  const double r = pred - label;
  return r * r;
}

std::string trainer_config_to_json(const TrainerConfig& cfg) {
  nlohmann::json j;
  j["variant"] =
      cfg.variant == TrainerVariant::kRidgeClosedForm ? "ridge" : "dpsgd";
  j["ridge_lambda"] = cfg.ridge_lambda;
  j["lr"] = cfg.lr;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["clip_norm"] = cfg.clip_norm;
  j["noise_sd"] = cfg.noise_sd;
  j["l2_lambda"] = cfg.l2_lambda;
  j["dp_epsilon"] = cfg.dp_epsilon;
  j["dp_delta"] = cfg.dp_delta;
  return j.dump(2);
}

TrainerConfig trainer_config_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  TrainerConfig cfg;
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "ridge") {
    cfg.variant = TrainerVariant::kRidgeClosedForm;
  } else if (variant == "dpsgd") {
    cfg.variant = TrainerVariant::kDpSgd;
  } else {
    throw std::invalid_argument("unknown trainer variant: " + variant);
  }
  cfg.ridge_lambda = j.value("ridge_lambda", cfg.ridge_lambda);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.clip_norm = j.value("clip_norm", cfg.clip_norm);
  cfg.noise_sd = j.value("noise_sd", cfg.noise_sd);
  cfg.l2_lambda = j.value("l2_lambda", cfg.l2_lambda);
  cfg.dp_epsilon = j.value("dp_epsilon", cfg.dp_epsilon);
  cfg.dp_delta = j.value("dp_delta", cfg.dp_delta);
  return cfg;
}

void write_model_csv(const ModelParams& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (double w : model.weights) out << w << "\n";
}

}  // namespace mia
