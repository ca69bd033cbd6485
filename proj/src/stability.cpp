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

#include "mia/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "mia/rng.hpp"

namespace mia {

namespace {

constexpr std::uint64_t kBaseTag = 0x57ab1eULL;
constexpr std::uint64_t kFreshTag = 0xf7e5ULL;
constexpr std::uint64_t kTestTag = 0x7e57ULL;

Dataset replace_point(const Dataset& base, std::size_t idx,
                      const Dataset& fresh, std::size_t fresh_idx) {
  Dataset out = base;
  auto dst = out.features.row(idx);
  auto src = fresh.point(fresh_idx);
  std::copy(src.begin(), src.end(), dst.begin());
  out.labels[idx] = fresh.labels[fresh_idx];
  return out;
}

// E_A[loss] at each query point, averaged over inner seeds when the
// trainer is randomized.
std::vector<double> expected_losses(const TrainerFn& fn, const Dataset& train,
                                    const Dataset& queries, std::uint64_t seed,
                                    const StabilityConfig& cfg) {
  const std::size_t n_seeds = cfg.randomized ? std::max<std::size_t>(1, cfg.n_seeds) : 1;
  std::vector<double> out(queries.size(), 0.0);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const ModelParams model = fn(train, mix_seed(seed, s));
    for (std::size_t i = 0; i < queries.size(); ++i) {
      out[i] += loss(model, queries.point(i), queries.labels[i]);
    }
  }
  for (auto& v : out) v /= static_cast<double>(n_seeds);
  return out;
}

}  // namespace

TrainerFn make_trainer_fn(const TrainerConfig& cfg) {
  if (cfg.variant == TrainerVariant::kRidgeClosedForm) {
    const double lambda = cfg.ridge_lambda;
    return [lambda](const Dataset& data, std::uint64_t) {
      return train_ridge(data, lambda);
    };
  }
  return [cfg](const Dataset& data, std::uint64_t seed) {
    return train_dpsgd(data, cfg, seed);
  };
}

bool trainer_is_randomized(const TrainerConfig& cfg) {
  return cfg.variant == TrainerVariant::kDpSgd;
}

double estimate_error_stability(const ProblemSpec& spec, const TrainerFn& fn,
                                std::size_t n_train, std::size_t n_perturb,
                                std::size_t n_test, std::uint64_t seed,
                                const StabilityConfig& cfg) {
  if (n_train < 2) throw std::invalid_argument("error stability: n_train < 2");
  if (n_perturb < 1) throw std::invalid_argument("error stability: n_perturb < 1");
  const Dataset base = sample_members(spec, n_train, mix_seed(seed, kBaseTag));
  const Dataset fresh =
      sample_members(spec, n_perturb, mix_seed(seed, kFreshTag));
  const Dataset test = sample_members(spec, n_test, mix_seed(seed, kTestTag));

  const std::vector<double> base_losses =
      expected_losses(fn, base, test, mix_seed(seed, 0), cfg);
  double base_mean = 0.0;
  for (double v : base_losses) base_mean += v;
  base_mean /= static_cast<double>(test.size());

  std::vector<double> diffs(n_perturb, 0.0);
  parallel_for(n_perturb, [&](std::size_t p) {
    const Dataset perturbed = replace_point(base, p % n_train, fresh, p);
    const std::vector<double> losses =
        expected_losses(fn, perturbed, test, mix_seed(seed, 0), cfg);
    double mean = 0.0;
    for (double v : losses) mean += v;
    mean /= static_cast<double>(test.size());
    diffs[p] = std::abs(mean - base_mean);
  });
  return *std::max_element(diffs.begin(), diffs.end());
}

double estimate_training_stability(const ProblemSpec& spec,
                                   const TrainerFn& fn, std::size_t n_train,
                                   std::size_t n_perturb, std::uint64_t seed,
                                   const StabilityConfig& cfg) {
  if (n_train < 3) {
    throw std::invalid_argument("training stability: n_train < 3");
  }
  if (n_perturb < 1) {
    throw std::invalid_argument("training stability: n_perturb < 1");
  }
  const Dataset base = sample_members(spec, n_train, mix_seed(seed, kBaseTag));
  const Dataset fresh =
      sample_members(spec, n_perturb, mix_seed(seed, kFreshTag));

  const std::vector<double> base_losses =
      expected_losses(fn, base, base, mix_seed(seed, 0), cfg);

  std::vector<double> maxima(n_perturb, 0.0);
  parallel_for(n_perturb, [&](std::size_t p) {
    const std::size_t replaced = p % n_train;
    const Dataset perturbed = replace_point(base, replaced, fresh, p);
    const std::vector<double> losses =
        expected_losses(fn, perturbed, base, mix_seed(seed, 0), cfg);
    double worst = 0.0;
    for (std::size_t k = 0; k < n_train; ++k) {
      if (k == replaced) continue;  // Def. 5.3 ranges over retained points
      worst = std::max(worst, std::abs(losses[k] - base_losses[k]));
    }
    maxima[p] = worst;
  });
  return *std::max_element(maxima.begin(), maxima.end());
}

double theorem_deviation(double alpha_hat, double beta_hat, double n, double t,
                         std::optional<double> eta,
                         std::optional<double> delta_pi) {
  if (!(n > 0.0 && t > 0.0)) {
    throw std::invalid_argument("theorem_deviation: n, t must be positive");
  }
  double bound = std::sqrt(t / n);
  if (eta) bound /= *eta;
  bound += std::sqrt(n * t * alpha_hat * alpha_hat);
  bound += std::sqrt(n * t * beta_hat * beta_hat);
  if (delta_pi) bound += *delta_pi;
  return bound;
}

std::string trainer_fingerprint(const TrainerConfig& cfg) {
  // FNV-1a over the config's JSON form; stable across runs
  const std::string text = trainer_config_to_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string stability_to_json(const StabilityEstimate& est) {
  nlohmann::json j;
  j["alpha_hat"] = est.alpha_hat;
  j["beta_hat"] = est.beta_hat;
  j["n_perturbations"] = est.n_perturbations;
  j["n_test"] = est.n_test;
  j["trainer_fingerprint"] = est.trainer_fingerprint;
  j["estimate_kind"] = "lower bound (max over sampled perturbations)";
  j["theorem_constant"] = "xC, C unknown";
  return j.dump(2);
}

}  // namespace mia
