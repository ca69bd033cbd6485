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

#include "mia/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "mia/kernels.hpp"
#include "mia/rng.hpp"

namespace mia {

namespace {

// A standardized coefficient this large (one sd moves the log-odds by 8)
// only survives when the likelihood keeps improving without bound, i.e.
// the classes are (near-)separable; finite MLEs converge well below it.
constexpr double kSeparationWeight = 8.0;
constexpr double kNewtonDamping = 1e-4;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// mean cross-entropy of labels y under logits z
double mean_ce(std::span<const double> z, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    // log(1 + e^z) - y z, computed stably
    const double zp = std::max(z[i], 0.0);
    s += zp + std::log1p(std::exp(-std::abs(z[i]))) - y[i] * z[i];
  }
  return s / static_cast<double>(z.size());
}

struct Standardization {
  std::vector<double> mean;
  std::vector<double> inv_sd;
};

}  // namespace

FoldPlan make_fold_plan(std::size_t n_records, std::size_t k,
                        std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("make_fold_plan: k >= 2 required");
  if (k > n_records) {
    throw std::invalid_argument("make_fold_plan: more folds than records");
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignment.resize(n_records);
  RngStream rng = RngStream::derive(seed, {0xf01d5ULL});
  const auto perm = rng.permutation(static_cast<std::uint32_t>(n_records));
  for (std::size_t pos = 0; pos < n_records; ++pos) {
    plan.assignment[perm[pos]] = pos % k;  // round-robin keeps sizes within 1
  }
  return plan;
}

PropensityModel fit_logistic(const Matrix& member_x, const Matrix& nonmember_x,
                             const LogisticFitConfig& cfg) {
  const std::size_t n1 = member_x.rows();
  const std::size_t n0 = nonmember_x.rows();
  if (n1 == 0 || n0 == 0) {
    throw std::invalid_argument("fit_logistic: both classes must be non-empty");
  }
  if (member_x.cols() != nonmember_x.cols()) {
    throw std::invalid_argument("fit_logistic: dim mismatch");
  }
  const std::size_t d = member_x.cols();
  const std::size_t n = n1 + n0;

  // standardize from the pooled training data
  Standardization st;
  st.mean.assign(d, 0.0);
  st.inv_sd.assign(d, 1.0);
  for (std::size_t i = 0; i < n1; ++i) {
    kernels::axpy(1.0, member_x.row(i), st.mean);
  }
  for (std::size_t i = 0; i < n0; ++i) {
    kernels::axpy(1.0, nonmember_x.row(i), st.mean);
  }
  kernels::scale(1.0 / static_cast<double>(n), st.mean);
  {
    std::vector<double> var(d, 0.0);
    auto accumulate = [&](std::span<const double> row) {
      for (std::size_t j = 0; j < d; ++j) {
        const double c = row[j] - st.mean[j];
        var[j] += c * c;
      }
    };
    for (std::size_t i = 0; i < n1; ++i) accumulate(member_x.row(i));
    for (std::size_t i = 0; i < n0; ++i) accumulate(nonmember_x.row(i));
    for (std::size_t j = 0; j < d; ++j) {
      const double sd = std::sqrt(var[j] / static_cast<double>(n));
      st.inv_sd[j] = sd > 0.0 ? 1.0 / sd : 1.0;
    }
  }

  // design matrix: standardized features plus a leading 1 column
  const std::size_t p = d + 1;
  Matrix design(n, p);
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool member = i < n1;
    auto src = member ? member_x.row(i) : nonmember_x.row(i - n1);
    auto dst = design.row(i);
    dst[0] = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      dst[j + 1] = (src[j] - st.mean[j]) * st.inv_sd[j];
    }
    labels[i] = member ? 1.0 : 0.0;
  }

  const bool dual = p > n;
  Matrix gram_design;
  if (dual) gram_design = gram(design);

  std::vector<double> w(p, 0.0);
  std::vector<double> z(n, 0.0);
  std::vector<double> probs(n);
  double ce = mean_ce(z, labels);
  bool converged = false;

  for (std::size_t iter = 0; iter < cfg.max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) probs[i] = sigmoid(z[i]);
    // gradient of mean CE
    std::vector<double> grad(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      kernels::axpy((probs[i] - labels[i]) / static_cast<double>(n),
                    design.row(i), grad);
    }
    if (std::sqrt(kernels::squared_norm(grad)) <= cfg.tol) {
      converged = true;
      break;
    }

    // damped Newton direction for (H + delta I) s = grad
    std::vector<double> step(p, 0.0);
    bool have_newton = false;
    if (dual) {
      // Woodbury through the n x n system M = I + D G D / delta,
      // s = (grad - Z^T D M^-1 D Z grad / delta) / delta
      std::vector<double> sqrt_w(n);
      for (std::size_t i = 0; i < n; ++i) {
        sqrt_w[i] =
            std::sqrt(probs[i] * (1.0 - probs[i]) / static_cast<double>(n));
      }
      Matrix m(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          m(i, j) = sqrt_w[i] * sqrt_w[j] * gram_design(i, j) / kNewtonDamping;
        }
        m(i, i) += 1.0;
      }
      try {
        cholesky_in_place(m);
        std::vector<double> zg(n);
        kernels::matvec_rows(design.flat(), n, p, grad, zg);
        for (std::size_t i = 0; i < n; ++i) zg[i] *= sqrt_w[i];
        const std::vector<double> sol = cholesky_solve(m, zg);
        step = grad;
        for (std::size_t i = 0; i < n; ++i) {
          kernels::axpy(-sqrt_w[i] * sol[i] / kNewtonDamping, design.row(i),
                        step);
        }
        kernels::scale(1.0 / kNewtonDamping, step);
        have_newton = true;
      } catch (const std::runtime_error&) {
        have_newton = false;
      }
    } else {
      Matrix h(p, p);
      for (std::size_t i = 0; i < n; ++i) {
        const double wi = probs[i] * (1.0 - probs[i]) / static_cast<double>(n);
        auto row = design.row(i);
        for (std::size_t a = 0; a < p; ++a) {
          kernels::axpy(wi * row[a], row, h.row(a));
        }
      }
      for (std::size_t a = 0; a < p; ++a) h(a, a) += kNewtonDamping;
      try {
        cholesky_in_place(h);
        step = cholesky_solve(h, grad);
        have_newton = true;
      } catch (const std::runtime_error&) {
        have_newton = false;
      }
    }
    if (!have_newton) step = grad;  // gradient fallback

    // backtracking line search on the mean cross-entropy
    double scale = 1.0;
    bool accepted = false;
    std::vector<double> w_try(p);
    std::vector<double> z_try(n);
    for (int halvings = 0; halvings < 40; ++halvings) {
      w_try = w;
      kernels::axpy(-scale, step, w_try);
      kernels::matvec_rows(design.flat(), n, p, w_try, z_try);
      const double ce_try = mean_ce(z_try, labels);
      if (ce_try < ce) {
        w = w_try;
        z = z_try;
        ce = ce_try;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;  // no descent direction left
  }

  PropensityModel model;
  model.kind = PropensityKind::kLogistic;
  model.provenance = converged ? "logistic(converged)" : "logistic(max_iter)";
  double max_std_weight = 0.0;
  for (std::size_t j = 1; j < p; ++j) {
    max_std_weight = std::max(max_std_weight, std::abs(w[j]));
  }
  model.separation_warning = !converged && max_std_weight > kSeparationWeight;
  // fold the standardization back into raw-feature weights
  model.slope.assign(d, 0.0);
  model.intercept = w[0];
  for (std::size_t j = 0; j < d; ++j) {
    model.slope[j] = w[j + 1] * st.inv_sd[j];
    model.intercept -= w[j + 1] * st.inv_sd[j] * st.mean[j];
  }
  return model;
}

CrossFitResult cross_fit(const EvidenceSet& ev, const FoldPlan& plan,
                         const LogisticFitConfig& cfg) {
  if (plan.k < 2) throw std::invalid_argument("cross_fit: k >= 2 required");
  const std::size_t n = ev.records.size();
  if (plan.assignment.size() != n) {
    throw std::invalid_argument("cross_fit: plan does not match evidence");
  }
  if (plan.k == n) {
    // leave-one-out is allowed but each fold model retrains on n-1 records
    // (slow); nothing else changes
  }
  CrossFitResult result;
  result.pi_values.assign(n, 0.0);
  result.fold_models.resize(plan.k);

  for (std::size_t f = 0; f < plan.k; ++f) {
    std::size_t train_m = 0, train_nm = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (plan.assignment[i] == f) continue;
      (ev.records[i].membership == 1 ? train_m : train_nm) += 1;
    }
    if (train_m == 0 || train_nm == 0) {
      throw std::runtime_error("cross_fit: training split for fold " +
                               std::to_string(f) + " has a single class");
    }
    const std::size_t dim = ev.records.front().features.size();
    Matrix members(train_m, dim);
    Matrix nonmembers(train_nm, dim);
    std::size_t im = 0, inm = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (plan.assignment[i] == f) continue;
      const auto& r = ev.records[i];
      auto dst = r.membership == 1 ? members.row(im++) : nonmembers.row(inm++);
      std::copy(r.features.begin(), r.features.end(), dst.begin());
    }
    PropensityModel model = fit_logistic(members, nonmembers, cfg);
    result.separation_warning |= model.separation_warning;
    for (std::size_t i = 0; i < n; ++i) {
      if (plan.assignment[i] == f) {
        result.pi_values[i] = model.evaluate(ev.records[i].features);
      }
    }
    result.fold_models[f] = std::move(model);
  }
  return result;
}

PropensityModel clip(const PropensityModel& model, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw std::invalid_argument("clip: eta must lie in (0, 1)");
  }
  PropensityModel out = model;
  out.ceiling = 1.0 - eta;
  out.floor = eta;
  return out;
}

std::vector<double> clip_values(std::vector<double> pi_values, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw std::invalid_argument("clip_values: eta must lie in (0, 1)");
  }
  for (auto& p : pi_values) p = std::clamp(p, eta, 1.0 - eta);
  return pi_values;
}

double delta_pi(const PropensityModel& hat, const PropensityModel& oracle,
                const Dataset& nonmember_sample) {
  if (nonmember_sample.size() == 0) {
    throw std::invalid_argument("delta_pi: empty sample");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < nonmember_sample.size(); ++i) {
    auto x = nonmember_sample.point(i);
    const double p_hat = hat.evaluate(x);
    const double p_true = oracle.evaluate(x);
    sum += std::abs(p_true / (1.0 - p_true) - p_hat / (1.0 - p_hat));
  }
  return sum / static_cast<double>(nonmember_sample.size());
}

std::string propensity_to_json(const PropensityModel& model) {
  nlohmann::json j;
  switch (model.kind) {
    case PropensityKind::kOracle: j["kind"] = "oracle"; break;
    case PropensityKind::kLogistic: j["kind"] = "logistic"; break;
    case PropensityKind::kConstant: j["kind"] = "constant"; break;
  }
  j["intercept"] = model.intercept;
  j["slope"] = model.slope;
  j["ceiling"] = model.ceiling;
  j["floor"] = model.floor;
  j["separation_warning"] = model.separation_warning;
  j["provenance"] = model.provenance;
  return j.dump(2);
}

PropensityModel propensity_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  PropensityModel model;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "oracle") {
    model.kind = PropensityKind::kOracle;
  } else if (kind == "logistic") {
    model.kind = PropensityKind::kLogistic;
  } else if (kind == "constant") {
    model.kind = PropensityKind::kConstant;
  } else {
    throw std::invalid_argument("unknown propensity kind: " + kind);
  }
  model.intercept = j.at("intercept").get<double>();
  model.slope = j.at("slope").get<std::vector<double>>();
  model.ceiling = j.value("ceiling", 1.0);
  model.floor = j.value("floor", 0.0);
  model.separation_warning = j.value("separation_warning", false);
  model.provenance = j.value("provenance", std::string{});
  return model;
}

}  // namespace mia
