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

#include "mia/synthgen.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "mia/kernels.hpp"
#include "mia/rng.hpp"

namespace mia {

namespace {

std::vector<double> random_unit_vector(RngStream& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm2 = 0.0;
  do {
    rng.fill_normal(v);
    norm2 = kernels::squared_norm(v);
  } while (norm2 == 0.0);
  kernels::scale(1.0 / std::sqrt(norm2), v);
  return v;
}

Dataset sample_impl(const ProblemSpec& spec, std::size_t n,
                    std::uint64_t seed, bool shifted) {
  if (n < 1) throw std::invalid_argument("sample: n must be positive");
  if (spec.dim == 0) throw std::invalid_argument("sample: empty spec");
  // same stream for both laws: with shift = 0, sample_shifted is
  // bit-identical to sample_members under the same seed
  RngStream rng = RngStream::derive(seed, {0xda7aULL});
  Dataset ds;
  ds.dim = spec.dim;
  ds.features = Matrix(n, spec.dim);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = ds.features.row(i);
    for (auto& v : row) v = rng.normal();
    if (shifted) {
      kernels::axpy(1.0, spec.shift, row);
    }
    ds.labels[i] = kernels::dot(row, spec.teacher) +
                   spec.label_noise_sd * rng.normal();
  }
  return ds;
}

}  // namespace

ProblemSpec make_problem(std::uint64_t seed, std::size_t dim, double corr,
                         TeacherScale scale) {
  if (corr < -1.0 || corr > 1.0) {
    throw std::invalid_argument("make_problem: corr must lie in [-1, 1]");
  }
  if (dim < 2 && std::abs(corr) < 1.0) {
    throw std::invalid_argument(
        "make_problem: dim >= 2 required when |corr| < 1 (no orthogonal "
        "direction exists)");
  }
  RngStream rng = RngStream::derive(seed, {0x70726f62ULL});
  ProblemSpec spec;
  spec.dim = dim;
  spec.seed = seed;
  spec.teacher_shift_corr = corr;
  spec.shift = random_unit_vector(rng, dim);

  // v: random unit vector orthogonal to mu
  std::vector<double> v;
  if (std::abs(corr) < 1.0) {
    v = random_unit_vector(rng, dim);
    const double proj = kernels::dot(v, spec.shift);
    kernels::axpy(-proj, spec.shift, v);
    const double vn = std::sqrt(kernels::squared_norm(v));
    if (vn == 0.0) throw std::runtime_error("make_problem: degenerate draw");
    kernels::scale(1.0 / vn, v);
  } else {
    v.assign(dim, 0.0);
  }

  spec.teacher.assign(dim, 0.0);
  kernels::axpy(corr, spec.shift, spec.teacher);
  kernels::axpy(std::sqrt(std::max(0.0, 1.0 - corr * corr)), v, spec.teacher);
  const double tn = std::sqrt(kernels::squared_norm(spec.teacher));
  kernels::scale(1.0 / tn, spec.teacher);

  if (scale == TeacherScale::kGaussianNorm) {
    std::vector<double> g(dim);
    rng.fill_normal(g);
    kernels::scale(std::sqrt(kernels::squared_norm(g)), spec.teacher);
  }
  return spec;
}

Dataset sample_members(const ProblemSpec& spec, std::size_t n,
                       std::uint64_t seed) {
  return sample_impl(spec, n, seed, false);
}

Dataset sample_shifted(const ProblemSpec& spec, std::size_t n,
                       std::uint64_t seed) {
  return sample_impl(spec, n, seed, true);
}

PropensityModel oracle_propensity(const ProblemSpec& spec,
                                  std::size_t n_member,
                                  std::size_t n_nonmember) {
  if (n_member == 0 || n_nonmember == 0) {
    throw std::invalid_argument("oracle_propensity: empty class");
  }
  PropensityModel m;
  m.kind = PropensityKind::kOracle;
  // log pi/(1-pi) = log r(a) + log(n1/n0)
  //              = -a . mu + ||mu||^2 / 2 + log(n1/n0)
  m.slope = spec.shift;
  kernels::scale(-1.0, m.slope);
  m.intercept = 0.5 * kernels::squared_norm(spec.shift) +
                std::log(static_cast<double>(n_member) /
                         static_cast<double>(n_nonmember));
  m.provenance = "oracle";
  return m;
}

std::string problem_to_json(const ProblemSpec& spec) {
  nlohmann::json j;
  j["dim"] = spec.dim;
  j["teacher"] = spec.teacher;
  j["shift"] = spec.shift;
  j["label_noise_sd"] = spec.label_noise_sd;
  j["teacher_shift_corr"] = spec.teacher_shift_corr;
  j["seed"] = spec.seed;
  return j.dump(2);
}

ProblemSpec problem_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  ProblemSpec spec;
  spec.dim = j.at("dim").get<std::size_t>();
  spec.teacher = j.at("teacher").get<std::vector<double>>();
  spec.shift = j.at("shift").get<std::vector<double>>();
  spec.label_noise_sd = j.at("label_noise_sd").get<double>();
  spec.teacher_shift_corr = j.at("teacher_shift_corr").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  if (spec.teacher.size() != spec.dim || spec.shift.size() != spec.dim) {
    throw std::invalid_argument("problem_from_json: dim mismatch");
  }
  return spec;
}

}  // namespace mia
