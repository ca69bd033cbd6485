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

#ifndef MIA_SYNTHGEN_HPP
#define MIA_SYNTHGEN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mia/linalg.hpp"
#include "mia/propensity_model.hpp"

// Synthetic member / non-member data-generating processes.
//
// Members:      a ~ N(0, I_d),   b | a ~ N(a . teacher, noise_sd^2)
// Non-members:  a ~ N(shift, I_d), same label law.

namespace mia {

struct ProblemSpec {
  std::size_t dim = 0;
  std::vector<double> teacher;        // w*
  std::vector<double> shift;          // mu; all-zero for no shift
  double label_noise_sd = 1.0;
  double teacher_shift_corr = 0.0;    // target teacher.mu_hat / ||teacher||
  std::uint64_t seed = 0;
};

// How the teacher magnitude is chosen. The direction is always
// corr * mu_hat + sqrt(1 - corr^2) * v_perp.
//   kUnitNorm:     ||teacher|| = 1.
//   kGaussianNorm: ||teacher|| = ||g|| for g ~ N(0, I_d), i.e. the
//                  magnitude of a standard Gaussian vector. This is the
//                  scale the synthetic reproduction scenarios use; loss
//                  magnitudes grow with d under it.
enum class TeacherScale { kUnitNorm, kGaussianNorm };

struct LabeledPoint {
  std::vector<double> features;
  double label = 0.0;
};

// Feature rows live in a Matrix so trainers can stream over them.
struct Dataset {
  Matrix features;              // n x dim
  std::vector<double> labels;   // n
  std::size_t dim = 0;

  std::size_t size() const { return labels.size(); }
  std::span<const double> point(std::size_t i) const {
    return features.row(i);
  }
};

ProblemSpec make_problem(std::uint64_t seed, std::size_t dim, double corr,
                         TeacherScale scale = TeacherScale::kUnitNorm);

Dataset sample_members(const ProblemSpec& spec, std::size_t n,
                       std::uint64_t seed);

Dataset sample_shifted(const ProblemSpec& spec, std::size_t n,
                       std::uint64_t seed);

// pi(x) = n1 * r(x) / (n1 * r(x) + n0) with Gaussian density ratio
// r(x) = p_T(a) / p_0(a) = exp(-a . mu + ||mu||^2 / 2).
PropensityModel oracle_propensity(const ProblemSpec& spec,
                                  std::size_t n_member,
                                  std::size_t n_nonmember);

std::string problem_to_json(const ProblemSpec& spec);
ProblemSpec problem_from_json(const std::string& json_text);

}  // namespace mia

#endif  // MIA_SYNTHGEN_HPP
