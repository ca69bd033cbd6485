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

#include "mia/outcome.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

namespace mia {

namespace {

std::vector<double> make_grid(const EvidenceSet& ev, std::size_t grid_size) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : ev.records) {
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
  }
  if (!(lo <= hi)) throw std::invalid_argument("outcome fit: empty evidence");
  if (grid_size < 2) throw std::invalid_argument("outcome fit: grid_size < 2");
  std::vector<double> grid(grid_size);
  for (std::size_t g = 0; g < grid_size; ++g) {
    grid[g] = lo + (hi - lo) * static_cast<double>(g) /
                       static_cast<double>(grid_size - 1);
  }
  return grid;
}

// Per-bin statistics shared by mean_fn and exceedance_fn closures.
struct BinnedFit {
  std::vector<double> edges;   // interior bin boundaries on the index
  std::vector<double> means;   // n_bins
  Matrix exceedance;           // n_bins x grid_size
  std::vector<double> slope;
  double intercept = 0.0;

  double index_of(std::span<const double> x) const {
    double u = intercept;
    for (std::size_t j = 0; j < slope.size(); ++j) u += slope[j] * x[j];
    return u;
  }
  std::size_t bin_of(std::span<const double> x) const {
    const double u = index_of(x);
    const auto it = std::upper_bound(edges.begin(), edges.end(), u);
    return static_cast<std::size_t>(it - edges.begin());
  }
};

}  // namespace

OutcomeModel fit_outcome_model(const EvidenceSet& ev,
                               const PropensityModel& direction,
                               const OutcomeFitConfig& cfg) {
  std::vector<std::size_t> controls;
  for (std::size_t i = 0; i < ev.records.size(); ++i) {
    if (ev.records[i].membership == 0) controls.push_back(i);
  }
  if (controls.empty()) {
    throw std::invalid_argument("outcome fit: no control-arm records");
  }
  auto fit = std::make_shared<BinnedFit>();
  fit->slope = direction.slope;
  fit->intercept = direction.intercept;

  std::vector<double> grid = make_grid(ev, cfg.grid_size);

  // quantile bins on the control-arm index
  std::vector<std::pair<double, std::size_t>> indexed;
  indexed.reserve(controls.size());
  for (std::size_t i : controls) {
    indexed.emplace_back(fit->index_of(ev.records[i].features), i);
  }
  std::sort(indexed.begin(), indexed.end());
  std::size_t n_bins =
      std::max<std::size_t>(1, std::min(cfg.n_bins, controls.size()));
  // a flat index (constant propensity direction) cannot be binned
  if (indexed.front().first == indexed.back().first) n_bins = 1;
  std::vector<std::vector<std::size_t>> bins(n_bins);
  for (std::size_t pos = 0; pos < indexed.size(); ++pos) {
    const std::size_t b = pos * n_bins / indexed.size();
    bins[b].push_back(indexed[pos].second);
  }
  fit->edges.clear();
  for (std::size_t b = 1; b < n_bins; ++b) {
    const std::size_t first_pos = b * indexed.size() / n_bins;
    // boundary halfway between adjacent sorted index values
    fit->edges.push_back(
        0.5 * (indexed[first_pos - 1].first + indexed[first_pos].first));
  }

  fit->means.assign(n_bins, 0.0);
  fit->exceedance = Matrix(n_bins, grid.size());
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (bins[b].empty()) continue;  // only possible with duplicate indices
    double sum = 0.0;
    for (std::size_t i : bins[b]) sum += ev.records[i].score;
    fit->means[b] = sum / static_cast<double>(bins[b].size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      std::size_t count = 0;
      for (std::size_t i : bins[b]) {
        if (ev.records[i].score >= grid[g]) ++count;
      }
      fit->exceedance(b, g) =
          static_cast<double>(count) / static_cast<double>(bins[b].size());
    }
    // isotonic repair: non-increasing in t (already true of empirical
    // exceedance; kept as a guard for future fitted families)
    for (std::size_t g = 1; g < grid.size(); ++g) {
      fit->exceedance(b, g) =
          std::min(fit->exceedance(b, g), fit->exceedance(b, g - 1));
    }
  }

  OutcomeModel om;
  om.threshold_grid = std::move(grid);
  om.mean_fn = [fit](std::span<const double> x) {
    return fit->means[fit->bin_of(x)];
  };
  om.exceedance_fn = [fit](std::size_t g, std::span<const double> x) {
    return fit->exceedance(fit->bin_of(x), g);
  };
  return om;
}

OutcomeModel covariate_free_outcome(const EvidenceSet& ev,
                                    std::size_t grid_size) {
  OutcomeFitConfig cfg;
  cfg.n_bins = 1;
  cfg.grid_size = grid_size;
  return fit_outcome_model(ev, PropensityModel::constant(0.5), cfg);
}

OutcomeModel constant_outcome(double value, double exceedance,
                              std::vector<double> threshold_grid) {
  OutcomeModel om;
  om.threshold_grid = std::move(threshold_grid);
  om.mean_fn = [value](std::span<const double>) { return value; };
  om.exceedance_fn = [exceedance](std::size_t, std::span<const double>) {
    return exceedance;
  };
  return om;
}

}  // namespace mia
