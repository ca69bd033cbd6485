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

#include "mia/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mia/rng.hpp"

namespace mia {

namespace {

constexpr std::uint64_t kTagBase = 1;
constexpr std::uint64_t kTagEval = 2;
constexpr std::uint64_t kTagAssign = 3;
constexpr std::uint64_t kTagRun = 4;

EvidenceRecord make_record(const Dataset& ds, std::size_t i,
                           std::uint8_t membership, double y) {
  EvidenceRecord rec;
  auto row = ds.point(i);
  rec.features.assign(row.begin(), row.end());
  rec.label = ds.labels[i];
  rec.membership = membership;
  rec.score = y;
  return rec;
}

ModelParams train_with(const TrainerConfig& cfg, const Dataset& data,
                       std::uint64_t run_seed) {
  if (cfg.variant == TrainerVariant::kRidgeClosedForm) {
    return train_ridge(data, cfg.ridge_lambda);
  }
  return train_dpsgd(data, cfg, run_seed);
}

Dataset with_extra_point(const Dataset& base, std::span<const double> x,
                         double label) {
  Dataset out;
  out.dim = base.dim;
  const std::size_t n = base.size();
  out.features = Matrix(n + 1, base.dim);
  std::copy(base.features.flat().begin(), base.features.flat().end(),
            out.features.flat().begin());
  std::copy(x.begin(), x.end(), out.features.row(n).begin());
  out.labels = base.labels;
  out.labels.push_back(label);
  return out;
}

double apply_orientation(const AttackSpec& attack, double raw_loss) {
  return attack.orientation == ScoreOrientation::kRawLoss ? raw_loss
                                                          : -raw_loss;
}

}  // namespace

std::vector<double> EvidenceSet::member_scores() const {
  std::vector<double> out;
  out.reserve(n1);
  for (const auto& r : records) {
    if (r.membership == 1) out.push_back(r.score);
  }
  return out;
}

std::vector<double> EvidenceSet::nonmember_scores() const {
  std::vector<double> out;
  out.reserve(n0);
  for (const auto& r : records) {
    if (r.membership == 0) out.push_back(r.score);
  }
  return out;
}

void EvidenceSet::recount() {
  n1 = 0;
  n0 = 0;
  for (const auto& r : records) {
    if (r.membership == 1) {
      ++n1;
    } else {
      ++n0;
    }
  }
}

EvidenceSet run_multirun(const ProblemSpec& spec, const TrainerConfig& trainer,
                         const AttackSpec& attack,
                         std::size_t base_train_size, std::size_t n_eval,
                         AssignmentMode mode, std::uint64_t seed) {
  if (n_eval < 2) throw std::invalid_argument("run_multirun: n_eval >= 2");
  const Dataset base =
      sample_members(spec, base_train_size, mix_seed(seed, kTagBase));

  EvidenceSet ev;
  ev.regime = Regime::kMultiRun;
  ev.seed = seed;
  ev.orientation = attack.orientation;
  ev.records.resize(n_eval);

  const bool ridge = trainer.variant == TrainerVariant::kRidgeClosedForm;
  // ridge shares one dual factorization across all runs; the bordered
  // solve is exactly the model trained on base + {X_i}
  std::optional<DualRidgeExtension> ext;
  if (ridge) ext.emplace(base, trainer.ridge_lambda);

  if (mode == AssignmentMode::kBalancedSplit) {
    if (n_eval % 2 != 0) {
      throw std::invalid_argument("run_multirun: balanced split needs even n");
    }
    const std::size_t half = n_eval / 2;
    const Dataset members =
        sample_members(spec, half, mix_seed(seed, kTagEval));
    const Dataset nonmembers = sample_members(
        spec, half, mix_seed(mix_seed(seed, kTagEval), kTagEval));
    parallel_for(n_eval, [&](std::size_t i) {
      if (i < half) {
        double l;
        if (ridge) {
          l = ext->loss_at_included_point(members.point(i),
                                          members.labels[i]);
        } else {
          const Dataset train = with_extra_point(base, members.point(i),
                                                 members.labels[i]);
          const ModelParams theta =
              train_with(trainer, train, mix_seed(mix_seed(seed, kTagRun), i));
          l = loss(theta, members.point(i), members.labels[i]);
        }
        ev.records[i] = make_record(members, i, 1, apply_orientation(attack, l));
      } else {
        const std::size_t j = i - half;
        double l;
        if (ridge) {
          l = loss(ext->base_model(), nonmembers.point(j),
                   nonmembers.labels[j]);
        } else {
          // excluded-run model j, fresh trainer randomness
          const ModelParams theta =
              train_with(trainer, base, mix_seed(mix_seed(seed, kTagRun), i));
          l = loss(theta, nonmembers.point(j), nonmembers.labels[j]);
        }
        ev.records[i] =
            make_record(nonmembers, j, 0, apply_orientation(attack, l));
      }
    });
  } else {
    const Dataset eval_points =
        sample_members(spec, n_eval, mix_seed(seed, kTagEval));
    RngStream assign = RngStream::derive(seed, {kTagAssign});
    std::vector<std::uint8_t> a(n_eval);
    for (auto& ai : a) ai = static_cast<std::uint8_t>(assign.next_u64() & 1u);
    parallel_for(n_eval, [&](std::size_t i) {
      double l;
      if (a[i] == 1) {
        if (ridge) {
          l = ext->loss_at_included_point(eval_points.point(i),
                                          eval_points.labels[i]);
        } else {
          const Dataset train = with_extra_point(
              base, eval_points.point(i), eval_points.labels[i]);
          const ModelParams theta =
              train_with(trainer, train, mix_seed(mix_seed(seed, kTagRun), i));
          l = loss(theta, eval_points.point(i), eval_points.labels[i]);
        }
      } else {
        if (ridge) {
          l = loss(ext->base_model(), eval_points.point(i),
                   eval_points.labels[i]);
        } else {
          const ModelParams theta =
              train_with(trainer, base, mix_seed(mix_seed(seed, kTagRun), i));
          l = loss(theta, eval_points.point(i), eval_points.labels[i]);
        }
      }
      ev.records[i] =
          make_record(eval_points, i, a[i], apply_orientation(attack, l));
    });
  }
  ev.recount();
  return ev;
}

EvidenceSet run_onerun(const ProblemSpec& spec, const TrainerConfig& trainer,
                       const AttackSpec& attack, std::size_t n,
                       AssignmentMode mode, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("run_onerun: n >= 2");
  const Dataset candidates =
      sample_members(spec, n, mix_seed(seed, kTagEval));

  std::vector<std::uint8_t> a(n);
  if (mode == AssignmentMode::kBalancedSplit) {
    if (n % 2 != 0) {
      throw std::invalid_argument("run_onerun: balanced split needs even n");
    }
    // candidates are i.i.d., so the first half serves as the member set
    for (std::size_t i = 0; i < n / 2; ++i) a[i] = 1;
  } else {
    RngStream assign = RngStream::derive(seed, {kTagAssign});
    for (auto& ai : a) ai = static_cast<std::uint8_t>(assign.next_u64() & 1u);
  }

  Dataset included;
  included.dim = spec.dim;
  std::size_t n_inc = 0;
  for (auto ai : a) n_inc += ai;
  included.features = Matrix(n_inc, spec.dim);
  included.labels.reserve(n_inc);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == 1) {
      auto row = candidates.point(i);
      std::copy(row.begin(), row.end(), included.features.row(k).begin());
      included.labels.push_back(candidates.labels[i]);
      ++k;
    }
  }

  EvidenceSet ev;
  ev.regime = Regime::kOneRun;
  ev.seed = seed;
  ev.orientation = attack.orientation;

  // an all-included / all-excluded Bernoulli draw is an estimation-time
  // problem, not a collection-time one; train only if possible
  ModelParams theta;
  if (n_inc > 0) {
    theta = train_with(trainer, included, mix_seed(seed, kTagRun));
  } else {
    theta.weights.assign(spec.dim, 0.0);
  }

  ev.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double l =
        loss(theta, candidates.point(i), candidates.labels[i]);
    ev.records[i] =
        make_record(candidates, i, a[i], apply_orientation(attack, l));
  }
  ev.recount();
  return ev;
}

EvidenceSet run_zerorun(const ModelParams& model, const Dataset& members,
                        const Dataset& nonmembers, const AttackSpec& attack) {
  if (members.dim != nonmembers.dim ||
      members.dim != model.weights.size()) {
    throw std::invalid_argument("run_zerorun: dim mismatch");
  }
  EvidenceSet ev;
  ev.regime = Regime::kZeroRun;
  ev.orientation = attack.orientation;
  ev.records.reserve(members.size() + nonmembers.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    const double l = loss(model, members.point(i), members.labels[i]);
    ev.records.push_back(
        make_record(members, i, 1, apply_orientation(attack, l)));
  }
  for (std::size_t i = 0; i < nonmembers.size(); ++i) {
    const double l = loss(model, nonmembers.point(i), nonmembers.labels[i]);
    ev.records.push_back(
        make_record(nonmembers, i, 0, apply_orientation(attack, l)));
  }
  ev.recount();
  return ev;
}

EvidenceSet normalize_scores(const EvidenceSet& ev) {
  EvidenceSet out = ev;
  if (out.records.empty()) return out;
  double lo = out.records.front().score;
  double hi = lo;
  for (const auto& r : out.records) {
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
  }
  const double range = hi - lo;
  for (auto& r : out.records) {
    r.score = range > 0.0 ? (r.score - lo) / range : 0.5;
  }
  out.scores_normalized = true;
  return out;
}

namespace {

std::uint64_t feature_hash(const EvidenceRecord& rec) {
  // FNV-1a over the raw feature and label bytes
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int s = 0; s < 64; s += 8) {
      h ^= (bits >> s) & 0xffULL;
      h *= 0x100000001b3ULL;
    }
  };
  for (double v : rec.features) mix(v);
  mix(rec.label);
  return h;
}

}  // namespace

void write_evidence_csv(const EvidenceSet& ev, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "index,a,y,feature_hash\n";
  out.precision(17);
  for (std::size_t i = 0; i < ev.records.size(); ++i) {
    const auto& r = ev.records[i];
    out << i << "," << static_cast<int>(r.membership) << "," << r.score
        << "," << feature_hash(r) << "\n";
  }
}

void write_evidence_json(const EvidenceSet& ev, const std::string& path) {
  nlohmann::json j;
  j["regime"] = static_cast<int>(ev.regime);
  j["n1"] = ev.n1;
  j["n0"] = ev.n0;
  j["seed"] = ev.seed;
  j["orientation"] = static_cast<int>(ev.orientation);
  j["scores_normalized"] = ev.scores_normalized;
  auto& records = j["records"] = nlohmann::json::array();
  for (const auto& r : ev.records) {
    records.push_back({{"features", r.features},
                       {"label", r.label},
                       {"a", r.membership},
                       {"y", r.score}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump();
}

EvidenceSet read_evidence_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  EvidenceSet ev;
  ev.regime = static_cast<Regime>(j.at("regime").get<int>());
  ev.seed = j.at("seed").get<std::uint64_t>();
  ev.orientation =
      static_cast<ScoreOrientation>(j.at("orientation").get<int>());
  ev.scores_normalized = j.value("scores_normalized", false);
  for (const auto& rec : j.at("records")) {
    EvidenceRecord r;
    r.features = rec.at("features").get<std::vector<double>>();
    r.label = rec.at("label").get<double>();
    r.membership = rec.at("a").get<std::uint8_t>();
    r.score = rec.at("y").get<double>();
    ev.records.push_back(std::move(r));
  }
  ev.recount();
  return ev;
}

}  // namespace mia
