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

#ifndef MIA_PROTOCOLS_HPP
#define MIA_PROTOCOLS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mia/attacks.hpp"
#include "mia/synthgen.hpp"
#include "mia/trainers.hpp"

// Evidence collection in the three regimes.
//
// Multi-run: one model per evaluation point, inclusion randomized.
// One-run:   one model, per-point inclusion randomized.
// Zero-run:  fixed model, membership read off the dataset split.

namespace mia {

enum class Regime { kMultiRun, kOneRun, kZeroRun };

// kBernoulli follows the algorithm boxes: A_i ~ Bernoulli(1/2) and each
// run scores its own evaluation point. kBalancedSplit is the
// experiment-recipe variant: exactly half the runs include their point
// (multi-run scores fresh non-member points against the excluded-run
// models, non-member j against excluded model j).
enum class AssignmentMode { kBernoulli, kBalancedSplit };

struct EvidenceRecord {
  std::vector<double> features;
  double label = 0.0;
  std::uint8_t membership = 0;  // A_i
  double score = 0.0;           // Y_i
};

struct EvidenceSet {
  std::vector<EvidenceRecord> records;
  Regime regime = Regime::kMultiRun;
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  std::uint64_t seed = 0;
  ScoreOrientation orientation = ScoreOrientation::kRawLoss;
  bool scores_normalized = false;  // min-max mapped to [0, 1]

  std::vector<double> member_scores() const;
  std::vector<double> nonmember_scores() const;
  void recount();  // recomputes n1 / n0 from the records
};

EvidenceSet run_multirun(const ProblemSpec& spec, const TrainerConfig& trainer,
                         const AttackSpec& attack,
                         std::size_t base_train_size, std::size_t n_eval,
                         AssignmentMode mode, std::uint64_t seed);

EvidenceSet run_onerun(const ProblemSpec& spec, const TrainerConfig& trainer,
                       const AttackSpec& attack, std::size_t n,
                       AssignmentMode mode, std::uint64_t seed);

EvidenceSet run_zerorun(const ModelParams& model, const Dataset& members,
                        const Dataset& nonmembers, const AttackSpec& attack);

// Returns a copy whose scores are min-max normalized to [0, 1] and
// flagged as such (required before Hoeffding interval reporting).
EvidenceSet normalize_scores(const EvidenceSet& ev);

// CSV columns: index, a, y, feature_hash. With dump_features, writes
// JSON including the full feature vectors instead.
void write_evidence_csv(const EvidenceSet& ev, const std::string& path);
void write_evidence_json(const EvidenceSet& ev, const std::string& path);
EvidenceSet read_evidence_json(const std::string& path);

}  // namespace mia

#endif  // MIA_PROTOCOLS_HPP
