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

#include "mia/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "mia/attacks.hpp"
#include "mia/outcome.hpp"
#include "mia/propensity.hpp"
#include "mia/protocols.hpp"
#include "mia/rng.hpp"

namespace mia {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kProblemTag = 0x9b1ecULL;
constexpr std::uint64_t kMultiRunTag = 0x301ULL;
constexpr std::uint64_t kOneRunTag = 0x302ULL;
constexpr std::uint64_t kZeroMembersTag = 0x303ULL;
constexpr std::uint64_t kZeroNonMembersTag = 0x304ULL;
constexpr std::uint64_t kZeroTrainTag = 0x305ULL;
constexpr std::uint64_t kFoldTag = 0x306ULL;

EvidenceSet flip_orientation(const EvidenceSet& ev) {
  EvidenceSet out = ev;
  for (auto& r : out.records) r.score = -r.score;
  out.orientation = ev.orientation == ScoreOrientation::kRawLoss
                        ? ScoreOrientation::kHigherScoreMeansMember
                        : ScoreOrientation::kRawLoss;
  return out;
}

std::uint64_t fnv1a_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

// The propensity treatment a cell implies.
struct CellNuisance {
  PropensityModel model;            // clipped; constant 1/2 for RCT cells
  std::vector<double> pi_values;    // aligned with the evidence records
  bool constant = true;
};

bool estimator_valid(RegimeCell cell, EstimatorKind est) {
  const bool corrected = cell == RegimeCell::kZeroRunOracle ||
                         cell == RegimeCell::kZeroRunLearned;
  if (est == EstimatorKind::kClassical) return !corrected;
  return corrected;
}

Regime regime_of(RegimeCell cell) {
  switch (cell) {
    case RegimeCell::kMultiRun: return Regime::kMultiRun;
    case RegimeCell::kOneRun: return Regime::kOneRun;
    default: return Regime::kZeroRun;
  }
}

struct CellScalars {
  double auc = 0.0;
  double ate = 0.0;
  double youden = 0.0;
  std::map<double, double> tpr;
  double hoeffding = 0.0;
};

CellScalars compute_cell(const RunConfig& cfg, const EvidenceSet& ev_raw,
                         const EvidenceSet& ev_roc, EstimatorKind est,
                         const CellNuisance& nu) {
  CellScalars out;
  out.hoeffding =
      hoeffding_halfwidth(ev_raw.n1, ev_raw.n0, cfg.hoeffding_t);
  switch (est) {
    case EstimatorKind::kClassical: {
      const RocCurve curve = classical_roc(ev_roc);
      out.auc = trapezoid_area(curve);
      out.youden = youden_sup(curve);
      out.ate = ate_dim(ev_raw);
      for (double a : cfg.tpr_alphas) out.tpr[a] = tpr_at_fpr(ev_roc, a);
      break;
    }
    case EstimatorKind::kIpw: {
      const RocCurve curve = ipw_roc(ev_roc, nu.pi_values);
      out.auc = trapezoid_area(curve);
      out.youden = youden_sup(curve);
      out.ate = ipw_ate(ev_raw, nu.pi_values);
      for (double a : cfg.tpr_alphas) {
        out.tpr[a] = ipw_tpr_at_fpr(ev_roc, nu.pi_values, a);
      }
      break;
    }
    case EstimatorKind::kGFormula:
    case EstimatorKind::kAipw: {
      const OutcomeModel om_raw =
          nu.constant ? covariate_free_outcome(ev_raw)
                      : fit_outcome_model(ev_raw, nu.model);
      const OutcomeModel om_roc =
          nu.constant ? covariate_free_outcome(ev_roc)
                      : fit_outcome_model(ev_roc, nu.model);
      const bool aipw = est == EstimatorKind::kAipw;
      const RocCurve curve = g_formula_fpr_curve(
          ev_roc, om_roc,
          aipw ? std::span<const double>(nu.pi_values)
               : std::span<const double>());
      out.auc = trapezoid_area(curve);
      out.youden = youden_sup(curve);
      out.ate = aipw ? aipw_ate(ev_raw, nu.pi_values, om_raw)
                     : g_formula_ate(ev_raw, om_raw);
      for (double a : cfg.tpr_alphas) out.tpr[a] = curve_tpr_at(curve, a);
      break;
    }
  }
  return out;
}

TrainerConfig scenario_trainer(const RunConfig& cfg) { return cfg.trainer; }

ModelParams train_once(const RunConfig& cfg, const Dataset& data,
                       std::uint64_t seed) {
  if (cfg.trainer.variant == TrainerVariant::kRidgeClosedForm) {
    return train_ridge(data, cfg.trainer.ridge_lambda);
  }
  return train_dpsgd(data, cfg.trainer, seed);
}

}  // namespace

std::string regime_cell_name(RegimeCell cell) {
  switch (cell) {
    case RegimeCell::kMultiRun: return "multirun";
    case RegimeCell::kOneRun: return "onerun";
    case RegimeCell::kZeroRunRaw: return "zerorun_raw";
    case RegimeCell::kZeroRunOracle: return "zerorun_oracle";
    case RegimeCell::kZeroRunLearned: return "zerorun_learned";
  }
  return "unknown";
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kClassical: return "classical";
    case EstimatorKind::kIpw: return "ipw";
    case EstimatorKind::kGFormula: return "gformula";
    case EstimatorKind::kAipw: return "aipw";
  }
  return "unknown";
}

RunConfig default_config(Scenario scenario) {
  RunConfig cfg;
  cfg.scenario = scenario;
  switch (scenario) {
    case Scenario::kRidgeSynthetic:
    case Scenario::kCustom:
      cfg.dim = 2500;
      cfg.trainer.variant = TrainerVariant::kRidgeClosedForm;
      // calibrated sum-loss regularization for the d=2500 recipe
      cfg.trainer.ridge_lambda = 1.5e4;
      break;
    case Scenario::kDpSgdSynthetic:
      cfg.dim = 400;
      cfg.trainer.variant = TrainerVariant::kDpSgd;
      cfg.trainer.lr = 0.01;
      cfg.trainer.epochs = 75;
      cfg.trainer.batch_size = 128;
      cfg.trainer.clip_norm = 1.0;
      cfg.trainer.noise_sd = std::sqrt(3.0);
      cfg.trainer.l2_lambda = 10.0;
      cfg.trainer.dp_epsilon = 0.602;
      cfg.trainer.dp_delta = 0.01;
      break;
  }
  return cfg;
}

ReportBundle run_scenario(const RunConfig& cfg) {
  if (cfg.regimes.empty() || cfg.estimators.empty()) {
    throw std::invalid_argument("run_scenario: empty regime/estimator list");
  }
  if (cfg.repetitions < 1) {
    throw std::invalid_argument("run_scenario: repetitions < 1");
  }
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(cfg.output_dir);

  // cell grid
  struct CellSlot {
    RegimeCell regime;
    EstimatorKind est;
    std::string label;
    std::vector<CellScalars> reps;
    std::string error;
  };
  std::vector<CellSlot> slots;
  for (RegimeCell rc : cfg.regimes) {
    for (EstimatorKind est : cfg.estimators) {
      if (!estimator_valid(rc, est)) continue;
      slots.push_back({rc, est,
                       regime_cell_name(rc) + "_" + estimator_name(est),
                       {}, ""});
    }
  }
  if (slots.empty()) {
    throw std::invalid_argument(
        "run_scenario: no regime/estimator combination is applicable");
  }

  const AttackSpec attack{AttackKind::kLossBased, ScoreOrientation::kRawLoss};
  ReportBundle bundle;
  bundle.output_dir = cfg.output_dir;
  std::vector<std::uint64_t> rep_seeds;

  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t seed_r = mix_seed(cfg.master_seed, rep);
    rep_seeds.push_back(seed_r);
    ProblemSpec spec = make_problem(mix_seed(seed_r, kProblemTag), cfg.dim,
                                    cfg.corr, cfg.teacher_scale);
    spec.label_noise_sd = cfg.label_noise_sd;

    // shared evidence per regime, built on demand
    std::map<Regime, EvidenceSet> raw;
    auto evidence_for = [&](RegimeCell rc) -> const EvidenceSet& {
      const Regime regime = regime_of(rc);
      auto it = raw.find(regime);
      if (it != raw.end()) return it->second;
      EvidenceSet ev;
      switch (regime) {
        case Regime::kMultiRun:
          ev = run_multirun(spec, scenario_trainer(cfg), attack, cfg.n_train,
                            cfg.n_eval_multirun, AssignmentMode::kBalancedSplit,
                            mix_seed(seed_r, kMultiRunTag));
          break;
        case Regime::kOneRun:
          ev = run_onerun(spec, scenario_trainer(cfg), attack, cfg.n_onerun,
                          AssignmentMode::kBalancedSplit,
                          mix_seed(seed_r, kOneRunTag));
          break;
        case Regime::kZeroRun: {
          const Dataset members = sample_members(
              spec, cfg.n_zerorun, mix_seed(seed_r, kZeroMembersTag));
          const Dataset nonmembers = sample_shifted(
              spec, cfg.n_zerorun, mix_seed(seed_r, kZeroNonMembersTag));
          const ModelParams model =
              train_once(cfg, members, mix_seed(seed_r, kZeroTrainTag));
          ev = run_zerorun(model, members, nonmembers, attack);
          break;
        }
      }
      return raw.emplace(regime, std::move(ev)).first->second;
    };

    std::map<RegimeCell, CellNuisance> nuisances;
    auto nuisance_for = [&](RegimeCell rc,
                            const EvidenceSet& ev) -> const CellNuisance& {
      auto it = nuisances.find(rc);
      if (it != nuisances.end()) return it->second;
      CellNuisance nu;
      if (rc == RegimeCell::kZeroRunOracle) {
        nu.model = clip(oracle_propensity(spec, ev.n1, ev.n0), cfg.eta);
        nu.pi_values = evaluate_propensity(ev, nu.model);
        nu.constant = false;
      } else if (rc == RegimeCell::kZeroRunLearned) {
        const FoldPlan plan = make_fold_plan(ev.records.size(), cfg.folds,
                                             mix_seed(seed_r, kFoldTag));
        CrossFitResult fit = cross_fit(ev, plan);
        nu.pi_values = clip_values(std::move(fit.pi_values), cfg.eta);
        // averaged fold model, kept for the outcome-model direction
        PropensityModel avg = fit.fold_models.front();
        for (std::size_t f = 1; f < fit.fold_models.size(); ++f) {
          avg.intercept += fit.fold_models[f].intercept;
          for (std::size_t j = 0; j < avg.slope.size(); ++j) {
            avg.slope[j] += fit.fold_models[f].slope[j];
          }
        }
        const double inv = 1.0 / static_cast<double>(fit.fold_models.size());
        avg.intercept *= inv;
        for (auto& s : avg.slope) s *= inv;
        nu.model = clip(avg, cfg.eta);
        nu.constant = false;
      } else {
        nu.model = PropensityModel::constant(0.5);
        nu.pi_values.assign(ev.records.size(), 0.5);
        nu.constant = true;
      }
      return nuisances.emplace(rc, std::move(nu)).first->second;
    };

    for (auto& slot : slots) {
      if (!slot.error.empty()) continue;  // cell already failed; skip
      try {
        const EvidenceSet& ev_raw = evidence_for(slot.regime);
        const EvidenceSet ev_roc = flip_orientation(ev_raw);
        const CellNuisance& nu = nuisance_for(slot.regime, ev_raw);
        CellScalars scalars = compute_cell(cfg, ev_raw, ev_roc, slot.est, nu);
        if (rep == 0) {
          RocCurve curve;
          switch (slot.est) {
            case EstimatorKind::kClassical:
              curve = classical_roc(ev_roc);
              break;
            case EstimatorKind::kIpw:
              curve = ipw_roc(ev_roc, nu.pi_values);
              break;
            case EstimatorKind::kGFormula:
            case EstimatorKind::kAipw: {
              const OutcomeModel om =
                  nu.constant ? covariate_free_outcome(ev_roc)
                              : fit_outcome_model(ev_roc, nu.model);
              curve = g_formula_fpr_curve(
                  ev_roc, om,
                  slot.est == EstimatorKind::kAipw
                      ? std::span<const double>(nu.pi_values)
                      : std::span<const double>());
              break;
            }
          }
          const std::string name = "roc_" + slot.label + ".csv";
          write_roc_csv(curve, (fs::path(cfg.output_dir) / name).string());
          bundle.files.push_back(name);
        }
        slot.reps.push_back(std::move(scalars));
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  }

  // DP bound curve is part of every bundle
  {
    const RocCurve bound = dp_roc_bound(cfg.dp_epsilon, cfg.dp_delta);
    write_roc_csv(bound,
                  (fs::path(cfg.output_dir) / "dp_bound.csv").string());
    bundle.files.push_back("dp_bound.csv");
  }

  // aggregate
  bundle.all_ok = true;
  for (const auto& slot : slots) {
    CellResult cell;
    cell.label = slot.label;
    cell.repetitions = slot.reps.size();
    cell.mean.estimator_kind = slot.est;
    cell.mean.regime = regime_of(slot.regime);
    cell.stddev = cell.mean;
    if (!slot.error.empty() || slot.reps.empty()) {
      cell.ok = false;
      cell.error = slot.error.empty() ? "no repetitions completed"
                                      : slot.error;
      bundle.all_ok = false;
      bundle.cells.push_back(std::move(cell));
      continue;
    }
    cell.ok = true;
    const double n = static_cast<double>(slot.reps.size());
    auto mean_sd = [n](auto get, const std::vector<CellScalars>& reps) {
      double m = 0.0;
      for (const auto& r : reps) m += get(r);
      m /= n;
      double v = 0.0;
      for (const auto& r : reps) {
        const double d = get(r) - m;
        v += d * d;
      }
      const double sd = n > 1 ? std::sqrt(v / (n - 1)) : 0.0;
      return std::pair<double, double>(m, sd);
    };
    std::tie(cell.mean.auc, cell.stddev.auc) =
        mean_sd([](const CellScalars& r) { return r.auc; }, slot.reps);
    std::tie(cell.mean.ate, cell.stddev.ate) =
        mean_sd([](const CellScalars& r) { return r.ate; }, slot.reps);
    std::tie(cell.mean.youden_sup, cell.stddev.youden_sup) =
        mean_sd([](const CellScalars& r) { return r.youden; }, slot.reps);
    for (double a : cfg.tpr_alphas) {
      auto [m, sd] = mean_sd(
          [a](const CellScalars& r) { return r.tpr.at(a); }, slot.reps);
      cell.mean.tpr_at_fpr[a] = m;
      cell.stddev.tpr_at_fpr[a] = sd;
    }
    cell.mean.hoeffding_halfwidth = slot.reps.front().hoeffding;
    bundle.cells.push_back(std::move(cell));
  }

  // metrics.csv
  {
    std::ofstream out(fs::path(cfg.output_dir) / "metrics.csv");
    out << "cell,regime,estimator,reps,ok,auc_mean,auc_sd,ate_mean,ate_sd,"
           "youden_mean,youden_sd";
    for (double a : cfg.tpr_alphas) {
      out << ",tpr" << a << "_mean,tpr" << a << "_sd";
    }
    out << ",hoeffding_halfwidth,error\n";
    for (const auto& cell : bundle.cells) {
      out << cell.label << ','
          << (cell.mean.regime == Regime::kMultiRun  ? "multirun"
              : cell.mean.regime == Regime::kOneRun ? "onerun"
                                                    : "zerorun")
          << ',' << estimator_name(cell.mean.estimator_kind) << ','
          << cell.repetitions << ',' << (cell.ok ? "1" : "0") << ','
          << cell.mean.auc << ',' << cell.stddev.auc << ',' << cell.mean.ate
          << ',' << cell.stddev.ate << ',' << cell.mean.youden_sup << ','
          << cell.stddev.youden_sup;
      for (double a : cfg.tpr_alphas) {
        const auto itm = cell.mean.tpr_at_fpr.find(a);
        const auto its = cell.stddev.tpr_at_fpr.find(a);
        out << ',' << (itm == cell.mean.tpr_at_fpr.end() ? 0.0 : itm->second)
            << ','
            << (its == cell.stddev.tpr_at_fpr.end() ? 0.0 : its->second);
      }
      out << ','
          << (cell.mean.hoeffding_halfwidth ? *cell.mean.hoeffding_halfwidth
                                            : 0.0)
          << ',' << '"' << cell.error << '"' << '\n';
    }
    bundle.files.push_back("metrics.csv");
  }

  // metrics.json
  {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& cell : bundle.cells) {
      nlohmann::json c;
      c["cell"] = cell.label;
      c["estimator"] = estimator_name(cell.mean.estimator_kind);
      c["reps"] = cell.repetitions;
      c["ok"] = cell.ok;
      c["error"] = cell.error;
      c["auc"] = {{"mean", cell.mean.auc}, {"sd", cell.stddev.auc}};
      c["ate"] = {{"mean", cell.mean.ate}, {"sd", cell.stddev.ate}};
      c["youden_sup"] = {{"mean", cell.mean.youden_sup},
                         {"sd", cell.stddev.youden_sup}};
      nlohmann::json tprs = nlohmann::json::object();
      for (const auto& [a, v] : cell.mean.tpr_at_fpr) {
        const auto its = cell.stddev.tpr_at_fpr.find(a);
        tprs[std::to_string(a)] = {
            {"mean", v},
            {"sd", its == cell.stddev.tpr_at_fpr.end() ? 0.0 : its->second}};
      }
      c["tpr_at_fpr"] = tprs;
      if (cell.mean.hoeffding_halfwidth) {
        c["hoeffding_halfwidth"] = *cell.mean.hoeffding_halfwidth;
      }
      j.push_back(c);
    }
    std::ofstream out(fs::path(cfg.output_dir) / "metrics.json");
    out << j.dump(2) << '\n';
    bundle.files.push_back("metrics.json");
  }

  if (cfg.write_svg) {
    render_roc(cfg.output_dir, true);
    bundle.files.push_back("roc.svg");
  }

  // manifest last so it can hash every other output
  {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    nlohmann::json m;
    m["config"] = nlohmann::json::parse(config_to_json(cfg));
    m["master_seed"] = cfg.master_seed;
    m["repetition_seeds"] = rep_seeds;
    m["wall_time_ms"] = elapsed.count();
    const char* env_threads = std::getenv("MIA_THREADS");
    m["parallelism"] = env_threads
                           ? std::stoul(env_threads)
                           : static_cast<unsigned long>(
                                 std::thread::hardware_concurrency());
    m["all_ok"] = bundle.all_ok;
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& cell : bundle.cells) {
      if (!cell.ok) failures.push_back({{"cell", cell.label},
                                        {"error", cell.error}});
    }
    m["failures"] = failures;
    std::sort(bundle.files.begin(), bundle.files.end());
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : bundle.files) {
      files.push_back(
          {{"path", f},
           {"fnv1a64", hex64(fnv1a_file(fs::path(cfg.output_dir) / f))}});
    }
    m["files"] = files;
    std::ofstream out(fs::path(cfg.output_dir) / "manifest.json");
    out << m.dump(2) << '\n';
    bundle.files.push_back("manifest.json");
  }
  return bundle;
}

// --- rendering ---

namespace {

std::vector<RocPoint> read_roc_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<RocPoint> points;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RocPoint p;
    std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.fpr, &p.tpr, &p.threshold);
    points.push_back(p);
  }
  return points;
}

}  // namespace

std::vector<std::string> render_roc(const std::string& bundle_dir,
                                    bool with_dp_bound) {
  const fs::path dir(bundle_dir);
  std::vector<std::string> curve_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("roc_", 0) == 0 && name.size() > 8 &&
        name.substr(name.size() - 4) == ".csv") {
      curve_files.push_back(name);
    }
  }
  std::sort(curve_files.begin(), curve_files.end());

  constexpr int kSize = 640;
  constexpr int kMargin = 60;
  constexpr double kPlot = kSize - 2.0 * kMargin;
  auto px = [&](double fpr) { return kMargin + fpr * kPlot; };
  auto py = [&](double tpr) { return kSize - kMargin - tpr * kPlot; };
  const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                           "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize
      << "\" height=\"" << kSize << "\" viewBox=\"0 0 " << kSize << ' '
      << kSize << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
      << kPlot << "\" height=\"" << kPlot
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1)
      << "\" y2=\"" << py(1)
      << "\" stroke=\"#aaaaaa\" stroke-dasharray=\"4 4\"/>\n";
  svg << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize - 15
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">FPR</text>\n";
  svg << "<text x=\"18\" y=\"" << kSize / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\" transform=\"rotate(-90 18 "
      << kSize / 2 << ")\">TPR</text>\n";

  std::vector<std::string> missing;
  auto draw = [&](const std::vector<RocPoint>& pts, const std::string& color,
                  const std::string& dash) {
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"";
    if (!dash.empty()) svg << " stroke-dasharray=\"" << dash << "\"";
    svg << " points=\"";
    char buf[64];
    for (const auto& p : pts) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(p.fpr), py(p.tpr));
      svg << buf;
    }
    svg << "\"/>\n";
  };

  int color_idx = 0;
  int legend_y = kMargin + 20;
  for (const auto& name : curve_files) {
    std::vector<RocPoint> pts;
    try {
      pts = read_roc_csv(dir / name);
    } catch (const std::exception&) {
      missing.push_back(name);
      continue;
    }
    const std::string color = palette[color_idx % 8];
    ++color_idx;
    draw(pts, color, "");
    const std::string label = name.substr(4, name.size() - 8);
    svg << "<line x1=\"" << kMargin + 10 << "\" y1=\"" << legend_y
        << "\" x2=\"" << kMargin + 40 << "\" y2=\"" << legend_y
        << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << kMargin + 46 << "\" y=\"" << legend_y + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << label
        << "</text>\n";
    legend_y += 18;
  }
  if (with_dp_bound) {
    const fs::path bound_path = dir / "dp_bound.csv";
    if (fs::exists(bound_path)) {
      draw(read_roc_csv(bound_path), "#000000", "6 3");
      svg << "<line x1=\"" << kMargin + 10 << "\" y1=\"" << legend_y
          << "\" x2=\"" << kMargin + 40 << "\" y2=\"" << legend_y
          << "\" stroke=\"#000000\" stroke-width=\"1.5\" "
             "stroke-dasharray=\"6 3\"/>\n";
      svg << "<text x=\"" << kMargin + 46 << "\" y=\"" << legend_y + 4
          << "\" font-family=\"sans-serif\" font-size=\"12\">dp_bound"
          << "</text>\n";
    } else {
      missing.push_back("dp_bound.csv");
    }
  }
  svg << "</svg>\n";

  std::ofstream out(dir / "roc.svg");
  out << svg.str();
  return missing;
}

void reaggregate_bundle(const std::string& bundle_dir) {
  const fs::path dir(bundle_dir);
  std::ifstream in(dir / "metrics.json");
  if (!in) throw std::runtime_error("no metrics.json in " + bundle_dir);
  nlohmann::json j;
  in >> j;
  // recover the alpha grid from the first cell so the header matches
  // the one run_scenario wrote
  std::vector<double> alphas;
  if (!j.empty()) {
    for (const auto& [k, v] : j.front().at("tpr_at_fpr").items()) {
      alphas.push_back(std::stod(k));
    }
    std::sort(alphas.begin(), alphas.end());
  }
  std::ofstream out(dir / "metrics.csv");
  out << "cell,regime,estimator,reps,ok,auc_mean,auc_sd,ate_mean,ate_sd,"
         "youden_mean,youden_sd";
  for (double a : alphas) out << ",tpr" << a << "_mean,tpr" << a << "_sd";
  out << ",hoeffding_halfwidth,error\n";
  for (const auto& c : j) {
    const std::string label = c.at("cell").get<std::string>();
    const std::string regime = label.rfind("multirun", 0) == 0 ? "multirun"
                               : label.rfind("onerun", 0) == 0
                                   ? "onerun"
                                   : "zerorun";
    out << label << ',' << regime << ','
        << c.at("estimator").get<std::string>() << ','
        << c.at("reps").get<std::size_t>() << ','
        << (c.at("ok").get<bool>() ? "1" : "0") << ','
        << c.at("auc").at("mean").get<double>() << ','
        << c.at("auc").at("sd").get<double>() << ','
        << c.at("ate").at("mean").get<double>() << ','
        << c.at("ate").at("sd").get<double>() << ','
        << c.at("youden_sup").at("mean").get<double>() << ','
        << c.at("youden_sup").at("sd").get<double>();
    for (double a : alphas) {
      const auto it = c.at("tpr_at_fpr").find(std::to_string(a));
      if (it == c.at("tpr_at_fpr").end()) {
        out << ",0,0";
      } else {
        out << ',' << it->at("mean").get<double>() << ','
            << it->at("sd").get<double>();
      }
    }
    out << ',' << c.value("hoeffding_halfwidth", 0.0) << ",\""
        << c.at("error").get<std::string>() << "\"\n";
  }
}

// --- configuration ---

namespace {

struct TomlValue {
  enum class Kind { kString, kNumber, kBool, kArray } kind = Kind::kString;
  std::string str;
  double num = 0.0;
  bool flag = false;
  std::vector<TomlValue> items;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

TomlValue parse_value(const std::string& raw);

TomlValue parse_array(const std::string& raw) {
  TomlValue v;
  v.kind = TomlValue::Kind::kArray;
  std::string inner = trim(raw.substr(1, raw.size() - 2));
  while (!inner.empty()) {
    std::size_t end;
    if (inner.front() == '"') {
      end = inner.find('"', 1);
      if (end == std::string::npos) throw std::invalid_argument("toml: bad string");
      ++end;
    } else {
      end = inner.find(',');
      if (end == std::string::npos) end = inner.size();
    }
    v.items.push_back(parse_value(trim(inner.substr(0, end))));
    const auto comma = inner.find(',', end);
    inner = comma == std::string::npos ? "" : trim(inner.substr(comma + 1));
  }
  return v;
}

TomlValue parse_value(const std::string& raw) {
  TomlValue v;
  if (raw.empty()) throw std::invalid_argument("toml: empty value");
  if (raw.front() == '[') return parse_array(raw);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') {
      throw std::invalid_argument("toml: unterminated string");
    }
    v.kind = TomlValue::Kind::kString;
    v.str = raw.substr(1, raw.size() - 2);
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = TomlValue::Kind::kBool;
    v.flag = raw == "true";
    return v;
  }
  v.kind = TomlValue::Kind::kNumber;
  std::size_t used = 0;
  v.num = std::stod(raw, &used);
  if (used != raw.size()) {
    throw std::invalid_argument("toml: bad number '" + raw + "'");
  }
  return v;
}

std::map<std::string, TomlValue> parse_toml(const std::string& text) {
  std::map<std::string, TomlValue> out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("toml: bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("toml: expected key = value: " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    out[full] = parse_value(trim(line.substr(eq + 1)));
  }
  return out;
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "ridge" || s == "ridge_synthetic") return Scenario::kRidgeSynthetic;
  if (s == "dpsgd" || s == "dpsgd_synthetic") return Scenario::kDpSgdSynthetic;
  if (s == "custom") return Scenario::kCustom;
  throw std::invalid_argument("unknown scenario: " + s);
}

RegimeCell regime_cell_from_string(const std::string& s) {
  if (s == "multirun") return RegimeCell::kMultiRun;
  if (s == "onerun") return RegimeCell::kOneRun;
  if (s == "zerorun_raw") return RegimeCell::kZeroRunRaw;
  if (s == "zerorun_oracle") return RegimeCell::kZeroRunOracle;
  if (s == "zerorun_learned") return RegimeCell::kZeroRunLearned;
  throw std::invalid_argument("unknown regime: " + s);
}

EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "classical") return EstimatorKind::kClassical;
  if (s == "ipw") return EstimatorKind::kIpw;
  if (s == "gformula") return EstimatorKind::kGFormula;
  if (s == "aipw") return EstimatorKind::kAipw;
  throw std::invalid_argument("unknown estimator: " + s);
}

}  // namespace

RunConfig config_from_toml(const std::string& text) {
  const auto kv = parse_toml(text);
  Scenario scenario = Scenario::kRidgeSynthetic;
  if (auto it = kv.find("scenario"); it != kv.end()) {
    scenario = scenario_from_string(it->second.str);
  }
  RunConfig cfg = default_config(scenario);
  for (const auto& [key, v] : kv) {
    if (key == "scenario") {
      continue;
    } else if (key == "repetitions") {
      cfg.repetitions = static_cast<std::size_t>(v.num);
    } else if (key == "master_seed") {
      cfg.master_seed = static_cast<std::uint64_t>(v.num);
    } else if (key == "output_dir") {
      cfg.output_dir = v.str;
    } else if (key == "write_svg") {
      cfg.write_svg = v.flag;
    } else if (key == "regimes") {
      cfg.regimes.clear();
      for (const auto& item : v.items) {
        cfg.regimes.push_back(regime_cell_from_string(item.str));
      }
    } else if (key == "estimators") {
      cfg.estimators.clear();
      for (const auto& item : v.items) {
        cfg.estimators.push_back(estimator_from_string(item.str));
      }
    } else if (key == "problem.dim") {
      cfg.dim = static_cast<std::size_t>(v.num);
    } else if (key == "problem.corr") {
      cfg.corr = v.num;
    } else if (key == "problem.label_noise_sd") {
      cfg.label_noise_sd = v.num;
    } else if (key == "problem.teacher_scale") {
      if (v.str == "unit") {
        cfg.teacher_scale = TeacherScale::kUnitNorm;
      } else if (v.str == "gaussian") {
        cfg.teacher_scale = TeacherScale::kGaussianNorm;
      } else {
        throw std::invalid_argument("unknown teacher_scale: " + v.str);
      }
    } else if (key == "trainer.variant") {
      if (v.str == "ridge") {
        cfg.trainer.variant = TrainerVariant::kRidgeClosedForm;
      } else if (v.str == "dpsgd") {
        cfg.trainer.variant = TrainerVariant::kDpSgd;
      } else {
        throw std::invalid_argument("unknown trainer variant: " + v.str);
      }
    } else if (key == "trainer.ridge_lambda") {
      cfg.trainer.ridge_lambda = v.num;
    } else if (key == "trainer.lr") {
      cfg.trainer.lr = v.num;
    } else if (key == "trainer.epochs") {
      cfg.trainer.epochs = static_cast<std::size_t>(v.num);
    } else if (key == "trainer.batch_size") {
      cfg.trainer.batch_size = static_cast<std::size_t>(v.num);
    } else if (key == "trainer.clip_norm") {
      cfg.trainer.clip_norm = v.num;
    } else if (key == "trainer.noise_sd") {
      cfg.trainer.noise_sd = v.num;
    } else if (key == "trainer.l2_lambda") {
      cfg.trainer.l2_lambda = v.num;
    } else if (key == "trainer.dp_epsilon") {
      cfg.trainer.dp_epsilon = v.num;
    } else if (key == "trainer.dp_delta") {
      cfg.trainer.dp_delta = v.num;
    } else if (key == "sizes.n_train") {
      cfg.n_train = static_cast<std::size_t>(v.num);
    } else if (key == "sizes.n_eval_multirun") {
      cfg.n_eval_multirun = static_cast<std::size_t>(v.num);
    } else if (key == "sizes.n_onerun") {
      cfg.n_onerun = static_cast<std::size_t>(v.num);
    } else if (key == "sizes.n_zerorun") {
      cfg.n_zerorun = static_cast<std::size_t>(v.num);
    } else if (key == "propensity.eta") {
      cfg.eta = v.num;
    } else if (key == "propensity.folds") {
      cfg.folds = static_cast<std::size_t>(v.num);
    } else if (key == "metrics.tpr_alphas") {
      cfg.tpr_alphas.clear();
      for (const auto& item : v.items) cfg.tpr_alphas.push_back(item.num);
    } else if (key == "metrics.hoeffding_t") {
      cfg.hoeffding_t = v.num;
    } else if (key == "metrics.dp_epsilon") {
      cfg.dp_epsilon = v.num;
    } else if (key == "metrics.dp_delta") {
      cfg.dp_delta = v.num;
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return config_from_toml(text.str());
}

std::string config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["scenario"] = cfg.scenario == Scenario::kRidgeSynthetic ? "ridge"
                  : cfg.scenario == Scenario::kDpSgdSynthetic
                      ? "dpsgd"
                      : "custom";
  nlohmann::json regimes = nlohmann::json::array();
  for (RegimeCell rc : cfg.regimes) regimes.push_back(regime_cell_name(rc));
  j["regimes"] = regimes;
  nlohmann::json ests = nlohmann::json::array();
  for (EstimatorKind e : cfg.estimators) ests.push_back(estimator_name(e));
  j["estimators"] = ests;
  j["repetitions"] = cfg.repetitions;
  j["master_seed"] = cfg.master_seed;
  j["output_dir"] = cfg.output_dir;
  j["write_svg"] = cfg.write_svg;
  j["problem"] = {{"dim", cfg.dim},
                  {"corr", cfg.corr},
                  {"label_noise_sd", cfg.label_noise_sd},
                  {"teacher_scale",
                   cfg.teacher_scale == TeacherScale::kUnitNorm ? "unit"
                                                                : "gaussian"}};
  j["trainer"] = nlohmann::json::parse(trainer_config_to_json(cfg.trainer));
  j["sizes"] = {{"n_train", cfg.n_train},
                {"n_eval_multirun", cfg.n_eval_multirun},
                {"n_onerun", cfg.n_onerun},
                {"n_zerorun", cfg.n_zerorun}};
  j["propensity"] = {{"eta", cfg.eta}, {"folds", cfg.folds}};
  j["metrics"] = {{"tpr_alphas", cfg.tpr_alphas},
                  {"hoeffding_t", cfg.hoeffding_t},
                  {"dp_epsilon", cfg.dp_epsilon},
                  {"dp_delta", cfg.dp_delta}};
  return j.dump(2);
}

}  // namespace mia
