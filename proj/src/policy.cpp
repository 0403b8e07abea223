#include "physloop/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "physloop/rng.hpp"

namespace physloop {

namespace {

constexpr double kSaturatedLogit = 1e4;

int factor_index(FactorId id) { return static_cast<int>(id); }

// Log-softmax of one factor's logits at `x`. Numerically stable; entries are
// finite whenever the weights are.
std::vector<double> factor_log_probs(const PolicyParams& p,
                                     const std::vector<double>& x, int factor) {
  const int card = p.cardinalities[static_cast<std::size_t>(factor)];
  std::vector<double> z(static_cast<std::size_t>(card), 0.0);
  for (int k = 0; k < card; ++k) {
    double dot = 0.0;
    for (int d = 0; d < p.feature_dim; ++d) dot += p.at(factor, k, d) * x[static_cast<std::size_t>(d)];
    z[static_cast<std::size_t>(k)] = dot;
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  const double lse = zmax + std::log(sum);
  for (double& v : z) v -= lse;
  return z;
}

std::vector<double> probs_from_logp(const std::vector<double>& logp) {
  std::vector<double> p(logp.size());
  for (std::size_t i = 0; i < logp.size(); ++i) p[i] = std::exp(logp[i]);
  return p;
}

int sample_index(const std::vector<double>& probs, double u) {
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

bool solver_mode_applies(ScenarioKind kind, int solver_choice) {
  return kind == ScenarioKind::Collision1D && solver_choice != 0;
}

void check_factor(const DecisionFactor& f) {
  const int idx = factor_index(f.id);
  if (idx < 0 || idx >= kNumFactors)
    throw std::out_of_range("unknown decision factor");
  if (f.cardinality != kFactorCardinality[idx])
    throw std::out_of_range("decision factor cardinality mismatch");
  if (f.chosen < 0 || f.chosen >= f.cardinality)
    throw std::out_of_range("decision factor index out of range");
}

}  // namespace

ScenarioKind kind_from_features(const StateFeatures& f) {
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (f.v[static_cast<std::size_t>(i)] > f.v[static_cast<std::size_t>(best)]) best = i;
  return static_cast<ScenarioKind>(best);
}

const std::vector<double>& keyframe_position_set(int choice) {
  static const std::vector<double> sets[3] = {
      {0.0, 1.0}, {0.0, 0.5, 1.0}, {0.5}};
  if (choice < 1 || choice > 3)
    throw std::out_of_range("keyframe position set choice");
  return sets[choice - 1];
}

std::uint32_t refiner_flag_set(int choice) {
  switch (choice) {
    case 1: return detail_flag::kInitialConditions;
    case 2: return detail_flag::kInitialConditions | detail_flag::kOutcome;
    case 3: return detail_flag::kAll;
  }
  throw std::out_of_range("refiner flag set choice");
}

Action action_from_factors(const std::vector<DecisionFactor>& factors) {
  Action a;
  a.decision_factors = factors;
  int solver_choice = 0;
  CollisionMode mode = CollisionMode::Elastic;
  int keyframe_choice = 0;
  int refiner_choice = 0;
  for (const auto& f : factors) {
    check_factor(f);
    switch (f.id) {
      case FactorId::Solver: solver_choice = f.chosen; break;
      case FactorId::SolverMode:
        mode = f.chosen == 0 ? CollisionMode::Elastic
                             : CollisionMode::PerfectlyInelastic;
        break;
      case FactorId::Keyframes: keyframe_choice = f.chosen; break;
      case FactorId::Refiner: refiner_choice = f.chosen; break;
      case FactorId::Generate: a.generate = f.chosen == 1; break;
    }
  }
  if (solver_choice != 0) {
    SolverArgs args;
    args.source = solver_choice == 1 ? SolverInputSource::Observables
                                     : SolverInputSource::Decoy;
    args.mode = mode;
    a.tool_calls.push_back({ToolName::NumericSolver, args});
  }
  if (keyframe_choice != 0) {
    KeyframeArgs args;
    args.positions = keyframe_position_set(keyframe_choice);
    a.tool_calls.push_back({ToolName::KeyframeGen, args});
  }
  if (refiner_choice != 0) {
    RefinerArgs args;
    args.flags = refiner_flag_set(refiner_choice);
    a.tool_calls.push_back({ToolName::PromptRefiner, args});
  }
  return a;
}

PolicyParams PolicyParams::zeros() {
  PolicyParams p;
  p.cardinalities.assign(kFactorCardinality, kFactorCardinality + kNumFactors);
  int rows = 0;
  for (int c : p.cardinalities) rows += c;
  p.w.assign(static_cast<std::size_t>(rows * p.feature_dim), 0.0);
  return p;
}

int PolicyParams::factor_offset(int factor) const {
  int rows = 0;
  for (int f = 0; f < factor; ++f) rows += cardinalities[static_cast<std::size_t>(f)];
  return rows * feature_dim;
}

double& PolicyParams::at(int factor, int row, int col) {
  return w[static_cast<std::size_t>(factor_offset(factor) + row * feature_dim + col)];
}

double PolicyParams::at(int factor, int row, int col) const {
  return w[static_cast<std::size_t>(factor_offset(factor) + row * feature_dim + col)];
}

void PolicyParams::add_scaled(const PolicyParams& g, double scale) {
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += scale * g.w[i];
}

bool PolicyParams::same_shape(const PolicyParams& other) const {
  return feature_dim == other.feature_dim &&
         cardinalities == other.cardinalities && w.size() == other.w.size();
}

PolicyParams forced_policy(const ForcedChoices& choices) {
  PolicyParams p = PolicyParams::zeros();
  const int chosen[kNumFactors] = {choices.solver, choices.solver_mode,
                                   choices.keyframes, choices.refiner,
                                   choices.generate};
  for (int f = 0; f < kNumFactors; ++f) {
    // Saturate the chosen row on every feature; the feature vector always has
    // positive mass (kind one-hot plus cycle index), so the logit dominates.
    for (int d = 0; d < p.feature_dim; ++d)
      p.at(f, chosen[f], d) = kSaturatedLogit;
  }
  return p;
}

StateFeatures featurize(const MemoryPool& memory, int T) {
  StateFeatures f;
  f.v.assign(kFeatureDim, 0.0);
  f.v[static_cast<std::size_t>(memory.query.scenario_kind)] = 1.0;
  f.v[3] = static_cast<double>(memory.entries.size() + 1) / std::max(T, 1);

  int generations = 0;
  bool found_score = false;
  for (auto it = memory.entries.rbegin(); it != memory.entries.rend(); ++it) {
    if (it->verifier_score) {
      ++generations;
      if (!found_score) {
        f.v[4] = it->verifier_score->sa;
        f.v[5] = it->verifier_score->pc;
        found_score = true;
      }
    }
  }
  for (const auto& entry : memory.entries) {
    for (const auto& obs : entry.tool_outputs) {
      if (obs.violation) continue;
      if (obs.source == ObservationSource::NumericSolver && obs.valid)
        f.v[6] = 1.0;
      if (obs.source == ObservationSource::KeyframeGen) f.v[7] = 1.0;
      if (obs.source == ObservationSource::PromptRefiner) f.v[8] = 1.0;
    }
  }
  f.v[9] = static_cast<double>(generations) / std::max(T, 1);
  return f;
}

SampledAction sample_action(const PolicyParams& params,
                            const StateFeatures& features,
                            std::uint64_t seed) {
  Rng rng(seed);
  const ScenarioKind kind = kind_from_features(features);

  std::vector<DecisionFactor> factors;
  FactorLogProbs lps;
  auto draw = [&](FactorId id) {
    const int fi = factor_index(id);
    const auto logp = factor_log_probs(params, features.v, fi);
    const int k = sample_index(probs_from_logp(logp), rng.uniform01());
    factors.push_back({id, k, kFactorCardinality[fi]});
    lps.logp.push_back(logp[static_cast<std::size_t>(k)]);
    return k;
  };

  const int solver_choice = draw(FactorId::Solver);
  if (solver_mode_applies(kind, solver_choice)) draw(FactorId::SolverMode);
  draw(FactorId::Keyframes);
  draw(FactorId::Refiner);
  draw(FactorId::Generate);

  return {action_from_factors(factors), std::move(lps)};
}

FactorLogProbs log_prob(const PolicyParams& params,
                        const StateFeatures& features, const Action& action) {
  FactorLogProbs lps;
  for (const auto& f : action.decision_factors) {
    check_factor(f);
    const auto logp = factor_log_probs(params, features.v, factor_index(f.id));
    lps.logp.push_back(logp[static_cast<std::size_t>(f.chosen)]);
  }
  return lps;
}

PolicyParams grad_log_prob(const PolicyParams& params,
                           const StateFeatures& features,
                           const Action& action) {
  PolicyParams grad = PolicyParams::zeros();
  for (const auto& f : action.decision_factors) {
    check_factor(f);
    const int fi = factor_index(f.id);
    const auto p = probs_from_logp(factor_log_probs(params, features.v, fi));
    for (int k = 0; k < kFactorCardinality[fi]; ++k) {
      const double coeff = (k == f.chosen ? 1.0 : 0.0) - p[static_cast<std::size_t>(k)];
      if (coeff == 0.0) continue;
      for (int d = 0; d < params.feature_dim; ++d)
        grad.at(fi, k, d) += coeff * features.v[static_cast<std::size_t>(d)];
    }
  }
  return grad;
}

namespace {

struct FactorKlEntropy {
  double kl = 0.0;
  double entropy = 0.0;
  std::vector<double> p;
  std::vector<double> dkl_dz;       // p * (logp - logq - kl)
  std::vector<double> dentropy_dz;  // -p * (logp + entropy)
};

FactorKlEntropy factor_kl_entropy(const PolicyParams& params,
                                  const PolicyParams& reference,
                                  const std::vector<double>& x, int factor) {
  FactorKlEntropy out;
  const auto logp = factor_log_probs(params, x, factor);
  const auto logq = factor_log_probs(reference, x, factor);
  out.p = probs_from_logp(logp);
  for (std::size_t k = 0; k < out.p.size(); ++k) {
    if (out.p[k] > 0.0) {
      out.kl += out.p[k] * (logp[k] - logq[k]);
      out.entropy -= out.p[k] * logp[k];
    }
  }
  out.dkl_dz.resize(out.p.size());
  out.dentropy_dz.resize(out.p.size());
  for (std::size_t k = 0; k < out.p.size(); ++k) {
    out.dkl_dz[k] = out.p[k] * (logp[k] - logq[k] - out.kl);
    out.dentropy_dz[k] = -out.p[k] * (logp[k] + out.entropy);
  }
  return out;
}

}  // namespace

KlEntropy kl_and_entropy(const PolicyParams& params,
                         const PolicyParams& reference,
                         const std::vector<StateFeatures>& features_batch) {
  if (!params.same_shape(reference))
    throw std::invalid_argument("policy/reference shape mismatch");
  KlEntropy out;
  if (features_batch.empty()) return out;
  for (const auto& features : features_batch) {
    const ScenarioKind kind = kind_from_features(features);
    const auto solver =
        factor_kl_entropy(params, reference, features.v,
                          factor_index(FactorId::Solver));
    out.kl += solver.kl;
    out.entropy += solver.entropy;
    if (kind == ScenarioKind::Collision1D) {
      // SolverMode is drawn only after a non-skip solver choice, so its
      // contribution is weighted by that probability.
      const double p_act = solver.p[1] + solver.p[2];
      const auto mode = factor_kl_entropy(params, reference, features.v,
                                          factor_index(FactorId::SolverMode));
      out.kl += p_act * mode.kl;
      out.entropy += p_act * mode.entropy;
    }
    for (FactorId id :
         {FactorId::Keyframes, FactorId::Refiner, FactorId::Generate}) {
      const auto f =
          factor_kl_entropy(params, reference, features.v, factor_index(id));
      out.kl += f.kl;
      out.entropy += f.entropy;
    }
  }
  const double n = static_cast<double>(features_batch.size());
  out.kl /= n;
  out.entropy /= n;
  return out;
}

KlEntropyGrad kl_and_entropy_with_grad(
    const PolicyParams& params, const PolicyParams& reference,
    const std::vector<StateFeatures>& features_batch) {
  if (!params.same_shape(reference))
    throw std::invalid_argument("policy/reference shape mismatch");
  KlEntropyGrad out;
  out.kl_grad = PolicyParams::zeros();
  out.entropy_grad = PolicyParams::zeros();
  if (features_batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(features_batch.size());

  auto add_rows = [&](PolicyParams& grad, int factor,
                      const std::vector<double>& dz,
                      const std::vector<double>& x, double scale) {
    for (std::size_t k = 0; k < dz.size(); ++k) {
      const double c = scale * dz[k];
      if (c == 0.0) continue;
      for (int d = 0; d < params.feature_dim; ++d)
        grad.at(factor, static_cast<int>(k), d) += c * x[static_cast<std::size_t>(d)];
    }
  };

  for (const auto& features : features_batch) {
    const ScenarioKind kind = kind_from_features(features);
    const int solver_fi = factor_index(FactorId::Solver);
    const auto solver =
        factor_kl_entropy(params, reference, features.v, solver_fi);
    out.kl += inv_n * solver.kl;
    out.entropy += inv_n * solver.entropy;
    add_rows(out.kl_grad, solver_fi, solver.dkl_dz, features.v, inv_n);
    add_rows(out.entropy_grad, solver_fi, solver.dentropy_dz, features.v,
             inv_n);

    if (kind == ScenarioKind::Collision1D) {
      const int mode_fi = factor_index(FactorId::SolverMode);
      const double p_act = solver.p[1] + solver.p[2];
      const auto mode = factor_kl_entropy(params, reference, features.v, mode_fi);
      out.kl += inv_n * p_act * mode.kl;
      out.entropy += inv_n * p_act * mode.entropy;

      // d/dz_solver of p_act * K: K * p_s * (1[s activates] - p_act).
      std::vector<double> dpact(solver.p.size());
      for (std::size_t s = 0; s < solver.p.size(); ++s) {
        const double indicator = s == 0 ? 0.0 : 1.0;
        dpact[s] = solver.p[s] * (indicator - p_act);
      }
      std::vector<double> dz(solver.p.size());
      for (std::size_t s = 0; s < dz.size(); ++s) dz[s] = mode.kl * dpact[s];
      add_rows(out.kl_grad, solver_fi, dz, features.v, inv_n);
      for (std::size_t s = 0; s < dz.size(); ++s) dz[s] = mode.entropy * dpact[s];
      add_rows(out.entropy_grad, solver_fi, dz, features.v, inv_n);

      add_rows(out.kl_grad, mode_fi, mode.dkl_dz, features.v, inv_n * p_act);
      add_rows(out.entropy_grad, mode_fi, mode.dentropy_dz, features.v,
               inv_n * p_act);
    }

    for (FactorId id :
         {FactorId::Keyframes, FactorId::Refiner, FactorId::Generate}) {
      const int fi = factor_index(id);
      const auto f = factor_kl_entropy(params, reference, features.v, fi);
      out.kl += inv_n * f.kl;
      out.entropy += inv_n * f.entropy;
      add_rows(out.kl_grad, fi, f.dkl_dz, features.v, inv_n);
      add_rows(out.entropy_grad, fi, f.dentropy_dz, features.v, inv_n);
    }
  }
  return out;
}

std::vector<double> factor_probs(const PolicyParams& params,
                                 const StateFeatures& features, int factor) {
  return probs_from_logp(factor_log_probs(params, features.v, factor));
}

}  // namespace physloop
