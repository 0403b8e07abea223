#pragma once

#include <cstdint>
#include <vector>

#include "physloop/episode.hpp"

namespace physloop {

// ---------------------------------------------------------------------------
// Feature vector layout
// ---------------------------------------------------------------------------
// [0..2]  scenario-kind one-hot
// [3]     cycle index / T (1-based)
// [4..5]  most recent verifier SA, PC (0 when no video scored yet)
// [6]     a validated computation exists in memory
// [7]     a keyframe set exists in memory
// [8]     the prompt has been refined
// [9]     prior generation count / T

inline constexpr int kFeatureDim = 10;

ScenarioKind kind_from_features(const StateFeatures& f);

// ---------------------------------------------------------------------------
// Factored action space
// ---------------------------------------------------------------------------
// Factors are sampled in the order below. SolverMode is only drawn on
// collision scenes when the solver factor selected a call, so the factor
// count of an action is 4 or 5.

inline constexpr int kNumFactors = 5;
inline constexpr int kFactorCardinality[kNumFactors] = {3, 2, 4, 4, 2};

// Solver factor: 0 skip, 1 observable inputs, 2 decoy inputs.
// SolverMode factor: 0 elastic, 1 perfectly inelastic.
// Keyframes factor: 0 skip, then one of the fixed position sets below.
// Refiner factor: 0 skip, then one of the fixed flag sets below.
// Generate factor: 0 no, 1 yes.

const std::vector<double>& keyframe_position_set(int choice);  // choice 1..3
std::uint32_t refiner_flag_set(int choice);                    // choice 1..3

// Rebuilds tool calls and the generate flag from sampled factor indices.
Action action_from_factors(const std::vector<DecisionFactor>& factors);

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

// Linear-softmax policy: one weight matrix per factor mapping features to
// logits. Weights are stored concatenated row-major; the same shape doubles
// as the gradient type.
struct PolicyParams {
  int feature_dim = kFeatureDim;
  std::vector<int> cardinalities;
  std::vector<double> w;
  std::uint64_t version = 0;

  static PolicyParams zeros();

  int factor_offset(int factor) const;
  double& at(int factor, int row, int col);
  double at(int factor, int row, int col) const;

  void add_scaled(const PolicyParams& g, double scale);  // w += scale * g.w
  bool same_shape(const PolicyParams& other) const;

  bool operator==(const PolicyParams&) const = default;
};

// Per-factor log-probabilities of the chosen indices for one action.
struct FactorLogProbs {
  std::vector<double> logp;

  std::size_t size() const { return logp.size(); }
};

// Constant action choices, silently expressed as saturated logits; used for
// scripted rollouts and forced-action tests.
struct ForcedChoices {
  int solver = 0;
  int solver_mode = 0;
  int keyframes = 0;
  int refiner = 0;
  int generate = 0;
};

PolicyParams forced_policy(const ForcedChoices& choices);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

StateFeatures featurize(const MemoryPool& memory, int T);

struct SampledAction {
  Action action;
  FactorLogProbs logprobs;
};

SampledAction sample_action(const PolicyParams& params,
                            const StateFeatures& features, std::uint64_t seed);

// Exact log-probabilities of an already-chosen action. Throws
// std::out_of_range when a factor index exceeds its cardinality.
FactorLogProbs log_prob(const PolicyParams& params,
                        const StateFeatures& features, const Action& action);

// Analytic gradient of log pi(action | features) with PolicyParams shape.
PolicyParams grad_log_prob(const PolicyParams& params,
                           const StateFeatures& features, const Action& action);

struct KlEntropy {
  double kl = 0.0;
  double entropy = 0.0;
};

// Closed-form KL(params || reference) and entropy of the factored action
// distribution, averaged over the feature batch. The SolverMode factor
// contributes weighted by the probability that it is drawn.
KlEntropy kl_and_entropy(const PolicyParams& params,
                         const PolicyParams& reference,
                         const std::vector<StateFeatures>& features_batch);

struct KlEntropyGrad {
  double kl = 0.0;
  double entropy = 0.0;
  PolicyParams kl_grad;       // d kl / d params
  PolicyParams entropy_grad;  // d entropy / d params
};

KlEntropyGrad kl_and_entropy_with_grad(
    const PolicyParams& params, const PolicyParams& reference,
    const std::vector<StateFeatures>& features_batch);

// Per-factor probabilities at one state; exposed for distribution tests.
std::vector<double> factor_probs(const PolicyParams& params,
                                 const StateFeatures& features, int factor);

}  // namespace physloop
