#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "physloop/toolbox.hpp"

namespace physloop {

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

enum class ToolName { NumericSolver, KeyframeGen, PromptRefiner };

// Numeric solver inputs are either the query's observable parameters or a
// perturbed decoy set drawn at dispatch time.
enum class SolverInputSource { Observables, Decoy };

struct SolverArgs {
  SolverInputSource source = SolverInputSource::Observables;
  CollisionMode mode = CollisionMode::Elastic;  // used for collision scenes

  bool operator==(const SolverArgs&) const = default;
};

struct KeyframeArgs {
  std::vector<double> positions;

  bool operator==(const KeyframeArgs&) const = default;
};

struct RefinerArgs {
  std::uint32_t flags = 0;

  bool operator==(const RefinerArgs&) const = default;
};

using ToolArgs = std::variant<SolverArgs, KeyframeArgs, RefinerArgs>;

struct ToolInvocation {
  ToolName tool = ToolName::NumericSolver;
  ToolArgs args;

  bool operator==(const ToolInvocation&) const = default;
};

// One categorical decision made by the planner. The ordered factor list
// reconstructs the tool calls and generate flag deterministically; its length
// is the |a| used when averaging the surrogate objective.
enum class FactorId { Solver, SolverMode, Keyframes, Refiner, Generate };

struct DecisionFactor {
  FactorId id = FactorId::Solver;
  int chosen = 0;
  int cardinality = 0;

  bool operator==(const DecisionFactor&) const = default;
};

struct Action {
  std::vector<ToolInvocation> tool_calls;  // dispatch order, at most 3
  bool generate = false;
  std::vector<DecisionFactor> decision_factors;

  bool operator==(const Action&) const = default;
};

// ---------------------------------------------------------------------------
// Observations and memory
// ---------------------------------------------------------------------------

enum class ObservationSource {
  NumericSolver,
  KeyframeGen,
  PromptRefiner,
  Generator
};

using ObservationPayload = std::variant<std::monostate, ComputationResult,
                                        KeyframeSet, RefinedPrompt,
                                        VerifierScore>;

// `violation` marks a broken action schema (bad arguments, exceeded call cap,
// endpoint failure); `valid` marks semantic correctness of a well-formed
// result (for the solver: validate_computation against the query; for
// keyframes: anchors backed by a kind-matching computation).
struct Observation {
  ObservationSource source = ObservationSource::NumericSolver;
  ObservationPayload payload;
  bool valid = false;
  bool violation = false;
  std::string diagnostic;

  bool operator==(const Observation&) const = default;
};

struct MemoryEntry {
  int cycle_index = 0;  // 1-based
  std::string planner_rationale;
  std::vector<ToolInvocation> tool_calls;
  std::vector<Observation> tool_outputs;
  std::optional<VerifierScore> verifier_score;  // present iff a video was scored

  bool operator==(const MemoryEntry&) const = default;
};

// Append-only per-episode record. Stores scalar scores and tool outputs,
// never generated video content.
struct MemoryPool {
  SceneQuery query;
  std::vector<MemoryEntry> entries;

  bool operator==(const MemoryPool&) const = default;
};

// Accumulated conditioning passed to the generator: the latest refined prompt
// and keyframe set, plus every computation produced so far.
struct ConditioningBundle {
  std::optional<RefinedPrompt> refined_prompt;
  std::optional<KeyframeSet> keyframes;
  std::vector<ComputationResult> computations;

  bool operator==(const ConditioningBundle&) const = default;
};

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

// Featurized memory state the policy conditioned on at one cycle.
struct StateFeatures {
  std::vector<double> v;

  bool operator==(const StateFeatures&) const = default;
};

struct RewardBreakdown {
  double quality = 0.0;
  double kf_bonus = 0.0;
  double compute_bonus = 0.0;
  bool format_penalty_applied = false;
  double total = 0.0;

  bool operator==(const RewardBreakdown&) const = default;
};

struct ScoredVideo {
  int cycle_index = 0;
  VerifierScore score;

  bool operator==(const ScoredVideo&) const = default;
};

struct CycleRecord {
  StateFeatures features;
  Action action;
  std::vector<Observation> observations;

  bool operator==(const CycleRecord&) const = default;
};

// A full T-cycle rollout. Bit-exact reproducible from
// (query, policy parameters, rng_seed) against the same world.
struct Trajectory {
  SceneQuery query;
  std::vector<CycleRecord> cycles;
  std::vector<ScoredVideo> videos;
  std::optional<ScoredVideo> best;
  RewardBreakdown reward;  // filled by the trainer
  std::uint64_t rng_seed = 0;

  bool operator==(const Trajectory&) const = default;
};

// True iff any cycle recorded a violation observation.
inline bool has_violation(const Trajectory& t) {
  for (const auto& c : t.cycles)
    for (const auto& o : c.observations)
      if (o.violation) return true;
  return false;
}

}  // namespace physloop
