#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "physloop/scene.hpp"

namespace physloop {

// ---------------------------------------------------------------------------
// Tool result payloads
// ---------------------------------------------------------------------------

enum class SolverKind { Projectile, Collision1D, Rotation };
enum class CollisionMode { Elastic, PerfectlyInelastic };

inline SolverKind solver_for(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Projectile: return SolverKind::Projectile;
    case ScenarioKind::Collision1D: return SolverKind::Collision1D;
    case ScenarioKind::Rotation: return SolverKind::Rotation;
  }
  return SolverKind::Projectile;
}

inline bool kind_matches(SolverKind s, ScenarioKind k) {
  return s == solver_for(k);
}

// Closed-form solver output. `inputs` records the exact numeric arguments the
// solver ran with; `outputs` the derived scalar quantities. Projectile results
// additionally carry positions sampled along the trajectory.
struct ComputationResult {
  SolverKind solver_kind = SolverKind::Projectile;
  ParamMap inputs;
  ParamMap outputs;
  std::vector<std::array<double, 2>> samples;  // projectile (x, y) samples

  bool operator==(const ComputationResult&) const = default;
};

// A symbolic kinematic state pinned at a fractional time position.
struct KeyframeAnchor {
  double position_fraction = 0.0;  // of the clip duration, in [0, 1]
  KinematicFrame state;
  std::string anchor_prompt;

  bool operator==(const KeyframeAnchor&) const = default;
};

struct KeyframeSet {
  std::vector<KeyframeAnchor> anchors;  // 1-3, strictly increasing fractions
  std::optional<ComputationResult> source_computation;

  bool operator==(const KeyframeSet&) const = default;
};

// Detail flags the prompt refiner can note. Stored as a bitmask.
namespace detail_flag {
inline constexpr std::uint32_t kMaterial = 1u << 0;
inline constexpr std::uint32_t kInitialConditions = 1u << 1;
inline constexpr std::uint32_t kConstraint = 1u << 2;
inline constexpr std::uint32_t kOutcome = 1u << 3;
inline constexpr std::uint32_t kAll =
    kMaterial | kInitialConditions | kConstraint | kOutcome;
inline constexpr int kCount = 4;
}  // namespace detail_flag

inline int popcount4(std::uint32_t flags) {
  int n = 0;
  for (int i = 0; i < detail_flag::kCount; ++i)
    if (flags & (1u << i)) ++n;
  return n;
}

struct RefinedPrompt {
  std::string base_caption;
  std::uint32_t physical_details = 0;  // detail_flag bits
  ParamMap numeric_annotations;

  bool operator==(const RefinedPrompt&) const = default;
};

// Invalid arguments are reported as a result value, not an exception; the
// episode loop turns them into violation observations.
template <class T>
struct ToolResult {
  std::optional<T> value;
  std::string error;

  bool ok() const { return value.has_value(); }
};

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

ToolResult<ComputationResult> solve_projectile(double launch_speed,
                                               double launch_angle,
                                               double gravity, int n_samples);

ToolResult<ComputationResult> solve_collision_1d(double m1, double m2,
                                                 double v1, double v2,
                                                 CollisionMode mode);

ToolResult<ComputationResult> solve_rotation(double inertia, double torque,
                                             double duration, double omega0);

// ---------------------------------------------------------------------------
// Conditioning tools
// ---------------------------------------------------------------------------

ToolResult<KeyframeSet> generate_keyframes(
    const SceneQuery& query, const std::vector<double>& positions,
    const std::optional<ComputationResult>& computation);

ToolResult<RefinedPrompt> refine_prompt(
    const SceneQuery& query, std::uint32_t flags,
    const std::optional<ComputationResult>& computation);

// True iff the computation used the correct solver for the query's scenario
// and its inputs agree with the observable parameters on every shared key
// (1e-9 relative).
bool validate_computation(const SceneQuery& query,
                          const ComputationResult& result);

// ---------------------------------------------------------------------------
// Shared closed-form kinematics
// ---------------------------------------------------------------------------
// One evaluator backs the solvers, the keyframe anchors, the synthetic-world
// ground truth, and the anchor paths, so every consumer agrees on the
// dynamics to machine precision.

// Clip duration implied by a parameter set:
//   Projectile:  time of flight
//   Collision1D: 2 * time-to-contact (contact at the clip midpoint)
//   Rotation:    the `duration` parameter
double clip_duration(ScenarioKind kind, const ParamMap& params);

// Exact state at time t under the closed-form dynamics for `params`.
// Expected keys mirror the solver inputs (projectile additionally takes
// "gravity"; collision takes "restitution" in {0,1}).
KinematicFrame state_at(ScenarioKind kind, const ParamMap& params, double t);

// Gravity-free constant-velocity state used for unbacked keyframe anchors.
KinematicFrame drift_state_at(ScenarioKind kind, const ParamMap& params,
                              double t);

}  // namespace physloop
