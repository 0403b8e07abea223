#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace physloop {

enum class ScenarioKind { Projectile, Collision1D, Rotation };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Projectile: return "projectile";
    case ScenarioKind::Collision1D: return "collision_1d";
    case ScenarioKind::Rotation: return "rotation";
  }
  return "?";
}

using ParamMap = std::map<std::string, double>;

// Parameter names a query must carry, fixed per scenario kind.
const std::vector<std::string>& observable_catalog(ScenarioKind kind);

// A scene request: caption plus the physical parameters the planner can see.
struct SceneQuery {
  std::string caption;
  ScenarioKind scenario_kind = ScenarioKind::Projectile;
  ParamMap observable_params;

  bool operator==(const SceneQuery&) const = default;
};

// One sampled kinematic state. Component meaning depends on scenario kind:
//   Projectile:  {x, y, vx, vy}
//   Collision1D: {x1, x2, v1, v2}
//   Rotation:    {angle, omega, 0, 0}
struct KinematicFrame {
  std::array<double, 4> v{0.0, 0.0, 0.0, 0.0};

  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
  bool operator==(const KinematicFrame&) const = default;
};

// Verifier rating, both dimensions clamped to [1, 5].
struct VerifierScore {
  double sa = 1.0;
  double pc = 1.0;

  bool operator==(const VerifierScore&) const = default;
};

struct ScoreThresholds {
  double pass = 4.0;  // SA >= pass && PC >= pass counts as a joint pass

  bool operator==(const ScoreThresholds&) const = default;
};

inline bool joint_pass(const VerifierScore& s, const ScoreThresholds& t) {
  return s.sa >= t.pass && s.pc >= t.pass;
}

// Shared kinematic conventions.
namespace constants {
inline constexpr double kDefaultGravity = 9.81;      // m/s^2
inline constexpr double kCollisionSeparation = 4.0;  // initial body gap, m
}  // namespace constants

}  // namespace physloop
