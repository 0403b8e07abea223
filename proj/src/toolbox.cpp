#include "physloop/toolbox.hpp"

#include <cmath>
#include <cstdio>
#include <algorithm>

namespace physloop {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Decoy collision computations can imply separating bodies; anchor timing
// still needs a finite clip, so the approach speed is floored.
constexpr double kMinApproachSpeed = 0.1;

bool near_rel(double a, double b, double tol) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= tol * scale;
}

double get(const ParamMap& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

std::string format_state_prompt(ScenarioKind kind, double fraction,
                                const KinematicFrame& s) {
  char buf[160];
  switch (kind) {
    case ScenarioKind::Projectile:
      std::snprintf(buf, sizeof(buf),
                    "at %.0f%% of flight: position (%.3f m, %.3f m), velocity "
                    "(%.3f, %.3f) m/s",
                    100.0 * fraction, s[0], s[1], s[2], s[3]);
      break;
    case ScenarioKind::Collision1D:
      std::snprintf(buf, sizeof(buf),
                    "at %.0f%% of clip: body positions %.3f m and %.3f m, "
                    "velocities %.3f and %.3f m/s",
                    100.0 * fraction, s[0], s[1], s[2], s[3]);
      break;
    case ScenarioKind::Rotation:
      std::snprintf(buf, sizeof(buf),
                    "at %.0f%% of clip: angle %.3f rad, angular velocity %.3f "
                    "rad/s",
                    100.0 * fraction, s[0], s[1]);
      break;
  }
  return buf;
}

}  // namespace

const std::vector<std::string>& observable_catalog(ScenarioKind kind) {
  static const std::vector<std::string> projectile = {"launch_angle",
                                                      "launch_speed"};
  static const std::vector<std::string> collision = {
      "mass_1", "mass_2", "velocity_1", "velocity_2"};
  static const std::vector<std::string> rotation = {
      "duration", "inertia", "initial_angular_velocity", "torque"};
  switch (kind) {
    case ScenarioKind::Projectile: return projectile;
    case ScenarioKind::Collision1D: return collision;
    case ScenarioKind::Rotation: return rotation;
  }
  return projectile;
}

double clip_duration(ScenarioKind kind, const ParamMap& params) {
  switch (kind) {
    case ScenarioKind::Projectile: {
      const double v = get(params, "launch_speed", 0.0);
      const double a = get(params, "launch_angle", 0.0);
      const double g = get(params, "gravity", constants::kDefaultGravity);
      return 2.0 * v * std::sin(a) / g;
    }
    case ScenarioKind::Collision1D: {
      const double approach = get(params, "velocity_1", 0.0) -
                              get(params, "velocity_2", 0.0);
      return 2.0 * constants::kCollisionSeparation /
             std::max(approach, kMinApproachSpeed);
    }
    case ScenarioKind::Rotation:
      return get(params, "duration", 0.0);
  }
  return 0.0;
}

KinematicFrame state_at(ScenarioKind kind, const ParamMap& params, double t) {
  KinematicFrame s;
  switch (kind) {
    case ScenarioKind::Projectile: {
      const double v = get(params, "launch_speed", 0.0);
      const double a = get(params, "launch_angle", 0.0);
      const double g = get(params, "gravity", constants::kDefaultGravity);
      const double vx = v * std::cos(a);
      const double vy0 = v * std::sin(a);
      s[0] = vx * t;
      s[1] = vy0 * t - 0.5 * g * t * t;
      s[2] = vx;
      s[3] = vy0 - g * t;
      break;
    }
    case ScenarioKind::Collision1D: {
      const double m1 = get(params, "mass_1", 1.0);
      const double m2 = get(params, "mass_2", 1.0);
      const double v1 = get(params, "velocity_1", 0.0);
      const double v2 = get(params, "velocity_2", 0.0);
      const double r = get(params, "restitution", 1.0);
      const double sep = constants::kCollisionSeparation;
      const double approach = v1 - v2;
      const double tc = approach > 0.0 ? sep / approach : -1.0;
      if (tc < 0.0 || t < tc) {
        s[0] = v1 * t;
        s[1] = sep + v2 * t;
        s[2] = v1;
        s[3] = v2;
      } else {
        const double total = m1 + m2;
        const double w1 = (m1 * v1 + m2 * v2 - m2 * r * approach) / total;
        const double w2 = (m1 * v1 + m2 * v2 + m1 * r * approach) / total;
        const double xc = v1 * tc;
        s[0] = xc + w1 * (t - tc);
        s[1] = xc + w2 * (t - tc);
        s[2] = w1;
        s[3] = w2;
      }
      break;
    }
    case ScenarioKind::Rotation: {
      const double inertia = get(params, "inertia", 1.0);
      const double torque = get(params, "torque", 0.0);
      const double omega0 = get(params, "initial_angular_velocity", 0.0);
      const double alpha = torque / inertia;
      s[0] = omega0 * t + 0.5 * alpha * t * t;
      s[1] = omega0 + alpha * t;
      break;
    }
  }
  return s;
}

KinematicFrame drift_state_at(ScenarioKind kind, const ParamMap& params,
                              double t) {
  KinematicFrame s;
  switch (kind) {
    case ScenarioKind::Projectile: {
      const double v = get(params, "launch_speed", 0.0);
      const double a = get(params, "launch_angle", 0.0);
      s[2] = v * std::cos(a);
      s[3] = v * std::sin(a);
      s[0] = s[2] * t;
      s[1] = s[3] * t;
      break;
    }
    case ScenarioKind::Collision1D: {
      s[2] = get(params, "velocity_1", 0.0);
      s[3] = get(params, "velocity_2", 0.0);
      s[0] = s[2] * t;
      s[1] = constants::kCollisionSeparation + s[3] * t;
      break;
    }
    case ScenarioKind::Rotation: {
      s[1] = get(params, "initial_angular_velocity", 0.0);
      s[0] = s[1] * t;
      break;
    }
  }
  return s;
}

ToolResult<ComputationResult> solve_projectile(double launch_speed,
                                               double launch_angle,
                                               double gravity, int n_samples) {
  if (!(launch_speed >= 0.0) || !std::isfinite(launch_speed))
    return {std::nullopt, "launch_speed must be >= 0"};
  if (!(gravity > 0.0) || !std::isfinite(gravity))
    return {std::nullopt, "gravity must be > 0"};
  if (!(launch_angle >= 0.0 && launch_angle <= kPi / 2.0))
    return {std::nullopt, "launch_angle must lie in [0, pi/2]"};
  if (n_samples < 2) return {std::nullopt, "n_samples must be >= 2"};

  ComputationResult r;
  r.solver_kind = SolverKind::Projectile;
  r.inputs = {{"launch_speed", launch_speed},
              {"launch_angle", launch_angle},
              {"gravity", gravity}};

  const double vy0 = launch_speed * std::sin(launch_angle);
  const double vx = launch_speed * std::cos(launch_angle);
  const double tof = 2.0 * vy0 / gravity;
  r.outputs = {{"time_of_flight", tof},
               {"range", vx * tof},
               {"apex_height", vy0 * vy0 / (2.0 * gravity)},
               {"apex_time", vy0 / gravity}};

  r.samples.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const double t = tof * static_cast<double>(i) / (n_samples - 1);
    const KinematicFrame s = state_at(ScenarioKind::Projectile, r.inputs, t);
    r.samples.push_back({s[0], s[1]});
  }
  return {std::move(r), ""};
}

ToolResult<ComputationResult> solve_collision_1d(double m1, double m2,
                                                 double v1, double v2,
                                                 CollisionMode mode) {
  if (!(m1 > 0.0) || !(m2 > 0.0))
    return {std::nullopt, "masses must be > 0"};
  if (!std::isfinite(v1) || !std::isfinite(v2))
    return {std::nullopt, "velocities must be finite"};

  const double r = mode == CollisionMode::Elastic ? 1.0 : 0.0;
  const double total = m1 + m2;
  const double approach = v1 - v2;
  const double w1 = (m1 * v1 + m2 * v2 - m2 * r * approach) / total;
  const double w2 = (m1 * v1 + m2 * v2 + m1 * r * approach) / total;

  ComputationResult c;
  c.solver_kind = SolverKind::Collision1D;
  c.inputs = {{"mass_1", m1},
              {"mass_2", m2},
              {"velocity_1", v1},
              {"velocity_2", v2},
              {"restitution", r}};
  c.outputs = {{"final_velocity_1", w1},
               {"final_velocity_2", w2},
               {"momentum_before", m1 * v1 + m2 * v2},
               {"momentum_after", m1 * w1 + m2 * w2},
               {"kinetic_energy_before", 0.5 * (m1 * v1 * v1 + m2 * v2 * v2)},
               {"kinetic_energy_after", 0.5 * (m1 * w1 * w1 + m2 * w2 * w2)}};
  return {std::move(c), ""};
}

ToolResult<ComputationResult> solve_rotation(double inertia, double torque,
                                             double duration, double omega0) {
  if (!(inertia > 0.0)) return {std::nullopt, "inertia must be > 0"};
  if (!(duration >= 0.0)) return {std::nullopt, "duration must be >= 0"};
  if (!std::isfinite(torque) || !std::isfinite(omega0))
    return {std::nullopt, "torque and omega0 must be finite"};

  const double alpha = torque / inertia;
  ComputationResult c;
  c.solver_kind = SolverKind::Rotation;
  c.inputs = {{"inertia", inertia},
              {"torque", torque},
              {"duration", duration},
              {"initial_angular_velocity", omega0}};
  c.outputs = {
      {"final_angular_velocity", omega0 + alpha * duration},
      {"total_angle", omega0 * duration + 0.5 * alpha * duration * duration}};
  return {std::move(c), ""};
}

ToolResult<KeyframeSet> generate_keyframes(
    const SceneQuery& query, const std::vector<double>& positions,
    const std::optional<ComputationResult>& computation) {
  if (positions.empty() || positions.size() > 3)
    return {std::nullopt, "need 1-3 anchor positions"};
  std::vector<double> sorted = positions;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i] >= 0.0 && sorted[i] <= 1.0))
      return {std::nullopt, "anchor position outside [0, 1]"};
    if (i > 0 && !(sorted[i] > sorted[i - 1]))
      return {std::nullopt, "anchor positions must be distinct"};
  }

  const bool backed = computation.has_value() &&
                      kind_matches(computation->solver_kind,
                                   query.scenario_kind);

  KeyframeSet set;
  const ParamMap& params =
      backed ? computation->inputs : query.observable_params;
  const double duration = clip_duration(query.scenario_kind, params);
  for (double f : sorted) {
    KeyframeAnchor a;
    a.position_fraction = f;
    a.state = backed
                  ? state_at(query.scenario_kind, params, f * duration)
                  : drift_state_at(query.scenario_kind, params, f * duration);
    a.anchor_prompt = format_state_prompt(query.scenario_kind, f, a.state);
    set.anchors.push_back(std::move(a));
  }
  if (backed) set.source_computation = computation;
  return {std::move(set), ""};
}

ToolResult<RefinedPrompt> refine_prompt(
    const SceneQuery& query, std::uint32_t flags,
    const std::optional<ComputationResult>& computation) {
  flags &= detail_flag::kAll;
  if (flags == 0) return {std::nullopt, "at least one detail flag required"};

  RefinedPrompt p;
  p.base_caption = query.caption;
  p.physical_details = flags;
  if (computation) p.numeric_annotations = computation->outputs;
  return {std::move(p), ""};
}

bool validate_computation(const SceneQuery& query,
                          const ComputationResult& result) {
  if (!kind_matches(result.solver_kind, query.scenario_kind)) return false;
  for (const auto& [key, observed] : query.observable_params) {
    auto it = result.inputs.find(key);
    if (it == result.inputs.end()) continue;
    if (!near_rel(it->second, observed, 1e-9)) return false;
  }
  return true;
}

}  // namespace physloop
