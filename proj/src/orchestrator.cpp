#include "physloop/orchestrator.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "physloop/rng.hpp"

namespace physloop {

namespace {

// Relative half-width of the decoy perturbation applied per parameter.
constexpr double kDecoySpread = 0.35;

// Seed salts for the independent per-episode streams.
constexpr std::uint64_t kSaltAction = 0xAC710E;
constexpr std::uint64_t kSaltDecoy = 0xDEC07;
constexpr std::uint64_t kSaltNoise = 0x90153;

std::optional<ComputationResult> latest_matching_computation(
    const ConditioningBundle& bundle, ScenarioKind kind) {
  for (auto it = bundle.computations.rbegin(); it != bundle.computations.rend();
       ++it) {
    if (kind_matches(it->solver_kind, kind)) return *it;
  }
  return std::nullopt;
}

Observation dispatch_solver(const SceneQuery& query, const SolverArgs& args,
                            int n_samples, Rng& decoy_rng) {
  ParamMap inputs = query.observable_params;
  if (args.source == SolverInputSource::Decoy) {
    // Perturb in catalog order so the draw sequence is reproducible.
    for (const auto& name : observable_catalog(query.scenario_kind)) {
      auto it = inputs.find(name);
      if (it != inputs.end()) it->second *= 1.0 + kDecoySpread * decoy_rng.unit();
    }
  }

  ToolResult<ComputationResult> result;
  switch (query.scenario_kind) {
    case ScenarioKind::Projectile:
      result = solve_projectile(inputs["launch_speed"], inputs["launch_angle"],
                                constants::kDefaultGravity, n_samples);
      break;
    case ScenarioKind::Collision1D:
      result = solve_collision_1d(inputs["mass_1"], inputs["mass_2"],
                                  inputs["velocity_1"], inputs["velocity_2"],
                                  args.mode);
      break;
    case ScenarioKind::Rotation:
      result = solve_rotation(inputs["inertia"], inputs["torque"],
                              inputs["duration"],
                              inputs["initial_angular_velocity"]);
      break;
  }

  Observation obs;
  obs.source = ObservationSource::NumericSolver;
  if (!result.ok()) {
    obs.violation = true;
    obs.diagnostic = result.error;
    return obs;
  }
  obs.valid = validate_computation(query, *result.value);
  obs.payload = std::move(*result.value);
  return obs;
}

Observation dispatch_keyframes(const SceneQuery& query,
                               const KeyframeArgs& args,
                               const ConditioningBundle& bundle) {
  const auto computation =
      latest_matching_computation(bundle, query.scenario_kind);
  auto result = generate_keyframes(query, args.positions, computation);

  Observation obs;
  obs.source = ObservationSource::KeyframeGen;
  if (!result.ok()) {
    obs.violation = true;
    obs.diagnostic = result.error;
    return obs;
  }
  obs.valid = result.value->source_computation.has_value();
  obs.payload = std::move(*result.value);
  return obs;
}

Observation dispatch_refiner(const SceneQuery& query, const RefinerArgs& args,
                             const ConditioningBundle& bundle) {
  const auto computation =
      latest_matching_computation(bundle, query.scenario_kind);
  auto result = refine_prompt(query, args.flags, computation);

  Observation obs;
  obs.source = ObservationSource::PromptRefiner;
  if (!result.ok()) {
    obs.violation = true;
    obs.diagnostic = result.error;
    return obs;
  }
  obs.valid = true;
  obs.payload = std::move(*result.value);
  return obs;
}

std::string describe_action(const Action& action, int cycle) {
  std::ostringstream out;
  out << "cycle " << cycle << ":";
  for (const auto& call : action.tool_calls) {
    switch (call.tool) {
      case ToolName::NumericSolver: {
        const auto& a = std::get<SolverArgs>(call.args);
        out << " solve("
            << (a.source == SolverInputSource::Observables ? "observables"
                                                           : "decoy")
            << ")";
        break;
      }
      case ToolName::KeyframeGen: {
        const auto& a = std::get<KeyframeArgs>(call.args);
        out << " keyframes(" << a.positions.size() << ")";
        break;
      }
      case ToolName::PromptRefiner: {
        const auto& a = std::get<RefinerArgs>(call.args);
        out << " refine(" << popcount4(a.flags) << " flags)";
        break;
      }
    }
  }
  out << (action.generate ? " generate" : " skip");
  return out.str();
}

}  // namespace

void merge_observation(ConditioningBundle& bundle, const Observation& obs) {
  if (obs.violation) return;
  if (const auto* c = std::get_if<ComputationResult>(&obs.payload))
    bundle.computations.push_back(*c);
  else if (const auto* k = std::get_if<KeyframeSet>(&obs.payload))
    bundle.keyframes = *k;
  else if (const auto* r = std::get_if<RefinedPrompt>(&obs.payload))
    bundle.refined_prompt = *r;
}

MemoryPool update_memory(const MemoryPool& memory, const Action& action,
                         const std::vector<Observation>& observations) {
  MemoryPool next = memory;
  MemoryEntry entry;
  entry.cycle_index = static_cast<int>(memory.entries.size()) + 1;
  entry.planner_rationale = describe_action(action, entry.cycle_index);
  entry.tool_calls = action.tool_calls;
  entry.tool_outputs = observations;
  for (const auto& obs : observations) {
    if (obs.source == ObservationSource::Generator && !obs.violation) {
      if (const auto* s = std::get_if<VerifierScore>(&obs.payload))
        entry.verifier_score = *s;
    }
  }
  next.entries.push_back(std::move(entry));
  return next;
}

std::optional<ScoredVideo> select_best_video(
    const Trajectory& trajectory, const ScoreThresholds& thresholds) {
  std::optional<ScoredVideo> best;
  for (const auto& video : trajectory.videos) {
    if (!best) {
      best = video;
      continue;
    }
    const bool jp_new = joint_pass(video.score, thresholds);
    const bool jp_best = joint_pass(best->score, thresholds);
    const double sum_new = video.score.sa + video.score.pc;
    const double sum_best = best->score.sa + best->score.pc;
    if (jp_new != jp_best ? jp_new : sum_new > sum_best) best = video;
  }
  return best;
}

Trajectory run_episode(const SceneQuery& query, const PolicyParams& policy,
                       EpisodeWorld& world, const EpisodeConfig& config,
                       std::uint64_t seed) {
  if (config.T < 1) throw EpisodeError("episode requires T >= 1");
  if (!world.has_scene(query))
    throw EpisodeError("world has no scene matching the query");

  Trajectory trajectory;
  trajectory.query = query;
  trajectory.rng_seed = seed;

  MemoryPool memory{query, {}};
  ConditioningBundle bundle;

  for (int t = 1; t <= config.T; ++t) {
    const StateFeatures features = featurize(memory, config.T);
    const auto sampled = sample_action(
        policy, features, mix_seed(seed, kSaltAction, static_cast<std::uint64_t>(t)));
    const Action& action = sampled.action;

    Rng decoy_rng(mix_seed(seed, kSaltDecoy, static_cast<std::uint64_t>(t)));
    std::vector<Observation> observations;
    int calls = 0;
    for (const auto& call : action.tool_calls) {
      if (++calls > config.tool_call_cap) {
        Observation obs;
        obs.source = ObservationSource::NumericSolver;
        obs.violation = true;
        obs.diagnostic = "tool call cap exceeded";
        observations.push_back(std::move(obs));
        continue;
      }
      Observation obs;
      switch (call.tool) {
        case ToolName::NumericSolver:
          obs = dispatch_solver(query, std::get<SolverArgs>(call.args),
                                config.solver_samples, decoy_rng);
          break;
        case ToolName::KeyframeGen:
          obs = dispatch_keyframes(query, std::get<KeyframeArgs>(call.args),
                                   bundle);
          break;
        case ToolName::PromptRefiner:
          obs = dispatch_refiner(query, std::get<RefinerArgs>(call.args),
                                 bundle);
          break;
      }
      merge_observation(bundle, obs);
      observations.push_back(std::move(obs));
    }

    if (action.generate) {
      const auto outcome = world.generate_and_score(
          query, bundle, mix_seed(seed, kSaltNoise, static_cast<std::uint64_t>(t)));
      Observation obs;
      obs.source = ObservationSource::Generator;
      if (outcome.ok) {
        obs.valid = true;
        obs.payload = outcome.score;
        trajectory.videos.push_back({t, outcome.score});
      } else {
        obs.violation = true;
        obs.diagnostic = outcome.diagnostic;
      }
      observations.push_back(std::move(obs));
    }

    memory = update_memory(memory, action, observations);
    trajectory.cycles.push_back({features, action, std::move(observations)});
  }

  trajectory.best = select_best_video(trajectory, config.thresholds);
  return trajectory;
}

}  // namespace physloop
