#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "physloop/episode.hpp"
#include "physloop/policy.hpp"
#include "physloop/world_iface.hpp"

namespace physloop {

struct EpisodeConfig {
  int T = 5;
  int tool_call_cap = 3;
  int solver_samples = 16;  // trajectory samples requested from solvers
  ScoreThresholds thresholds;

  bool operator==(const EpisodeConfig&) const = default;
};

class EpisodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Appends one entry recording the cycle; prior entries are untouched.
// Pure function of its inputs.
MemoryPool update_memory(const MemoryPool& memory, const Action& action,
                         const std::vector<Observation>& observations);

// Folds one well-formed observation into the conditioning bundle: the latest
// refined prompt and keyframe set win, computations accumulate. Violation
// observations carry no payload and are skipped.
void merge_observation(ConditioningBundle& bundle, const Observation& obs);

// Best video under the lexicographic ranking
// (joint pass, SA + PC, earliest cycle). Empty when no cycle generated.
std::optional<ScoredVideo> select_best_video(const Trajectory& trajectory,
                                             const ScoreThresholds& thresholds);

// Runs one T-cycle episode: sample an action per cycle from the policy given
// the featurized memory, dispatch tools in listed order (later tools see
// earlier outputs), generate and score when flagged, and fold verifier
// feedback back into memory. Ordinary tool failures become violation
// observations; only an unknown scene throws.
Trajectory run_episode(const SceneQuery& query, const PolicyParams& policy,
                       EpisodeWorld& world, const EpisodeConfig& config,
                       std::uint64_t seed);

}  // namespace physloop
