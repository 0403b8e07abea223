#pragma once

#include <cstdint>
#include <string>

#include "physloop/episode.hpp"

namespace physloop {

struct GenerationOutcome {
  bool ok = false;
  VerifierScore score;
  std::string diagnostic;
};

// Generation/verification backend seen by the episode loop. The loop never
// touches video content; it only receives scores. Failures are reported in
// the outcome (never thrown) so the episode can record them as violation
// observations.
class EpisodeWorld {
 public:
  virtual ~EpisodeWorld() = default;

  virtual bool has_scene(const SceneQuery& query) const = 0;

  virtual GenerationOutcome generate_and_score(
      const SceneQuery& query, const ConditioningBundle& conditioning,
      std::uint64_t noise_seed) = 0;
};

}  // namespace physloop
