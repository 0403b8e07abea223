#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "physloop/episode.hpp"
#include "physloop/world_iface.hpp"

namespace physloop {

// Synthetic stand-in for a frozen video generator plus verifier. Videos are
// short kinematic state sequences whose fidelity improves with richer
// conditioning; the verifier rates them on SA and PC in [1, 5].

struct WorldConfig {
  int frames = 16;  // F

  // Effective corruption = base * (1 - alpha_computation * c)
  //                             * (1 - alpha_prompt * p)
  // with c = 1 when the bundle carries a computation valid for the scene and
  // p = fraction of detail flags set in the refined prompt.
  double base_corruption = 0.4;
  double alpha_computation = 0.7;
  double alpha_prompt = 0.2;
  double alpha_keyframe = 0.25;  // convex pull weight per anchor

  // Score = clamp(5 - lambda * residual, 1, 5). Calibrated so that exact
  // ground truth scores 5.0 and unconditioned generation at base corruption
  // 0.4 averages PC approximately 3.5.
  double lambda_pc = 7.0;
  double lambda_sa = 3.0;

  // Relative observation noise added to every frame component, further scaled
  // by the scene's hidden noise factor.
  double observation_noise = 1e-3;

  // Round verifier scores to whole numbers (the benchmark emits integers;
  // kept as an experiment toggle).
  bool integer_scores = false;

  bool operator==(const WorldConfig&) const = default;
};

struct SceneSpec {
  SceneQuery query;
  ParamMap hidden_params;  // gravity / restitution / noise_scale
  std::vector<KinematicFrame> ground_truth;  // exact dynamics at F frames
  double base_corruption = 0.4;

  bool operator==(const SceneSpec&) const = default;
};

// Observable and hidden parameters merged; the full dynamics specification.
ParamMap scene_true_params(const SceneSpec& scene);

double scene_clip_duration(const SceneSpec& scene);

struct AbstractVideo {
  std::vector<KinematicFrame> frames;
  ParamMap realized_params;  // parameters the generator actually used
  std::uint64_t noise_seed = 0;

  bool operator==(const AbstractVideo&) const = default;
};

// Deterministic in all arguments. Draws are taken from Rng(seed) in a fixed
// order: weights for kind selection, then per-scene parameters.
// Throws ConfigError for invalid weights or n < 1.
std::vector<SceneSpec> sample_scene_bank(std::uint64_t seed, int n,
                                         const std::array<double, 3>& kind_mix,
                                         double corruption,
                                         const WorldConfig& config);

// Renders a video from the scene under the given conditioning. Draw order
// from Rng(noise_seed): one unit draw per dynamics parameter (observable
// catalog order, then hidden gravity for projectile scenes), then the
// dynamics-corruption draws (wobble amplitude/frequency/phase, or the two
// collision impulse errors), then per-frame observation noise. The draw
// sequence does not depend on the conditioning, so videos with different
// bundles under the same seed are exactly paired.
AbstractVideo generate_video(const SceneSpec& scene,
                             const ConditioningBundle& conditioning,
                             std::uint64_t noise_seed,
                             const WorldConfig& config);

// Pure scoring of a video against its scene. PC reflects dynamics violations
// intrinsic to the video (acceleration scatter around the video's own fitted
// gravity and that gravity's plausibility, momentum drift across collision
// frames); SA reflects endpoint and event agreement with the scene's ground
// truth. Throws VerificationError on frame-count mismatch.
VerifierScore verify(const SceneSpec& scene, const AbstractVideo& video,
                     const WorldConfig& config);

class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scene bank + config behind the episode-facing interface.
class SyntheticWorld : public EpisodeWorld {
 public:
  SyntheticWorld(std::vector<SceneSpec> bank, WorldConfig config);

  bool has_scene(const SceneQuery& query) const override;
  GenerationOutcome generate_and_score(const SceneQuery& query,
                                       const ConditioningBundle& conditioning,
                                       std::uint64_t noise_seed) override;

  const std::vector<SceneSpec>& scenes() const { return bank_; }
  const WorldConfig& config() const { return config_; }

 private:
  std::vector<SceneSpec> bank_;
  WorldConfig config_;
  std::map<std::string, std::size_t> by_caption_;
};

}  // namespace physloop
