#include "physloop/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "physloop/errors.hpp"
#include "physloop/rng.hpp"

namespace physloop {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

// Fraction of the initial separation below which two collision bodies count
// as having made contact.
constexpr double kContactFraction = 0.08;

// Sampling ranges for the scene bank.
constexpr double kSpeedLo = 5.0, kSpeedHi = 20.0;
constexpr double kAngleLo = 0.3, kAngleHi = 1.2;
constexpr double kMassLo = 0.5, kMassHi = 5.0;
constexpr double kV1Lo = 2.0, kV1Hi = 6.0;
constexpr double kApproachLo = 1.0, kApproachHi = 5.0;
constexpr double kInertiaLo = 0.5, kInertiaHi = 4.0;
constexpr double kTorqueLo = -5.0, kTorqueHi = 5.0;
constexpr double kOmega0Lo = -3.0, kOmega0Hi = 3.0;
constexpr double kDurationLo = 2.0, kDurationHi = 6.0;

struct SceneScales {
  double pos = 1.0;
  double vel = 1.0;
};

double get(const ParamMap& p, const char* key, double fallback = 0.0) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

SceneScales scales_for(const SceneSpec& scene) {
  const ParamMap tp = scene_true_params(scene);
  SceneScales s;
  switch (scene.query.scenario_kind) {
    case ScenarioKind::Projectile: {
      const double v = get(tp, "launch_speed");
      const double a = get(tp, "launch_angle");
      const double g = get(tp, "gravity", constants::kDefaultGravity);
      const double vy0 = v * std::sin(a);
      const double range = v * std::cos(a) * 2.0 * vy0 / g;
      const double apex = vy0 * vy0 / (2.0 * g);
      s.pos = std::max({range, apex, 1.0});
      s.vel = std::max(v, 1.0);
      break;
    }
    case ScenarioKind::Collision1D: {
      s.pos = constants::kCollisionSeparation;
      s.vel = std::max({std::abs(get(tp, "velocity_1")),
                        std::abs(get(tp, "velocity_2")), 1.0});
      break;
    }
    case ScenarioKind::Rotation: {
      const double alpha = get(tp, "torque") / get(tp, "inertia", 1.0);
      const double w0 = get(tp, "initial_angular_velocity");
      const double d = get(tp, "duration");
      const double w_end = w0 + alpha * d;
      s.pos = std::max(std::abs(w0 * d + 0.5 * alpha * d * d), 1.0);
      s.vel = std::max({std::abs(w_end), std::abs(w0), 1.0});
      break;
    }
  }
  return s;
}

// Integrals of sin(w t + phi): I1 = int_0^t sin, I2 = int_0^t I1.
double wobble_i1(double w, double phi, double t) {
  return (std::cos(phi) - std::cos(w * t + phi)) / w;
}

double wobble_i2(double w, double phi, double t) {
  return t * std::cos(phi) / w - (std::sin(w * t + phi) - std::sin(phi)) / (w * w);
}

bool bundle_has_valid_computation(const SceneQuery& query,
                                  const ConditioningBundle& bundle) {
  for (const auto& c : bundle.computations)
    if (validate_computation(query, c)) return true;
  return false;
}

// Anchor-path evaluation for the keyframe pull. Backed sets replay the
// source computation's closed-form trajectory; unbacked sets interpolate the
// anchor states linearly (and extrapolate at constant velocity outside them).
KinematicFrame anchor_path_state(const SceneSpec& scene, const KeyframeSet& ks,
                                 double t, double clip) {
  const ScenarioKind kind = scene.query.scenario_kind;
  if (ks.source_computation)
    return state_at(kind, ks.source_computation->inputs, t);

  const int n_pos = kind == ScenarioKind::Rotation ? 1 : 2;
  const auto& anchors = ks.anchors;
  auto at_anchor = [&](const KeyframeAnchor& a, double dt_from) {
    KinematicFrame s = a.state;
    for (int c = 0; c < n_pos; ++c) s[c] += s[c + n_pos] * dt_from;
    return s;
  };

  const double t0 = anchors.front().position_fraction * clip;
  const double tn = anchors.back().position_fraction * clip;
  if (t <= t0) return at_anchor(anchors.front(), t - t0);
  if (t >= tn) return at_anchor(anchors.back(), t - tn);
  for (std::size_t j = 0; j + 1 < anchors.size(); ++j) {
    const double ta = anchors[j].position_fraction * clip;
    const double tb = anchors[j + 1].position_fraction * clip;
    if (t <= tb) {
      const double u = (t - ta) / (tb - ta);
      KinematicFrame s;
      for (int c = 0; c < 4; ++c)
        s[c] = (1.0 - u) * anchors[j].state[c] + u * anchors[j + 1].state[c];
      return s;
    }
  }
  return anchors.back().state;
}

std::string make_caption(std::size_t index, ScenarioKind kind,
                         const ParamMap& obs, double restitution) {
  char buf[192];
  switch (kind) {
    case ScenarioKind::Projectile:
      std::snprintf(buf, sizeof(buf),
                    "scene-%04zu: a ball launched at %.3f m/s, %.3f rad above "
                    "level ground",
                    index, get(obs, "launch_speed"), get(obs, "launch_angle"));
      break;
    case ScenarioKind::Collision1D:
      std::snprintf(buf, sizeof(buf),
                    "scene-%04zu: carts of %.3f kg and %.3f kg collide "
                    "head-on and %s",
                    index, get(obs, "mass_1"), get(obs, "mass_2"),
                    restitution > 0.5 ? "rebound" : "stick together");
      break;
    case ScenarioKind::Rotation:
      std::snprintf(buf, sizeof(buf),
                    "scene-%04zu: a flywheel of inertia %.3f under torque "
                    "%.3f N*m for %.3f s",
                    index, get(obs, "inertia"), get(obs, "torque"),
                    get(obs, "duration"));
      break;
  }
  return buf;
}

double rms(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x * x;
  return std::sqrt(s / static_cast<double>(xs.size()));
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

ParamMap scene_true_params(const SceneSpec& scene) {
  ParamMap p = scene.query.observable_params;
  for (const auto& [k, v] : scene.hidden_params) p[k] = v;
  return p;
}

double scene_clip_duration(const SceneSpec& scene) {
  return clip_duration(scene.query.scenario_kind, scene_true_params(scene));
}

std::vector<SceneSpec> sample_scene_bank(std::uint64_t seed, int n,
                                         const std::array<double, 3>& kind_mix,
                                         double corruption,
                                         const WorldConfig& config) {
  if (n < 1) throw ConfigError("scene bank size must be >= 1");
  double wsum = 0.0;
  for (double w : kind_mix) {
    if (!(w >= 0.0)) throw ConfigError("kind weights must be non-negative");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw ConfigError("kind weights must not all be zero");
  if (!(corruption >= 0.0)) throw ConfigError("corruption must be >= 0");

  std::vector<SceneSpec> bank;
  bank.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    Rng rng(mix_seed(seed, 0x5CE6E, i));

    const double pick = rng.uniform01() * wsum;
    ScenarioKind kind = ScenarioKind::Rotation;
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
      acc += kind_mix[static_cast<std::size_t>(k)];
      if (pick < acc) {
        kind = static_cast<ScenarioKind>(k);
        break;
      }
    }

    SceneSpec scene;
    scene.base_corruption = corruption;
    scene.query.scenario_kind = kind;
    ParamMap& obs = scene.query.observable_params;
    double restitution = 1.0;
    switch (kind) {
      case ScenarioKind::Projectile:
        obs["launch_speed"] = rng.uniform(kSpeedLo, kSpeedHi);
        obs["launch_angle"] = rng.uniform(kAngleLo, kAngleHi);
        scene.hidden_params["gravity"] = constants::kDefaultGravity;
        break;
      case ScenarioKind::Collision1D: {
        obs["mass_1"] = rng.uniform(kMassLo, kMassHi);
        obs["mass_2"] = rng.uniform(kMassLo, kMassHi);
        const double v1 = rng.uniform(kV1Lo, kV1Hi);
        obs["velocity_1"] = v1;
        obs["velocity_2"] = v1 - rng.uniform(kApproachLo, kApproachHi);
        restitution = rng.uniform01() < 0.5 ? 1.0 : 0.0;
        scene.hidden_params["restitution"] = restitution;
        break;
      }
      case ScenarioKind::Rotation:
        obs["inertia"] = rng.uniform(kInertiaLo, kInertiaHi);
        obs["torque"] = rng.uniform(kTorqueLo, kTorqueHi);
        obs["initial_angular_velocity"] = rng.uniform(kOmega0Lo, kOmega0Hi);
        obs["duration"] = rng.uniform(kDurationLo, kDurationHi);
        break;
    }
    scene.hidden_params["noise_scale"] = 0.5 + rng.uniform01();
    scene.query.caption = make_caption(i, kind, obs, restitution);

    const ParamMap tp = scene_true_params(scene);
    const double clip = clip_duration(kind, tp);
    scene.ground_truth.reserve(static_cast<std::size_t>(config.frames));
    for (int f = 0; f < config.frames; ++f) {
      const double t = clip * static_cast<double>(f) / (config.frames - 1);
      scene.ground_truth.push_back(state_at(kind, tp, t));
    }
    bank.push_back(std::move(scene));
  }
  return bank;
}

AbstractVideo generate_video(const SceneSpec& scene,
                             const ConditioningBundle& conditioning,
                             std::uint64_t noise_seed,
                             const WorldConfig& config) {
  const ScenarioKind kind = scene.query.scenario_kind;
  const ParamMap tp = scene_true_params(scene);
  const double clip = clip_duration(kind, tp);
  const int F = config.frames;
  const double dt_step = clip / (F - 1);

  const bool has_comp = bundle_has_valid_computation(scene.query, conditioning);
  double prompt_frac = 0.0;
  if (conditioning.refined_prompt)
    prompt_frac = static_cast<double>(popcount4(
                      conditioning.refined_prompt->physical_details)) /
                  detail_flag::kCount;
  const double eps = scene.base_corruption *
                     (1.0 - config.alpha_computation * (has_comp ? 1.0 : 0.0)) *
                     (1.0 - config.alpha_prompt * prompt_frac);

  Rng rng(noise_seed);
  AbstractVideo video;
  video.noise_seed = noise_seed;
  video.realized_params = tp;
  auto perturb = [&](const char* key) {
    auto it = video.realized_params.find(key);
    const double u = rng.unit();
    if (it != video.realized_params.end()) it->second *= 1.0 + eps * u;
  };

  video.frames.assign(static_cast<std::size_t>(F), KinematicFrame{});
  switch (kind) {
    case ScenarioKind::Projectile: {
      perturb("launch_angle");
      perturb("launch_speed");
      perturb("gravity");
      const double amp = 0.5 + 0.5 * rng.uniform01();
      const double freq = 1.0 + static_cast<double>(rng.next_u64() & 1);
      const double phi = kTwoPi * rng.uniform01();
      const double w = kTwoPi * freq / clip;

      const ParamMap& rp = video.realized_params;
      const double vx = get(rp, "launch_speed") * std::cos(get(rp, "launch_angle"));
      const double vy0 = get(rp, "launch_speed") * std::sin(get(rp, "launch_angle"));
      const double g = get(rp, "gravity");
      for (int f = 0; f < F; ++f) {
        const double t = dt_step * f;
        auto& s = video.frames[static_cast<std::size_t>(f)];
        s[0] = vx * t;
        s[1] = vy0 * t - g * (0.5 * t * t + eps * amp * wobble_i2(w, phi, t));
        s[2] = vx;
        s[3] = vy0 - g * (t + eps * amp * wobble_i1(w, phi, t));
      }
      break;
    }
    case ScenarioKind::Collision1D: {
      perturb("mass_1");
      perturb("mass_2");
      perturb("velocity_1");
      perturb("velocity_2");
      const double d1 = rng.unit();
      const double d2 = rng.unit();

      const ParamMap& rp = video.realized_params;
      const double m1 = get(rp, "mass_1"), m2 = get(rp, "mass_2");
      const double v1 = get(rp, "velocity_1"), v2 = get(rp, "velocity_2");
      const double r = get(rp, "restitution", 1.0);
      const double sep = constants::kCollisionSeparation;
      const double approach = v1 - v2;
      const double tc = approach > 1e-9 ? sep / approach : 2.0 * clip;
      // Impulse error: post-contact velocities miss the conserving solution
      // by a fraction of the approach speed.
      const double total = m1 + m2;
      const double w1 =
          (m1 * v1 + m2 * v2 - m2 * r * approach) / total + 0.5 * eps * d1 * approach;
      const double w2 =
          (m1 * v1 + m2 * v2 + m1 * r * approach) / total + 0.5 * eps * d2 * approach;
      const double xc = v1 * tc;
      for (int f = 0; f < F; ++f) {
        const double t = dt_step * f;
        auto& s = video.frames[static_cast<std::size_t>(f)];
        if (t < tc) {
          s[0] = v1 * t;
          s[1] = sep + v2 * t;
          s[2] = v1;
          s[3] = v2;
        } else {
          s[0] = xc + w1 * (t - tc);
          s[1] = xc + w2 * (t - tc);
          s[2] = w1;
          s[3] = w2;
        }
      }
      break;
    }
    case ScenarioKind::Rotation: {
      perturb("inertia");
      perturb("torque");
      perturb("initial_angular_velocity");
      const double amp = 0.5 + 0.5 * rng.uniform01();
      const double freq = 1.0 + static_cast<double>(rng.next_u64() & 1);
      const double phi = kTwoPi * rng.uniform01();
      const double w = kTwoPi * freq / clip;

      const ParamMap& rp = video.realized_params;
      const double alpha = get(rp, "torque") / get(rp, "inertia", 1.0);
      const double w0 = get(rp, "initial_angular_velocity");
      for (int f = 0; f < F; ++f) {
        const double t = dt_step * f;
        auto& s = video.frames[static_cast<std::size_t>(f)];
        s[0] = w0 * t + alpha * (0.5 * t * t + eps * amp * wobble_i2(w, phi, t));
        s[1] = w0 + alpha * (t + eps * amp * wobble_i1(w, phi, t));
      }
      break;
    }
  }

  if (conditioning.keyframes && !conditioning.keyframes->anchors.empty()) {
    const auto& ks = *conditioning.keyframes;
    const double pull = std::min(
        0.95, config.alpha_keyframe * static_cast<double>(ks.anchors.size()));
    for (int f = 0; f < F; ++f) {
      const double t = dt_step * f;
      const KinematicFrame target = anchor_path_state(scene, ks, t, clip);
      auto& s = video.frames[static_cast<std::size_t>(f)];
      for (int c = 0; c < 4; ++c)
        s[c] = (1.0 - pull) * s[c] + pull * target[c];
    }
  }

  const SceneScales scales = scales_for(scene);
  const double noise =
      config.observation_noise * get(scene.hidden_params, "noise_scale", 1.0);
  const int n_pos = kind == ScenarioKind::Rotation ? 1 : 2;
  const int n_comp = kind == ScenarioKind::Rotation ? 2 : 4;
  for (int f = 0; f < F; ++f) {
    auto& s = video.frames[static_cast<std::size_t>(f)];
    for (int c = 0; c < n_comp; ++c) {
      const double scale = c < n_pos ? scales.pos : scales.vel;
      s[c] += noise * scale * rng.unit();
    }
  }
  return video;
}

VerifierScore verify(const SceneSpec& scene, const AbstractVideo& video,
                     const WorldConfig& config) {
  if (static_cast<int>(video.frames.size()) != config.frames ||
      static_cast<int>(scene.ground_truth.size()) != config.frames)
    throw VerificationError("frame count mismatch");

  const ScenarioKind kind = scene.query.scenario_kind;
  const ParamMap tp = scene_true_params(scene);
  const double clip = clip_duration(kind, tp);
  const int F = config.frames;
  const double dt = clip / (F - 1);
  const SceneScales scales = scales_for(scene);
  const auto& gt = scene.ground_truth;
  const auto& fr = video.frames;

  double residual_pc = 0.0;
  double residual_sa = 0.0;

  switch (kind) {
    case ScenarioKind::Projectile: {
      const double g_true = get(tp, "gravity", constants::kDefaultGravity);
      std::vector<double> ay, ax;
      for (int i = 0; i + 1 < F; ++i) {
        ay.push_back((fr[static_cast<std::size_t>(i + 1)][3] - fr[static_cast<std::size_t>(i)][3]) / dt);
        ax.push_back((fr[static_cast<std::size_t>(i + 1)][2] - fr[static_cast<std::size_t>(i)][2]) / dt);
      }
      const double g_fit = -mean(ay);
      std::vector<double> dev = ay;
      for (double& a : dev) a += g_fit;
      const double consistency = (rms(dev) + rms(ax)) / g_true;
      const double commonsense = std::abs(g_fit - g_true) / g_true;
      residual_pc = 0.6 * consistency + 0.4 * commonsense;

      const auto& end_v = fr[static_cast<std::size_t>(F - 1)];
      const auto& end_g = gt[static_cast<std::size_t>(F - 1)];
      const double end_err =
          0.5 * (std::abs(end_v[0] - end_g[0]) + std::abs(end_v[1] - end_g[1])) /
          scales.pos;
      double apex_v = fr[0][1], apex_g = gt[0][1];
      for (int i = 0; i < F; ++i) {
        apex_v = std::max(apex_v, fr[static_cast<std::size_t>(i)][1]);
        apex_g = std::max(apex_g, gt[static_cast<std::size_t>(i)][1]);
      }
      const double apex_err = std::abs(apex_v - apex_g) / std::max(apex_g, 0.5);
      residual_sa = 0.7 * end_err + 0.3 * apex_err;
      break;
    }
    case ScenarioKind::Collision1D: {
      const double sep = constants::kCollisionSeparation;
      const double m1 = get(video.realized_params, "mass_1", get(tp, "mass_1"));
      const double m2 = get(video.realized_params, "mass_2", get(tp, "mass_2"));
      int m_idx = 0;
      double min_gap = fr[0][1] - fr[0][0];
      for (int i = 1; i < F; ++i) {
        const double gap = fr[static_cast<std::size_t>(i)][1] - fr[static_cast<std::size_t>(i)][0];
        if (gap < min_gap) {
          min_gap = gap;
          m_idx = i;
        }
      }
      const bool collided = min_gap <= kContactFraction * sep;

      double drift = 0.0;
      if (collided) {
        std::vector<double> pre, post;
        for (int i = 0; i <= m_idx - 2; ++i)
          pre.push_back(m1 * fr[static_cast<std::size_t>(i)][2] + m2 * fr[static_cast<std::size_t>(i)][3]);
        for (int i = m_idx + 2; i < F; ++i)
          post.push_back(m1 * fr[static_cast<std::size_t>(i)][2] + m2 * fr[static_cast<std::size_t>(i)][3]);
        if (pre.empty())
          pre.push_back(m1 * fr[0][2] + m2 * fr[0][3]);
        if (post.empty())
          post.push_back(m1 * fr[static_cast<std::size_t>(F - 1)][2] +
                         m2 * fr[static_cast<std::size_t>(F - 1)][3]);
        const double p_pre = mean(pre);
        const double p_post = mean(post);
        drift = std::abs(p_post - p_pre) /
                (std::abs(p_pre) + 0.1 * (m1 + m2) * scales.vel);
      }
      const double overlap = std::max(0.0, -min_gap) / sep;
      residual_pc = 0.7 * drift + 0.3 * overlap;

      const auto& end_v = fr[static_cast<std::size_t>(F - 1)];
      const auto& end_g = gt[static_cast<std::size_t>(F - 1)];
      const double pos_err =
          0.5 * (std::abs(end_v[0] - end_g[0]) + std::abs(end_v[1] - end_g[1])) /
          scales.pos;
      const double vel_err =
          0.5 * (std::abs(end_v[2] - end_g[2]) + std::abs(end_v[3] - end_g[3])) /
          scales.vel;
      residual_sa = 0.45 * pos_err + 0.25 * vel_err + 0.3 * (collided ? 0.0 : 1.0);
      break;
    }
    case ScenarioKind::Rotation: {
      const double alpha_true = get(tp, "torque") / get(tp, "inertia", 1.0);
      const double alpha_scale = std::max(std::abs(alpha_true), 0.5);
      std::vector<double> al;
      for (int i = 0; i + 1 < F; ++i)
        al.push_back((fr[static_cast<std::size_t>(i + 1)][1] - fr[static_cast<std::size_t>(i)][1]) / dt);
      const double alpha_fit = mean(al);
      std::vector<double> dev = al;
      for (double& a : dev) a -= alpha_fit;
      residual_pc = 0.6 * rms(dev) / alpha_scale +
                    0.4 * std::abs(alpha_fit - alpha_true) / alpha_scale;

      const auto& end_v = fr[static_cast<std::size_t>(F - 1)];
      const auto& end_g = gt[static_cast<std::size_t>(F - 1)];
      const double dtheta_gt = end_g[0] - gt[0][0];
      const double dtheta_v = end_v[0] - fr[0][0];
      double dir_mismatch = 0.0;
      if (std::abs(dtheta_gt) / scales.pos > 0.05 &&
          dtheta_v * dtheta_gt < 0.0)
        dir_mismatch = 1.0;
      residual_sa = 0.5 * std::abs(end_v[0] - end_g[0]) / scales.pos +
                    0.3 * std::abs(end_v[1] - end_g[1]) / scales.vel +
                    0.2 * dir_mismatch;
      break;
    }
  }

  VerifierScore score;
  score.pc = std::clamp(5.0 - config.lambda_pc * residual_pc, 1.0, 5.0);
  score.sa = std::clamp(5.0 - config.lambda_sa * residual_sa, 1.0, 5.0);
  if (config.integer_scores) {
    score.pc = std::clamp(std::round(score.pc), 1.0, 5.0);
    score.sa = std::clamp(std::round(score.sa), 1.0, 5.0);
  }
  return score;
}

SyntheticWorld::SyntheticWorld(std::vector<SceneSpec> bank, WorldConfig config)
    : bank_(std::move(bank)), config_(config) {
  for (std::size_t i = 0; i < bank_.size(); ++i)
    by_caption_[bank_[i].query.caption] = i;
}

bool SyntheticWorld::has_scene(const SceneQuery& query) const {
  auto it = by_caption_.find(query.caption);
  return it != by_caption_.end() && bank_[it->second].query == query;
}

GenerationOutcome SyntheticWorld::generate_and_score(
    const SceneQuery& query, const ConditioningBundle& conditioning,
    std::uint64_t noise_seed) {
  auto it = by_caption_.find(query.caption);
  if (it == by_caption_.end() || !(bank_[it->second].query == query))
    return {false, {}, "unknown scene"};
  const SceneSpec& scene = bank_[it->second];
  const AbstractVideo video = generate_video(scene, conditioning, noise_seed, config_);
  return {true, verify(scene, video, config_), ""};
}

}  // namespace physloop
