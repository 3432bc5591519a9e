#pragma once

#include <vector>

#include "planlab/scene.hpp"

namespace planlab {

struct GenOptions {
  int n_f = 8;
  double dt = 0.5;
  // Probability of optional hazard agents (lead vehicle, parked car, ...)
  double agent_prob = 0.7;
  // Adversarial mixes always place hazards and make leads slow or stopped.
  bool adversarial = false;
};

// Deterministic per (tag, seed, options). The generated expert trajectory is
// guaranteed to score PDMS >= 0.8 under score_submetrics; multi_modal scenes
// additionally admit a second scripted maneuver at the same bar, also
// scoring >= 0.8. Draws are rejected and retried up to 1000 times.
Scene generate_scene(SceneTag tag, uint64_t seed, const GenOptions& options = {});

// Re-derives the scripted maneuver candidates the generator verified for
// this (tag, seed): one for straight/turn scenes, the left- and right-turn
// pair for multi_modal scenes.
std::vector<Trajectory> scripted_mode_candidates(SceneTag tag, uint64_t seed,
                                                 const GenOptions& options = {});

struct DatasetMix {
  double straight = 0.4;
  double turn = 0.3;
  double multi_modal = 0.3;
};

std::vector<Scene> generate_dataset(int n_scenes, const DatasetMix& mix, uint64_t seed,
                                    const GenOptions& options = {});

}  // namespace planlab
