#pragma once

#include <Eigen/Core>

#include "planlab/scene.hpp"

namespace planlab {

// Hand-crafted scene context vector: ego speed, the four nearest agents
// (relative position, velocity, radius; zero-padded), centerline tangents
// and drivable widths sampled at fixed arc offsets ahead of the ego. All
// entries are rescaled to roughly unit range. Dimension is fixed at 39.
inline constexpr int kMaxFeatureAgents = 4;
inline constexpr int kFeatureArcSamples = 6;
inline constexpr int kFeatureDim = 1 + 5 * kMaxFeatureAgents + 3 * kFeatureArcSamples;

Eigen::VectorXd scene_features(const Scene& scene);

}  // namespace planlab
