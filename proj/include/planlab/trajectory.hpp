#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace planlab {

// Planar waypoint sequence in the ego frame at t = 0: x forward, y left,
// meters. wp[i] is the pose at time (i + 1) * dt.
struct Trajectory {
  std::vector<Eigen::Vector2d> wp;
  double dt = 0.5;

  int size() const { return static_cast<int>(wp.size()); }
  bool finite() const;

  // Flattened [x1, y1, x2, y2, ...] view used by clustering and the nets.
  Eigen::VectorXd flat() const;
  static Trajectory from_flat(const Eigen::VectorXd& v, double dt);
};

void validate_trajectory(const Trajectory& traj);

// Two-scalar multiplicative exploration noise: tau' = (1 + eps) ∘ tau,
// one factor for the longitudinal axis and one for the lateral axis.
struct MulNoise {
  double eps_long = 0.0;
  double eps_lat = 0.0;
};

struct AnchorSet {
  std::vector<Trajectory> anchors;
  std::vector<int> counts;

  int size() const { return static_cast<int>(anchors.size()); }
};

Trajectory apply_multiplicative_noise(const Trajectory& traj, const MulNoise& noise);

// per_point_noise holds [ex1, ey1, ex2, ey2, ...] and must have 2 * N_f entries.
Trajectory apply_additive_noise(const Trajectory& traj, std::span<const double> per_point_noise);

// Lloyd's iterations over flattened waypoint vectors with seeded k-means++
// initialization. Runs to an assignment fixpoint (max 100 iterations); an
// emptied cluster is re-seeded to the point farthest from its assigned center.
// inertia_trace, when given, receives the within-cluster inertia after each
// iteration.
AnchorSet kmeans_anchors(const std::vector<Trajectory>& expert_trajs, int n_anchor, uint64_t seed,
                         std::vector<double>* inertia_trace = nullptr);

double kmeans_inertia(const std::vector<Trajectory>& trajs, const AnchorSet& anchors);

// Mean over waypoints of the scale-normalized pairwise spread, clamped to
// [0, 1] per waypoint. Needs at least two trajectories of equal length.
double diversity(const std::vector<Trajectory>& trajs, double eps = 1e-6);

nlohmann::json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace planlab
