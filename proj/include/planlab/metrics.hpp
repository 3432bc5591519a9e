#pragma once

#include <optional>

#include "planlab/scene.hpp"
#include "planlab/trajectory.hpp"

namespace planlab {

struct RewardBreakdown {
  int nc = 1;        // no-collision gate
  int dac = 1;       // drivable-area gate
  int ttc = 1;       // time-to-collision gate
  int comfort = 1;   // acceleration/jerk gate
  double ep = 0.0;   // clamped progress ratio
  double pdms = 0.0;
  bool collided = false;
};

struct CollisionResult {
  bool collided = false;
  std::optional<int> first_index;  // 0-based waypoint index
};

// Ego disc at each waypoint versus every agent disc extrapolated at constant
// velocity to that waypoint's timestamp ((i + 1) * dt for waypoint i).
// Collision iff center distance < sum of radii.
CollisionResult check_collision(const Scene& scene, const Trajectory& traj);

RewardBreakdown score_submetrics(const Scene& scene, const Trajectory& traj);

// NC * DAC * (5*EP + 5*TTC + 2*C) / 12. Gates must be 0/1, ep in [0, 1].
double pdms_aggregate(int nc, int dac, double ep, int ttc, int comfort);

// NC * DAC * DDC * TL * (5*TTC + 2*C + 5*EP + 5*LK + 5*EC) / 22. The extended
// submetrics are accepted as inputs only; nothing here measures them.
double epdms_aggregate(int nc, int dac, int ddc, int tl, double ep, double ttc, double c,
                       double lk, double ec);

// Comfort thresholds and the TTC lookahead used by score_submetrics.
inline constexpr double kMaxAccel = 4.0;       // m/s^2
inline constexpr double kMaxJerk = 8.0;        // m/s^3
inline constexpr double kTtcLookahead = 1.0;   // s

}  // namespace planlab
