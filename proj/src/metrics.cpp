#include "planlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace planlab {

CollisionResult check_collision(const Scene& scene, const Trajectory& traj) {
  CollisionResult res;
  for (int i = 0; i < traj.size(); ++i) {
    const double t = (i + 1) * traj.dt;
    for (const auto& agent : scene.agents) {
      const Vec2 apos = agent.pos + t * agent.vel;
      const double r = scene.ego_radius + agent.radius;
      if ((traj.wp[i] - apos).norm() < r) {
        res.collided = true;
        res.first_index = i;
        return res;
      }
    }
  }
  return res;
}

namespace {

bool gate01(int g) { return g == 0 || g == 1; }

// Velocities by finite differences with the origin prepended; the initial
// ego speed is deliberately not used so a zero trajectory stays comfortable.
std::vector<Vec2> step_velocities(const Trajectory& traj) {
  std::vector<Vec2> v(traj.size());
  Vec2 prev(0.0, 0.0);
  for (int i = 0; i < traj.size(); ++i) {
    v[i] = (traj.wp[i] - prev) / traj.dt;
    prev = traj.wp[i];
  }
  return v;
}

}  // namespace

RewardBreakdown score_submetrics(const Scene& scene, const Trajectory& traj) {
  validate_trajectory(traj);
  if (scene.centerline.size() < 2) throw std::invalid_argument("degenerate centerline");

  RewardBreakdown rb;

  const CollisionResult col = check_collision(scene, traj);
  rb.collided = col.collided;
  rb.nc = col.collided ? 0 : 1;

  rb.dac = 1;
  for (const auto& p : traj.wp) {
    if (!scene.drivable.contains(p)) {
      rb.dac = 0;
      break;
    }
  }

  // TTC: project the ego one extra second along its per-step velocity and
  // test against agents advanced to the same future instant.
  const std::vector<Vec2> vel = step_velocities(traj);
  rb.ttc = 1;
  for (int i = 0; i < traj.size() && rb.ttc == 1; ++i) {
    const double t = (i + 1) * traj.dt + kTtcLookahead;
    const Vec2 epos = traj.wp[i] + kTtcLookahead * vel[i];
    for (const auto& agent : scene.agents) {
      const Vec2 apos = agent.pos + t * agent.vel;
      if ((epos - apos).norm() < scene.ego_radius + agent.radius) {
        rb.ttc = 0;
        break;
      }
    }
  }

  rb.comfort = 1;
  std::vector<Vec2> acc;
  for (size_t i = 0; i + 1 < vel.size(); ++i) acc.push_back((vel[i + 1] - vel[i]) / traj.dt);
  for (const auto& a : acc) {
    if (a.norm() > kMaxAccel) rb.comfort = 0;
  }
  for (size_t i = 0; i + 1 < acc.size(); ++i) {
    if (((acc[i + 1] - acc[i]) / traj.dt).norm() > kMaxJerk) rb.comfort = 0;
  }

  // Progress along the centerline relative to the expert.
  const double s0 = scene.centerline.project(Vec2(0.0, 0.0));
  const double ego_progress = scene.centerline.project(traj.wp.back()) - s0;
  const double expert_progress = scene.centerline.project(scene.expert.wp.back()) - s0;
  if (expert_progress > 1e-9) {
    rb.ep = std::clamp(ego_progress / expert_progress, 0.0, 1.0);
  } else {
    rb.ep = ego_progress > 0.0 ? 1.0 : 0.0;
  }

  rb.pdms = pdms_aggregate(rb.nc, rb.dac, rb.ep, rb.ttc, rb.comfort);
  return rb;
}

double pdms_aggregate(int nc, int dac, double ep, int ttc, int comfort) {
  if (!gate01(nc) || !gate01(dac) || !gate01(ttc) || !gate01(comfort)) {
    throw std::invalid_argument("pdms gates must be 0 or 1");
  }
  if (!(ep >= 0.0 && ep <= 1.0)) throw std::invalid_argument("ep must lie in [0, 1]");
  return nc * dac * (5.0 * ep + 5.0 * ttc + 2.0 * comfort) / 12.0;
}

double epdms_aggregate(int nc, int dac, int ddc, int tl, double ep, double ttc, double c,
                       double lk, double ec) {
  if (!gate01(nc) || !gate01(dac) || !gate01(ddc) || !gate01(tl)) {
    throw std::invalid_argument("epdms gates must be 0 or 1");
  }
  for (double x : {ep, ttc, c, lk, ec}) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("epdms submetrics must lie in [0, 1]");
  }
  return nc * dac * ddc * tl * (5.0 * ttc + 2.0 * c + 5.0 * ep + 5.0 * lk + 5.0 * ec) / 22.0;
}

}  // namespace planlab
