#include "planlab/features.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace planlab {

Eigen::VectorXd scene_features(const Scene& scene) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kFeatureDim);
  int idx = 0;
  f[idx++] = scene.ego_speed / 10.0;

  std::vector<int> order(scene.agents.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return scene.agents[a].pos.squaredNorm() < scene.agents[b].pos.squaredNorm();
  });
  for (int k = 0; k < kMaxFeatureAgents; ++k) {
    if (k < static_cast<int>(order.size())) {
      const Agent& a = scene.agents[order[k]];
      f[idx++] = a.pos.x() / 20.0;
      f[idx++] = a.pos.y() / 20.0;
      f[idx++] = a.vel.x() / 10.0;
      f[idx++] = a.vel.y() / 10.0;
      f[idx++] = a.radius / 2.0;
    } else {
      idx += 5;
    }
  }

  const double s0 = scene.centerline.project(Vec2(0.0, 0.0));
  const double max_width = 24.0;
  for (int k = 0; k < kFeatureArcSamples; ++k) {
    const double s = s0 + 4.0 * k;
    const Vec2 p = scene.centerline.point_at(s);
    const Vec2 t = scene.centerline.tangent_at(s);
    const Vec2 n(-t.y(), t.x());
    f[idx++] = t.x();
    f[idx++] = t.y();
    const double wl = ray_polygon_distance(scene.drivable, p, n, max_width / 2.0);
    const double wr = ray_polygon_distance(scene.drivable, p, -n, max_width / 2.0);
    f[idx++] = (wl + wr) / max_width;
  }
  return f;
}

}  // namespace planlab
