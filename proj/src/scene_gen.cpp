#include "planlab/scene_gen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "planlab/metrics.hpp"
#include "planlab/rng.hpp"

namespace planlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Route with per-vertex curvature, sampled finely enough for the driver.
struct Route {
  Polyline line;
  std::vector<double> curvature;  // aligned with line.points()
};

struct RouteBuilder {
  std::vector<Vec2> pts;
  std::vector<double> kappa;
  Vec2 pos{0.0, 0.0};
  double heading = 0.0;

  void start(const Vec2& p, double h) {
    pos = p;
    heading = h;
    pts.push_back(p);
    kappa.push_back(0.0);
  }

  void straight(double len, double step = 0.25) {
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    const Vec2 dir(std::cos(heading), std::sin(heading));
    for (int i = 1; i <= n; ++i) {
      pts.push_back(pos + (len * i / n) * dir);
      kappa.push_back(0.0);
    }
    pos += len * dir;
  }

  // dir_sign +1 turns left, -1 turns right.
  void arc(double radius, double angle, int dir_sign, double step = 0.25) {
    const double arc_len = radius * angle;
    const int n = std::max(2, static_cast<int>(std::ceil(arc_len / step)));
    const Vec2 center = pos + radius * Vec2(-std::sin(heading), std::cos(heading)) * dir_sign;
    const double a0 = std::atan2(pos.y() - center.y(), pos.x() - center.x());
    for (int i = 1; i <= n; ++i) {
      const double a = a0 + dir_sign * angle * i / n;
      pts.push_back(center + radius * Vec2(std::cos(a), std::sin(a)));
      kappa.push_back(1.0 / radius);
    }
    heading += dir_sign * angle;
    pos = pts.back();
  }

  Route build() const { return Route{Polyline(pts), kappa}; }
};

struct LeadSpec {
  bool present = false;
  double s0 = 0.0;   // arc position on the route at t = 0
  double speed = 0.0;
};

// Forward-simulated speed-profile follower. Comfort margins are deliberately
// conservative (accel limits 1.8 / -2.8, jerk limit 5) so the dt-sampled
// finite differences stay inside the 4 m/s^2 / 8 m/s^3 gates.
Trajectory drive_route(const Route& route, double v0, double v_cruise, const LeadSpec& lead,
                       int n_f, double dt) {
  const double a_lat_budget = 2.5;
  const double a_brake = 2.0;
  const double ds = 0.5;
  const int grid = std::max(2, static_cast<int>(route.line.length() / ds) + 1);

  // Curvature-limited speed with a backward braking pass.
  std::vector<double> vlim(grid, v_cruise);
  {
    const auto& pts = route.line.points();
    double arc = 0.0;
    for (size_t j = 0; j < pts.size(); ++j) {
      if (j > 0) arc += (pts[j] - pts[j - 1]).norm();
      const double k = route.curvature[j];
      if (k > 1e-9) {
        const double cap = std::sqrt(a_lat_budget / k);
        const int bin = std::clamp(static_cast<int>(arc / ds), 0, grid - 1);
        vlim[bin] = std::min(vlim[bin], cap);
        if (bin + 1 < grid) vlim[bin + 1] = std::min(vlim[bin + 1], cap);
      }
    }
  }
  for (int i = grid - 2; i >= 0; --i) {
    vlim[i] = std::min(vlim[i], std::sqrt(vlim[i + 1] * vlim[i + 1] + 2.0 * a_brake * ds));
  }
  auto v_target = [&](double s) {
    const int i = std::clamp(static_cast<int>(s / ds), 0, grid - 1);
    return vlim[i];
  };

  const double h = dt / 10.0;
  double s = route.line.project(Vec2(0.0, 0.0));  // routes begin behind the ego
  double v = v0, a_prev = 0.0;
  Trajectory traj;
  traj.dt = dt;
  for (int n = 1; n <= n_f; ++n) {
    for (int sub = 0; sub < 10; ++sub) {
      const double t = (n - 1) * dt + sub * h;
      double a_cmd = 1.2 * (v_target(s) - v);
      if (lead.present) {
        const double gap = lead.s0 + lead.speed * t - s;
        const double gap_des = 3.8 + 1.3 * v;
        const double a_follow = 0.8 * (gap - gap_des) + 1.6 * (lead.speed - v);
        a_cmd = std::min(a_cmd, a_follow);
      }
      a_cmd = std::clamp(a_cmd, -2.8, 1.8);
      a_cmd = std::clamp(a_cmd, a_prev - 5.0 * h, a_prev + 5.0 * h);
      v = std::max(0.0, v + a_cmd * h);
      s += v * h;
      a_prev = a_cmd;
    }
    traj.wp.push_back(route.line.point_at(s));
  }
  return traj;
}

struct Blueprint {
  Scene scene;                           // expert filled in later
  std::vector<Trajectory> candidates;    // scripted maneuvers, first = default
};

Blueprint draw_straight(Rng& rng, const GenOptions& opt) {
  Blueprint bp;
  const double w = rng.uniform(7.5, 10.0);
  const double v0 = rng.uniform(3.5, 6.5);
  const double x_end = 45.0;

  RouteBuilder rb;
  rb.start(Vec2(-5.0, 0.0), 0.0);
  rb.straight(x_end + 5.0, 1.0);
  Route route = rb.build();

  Scene& s = bp.scene;
  s.tag = SceneTag::straight;
  s.ego_radius = 1.0;
  s.ego_speed = v0;
  s.drivable.v = {Vec2(-5.0, -w / 2), Vec2(x_end, -w / 2), Vec2(x_end, w / 2), Vec2(-5.0, w / 2)};
  s.centerline = route.line;

  LeadSpec lead;
  const bool place_lead = opt.adversarial || rng.bernoulli(opt.agent_prob);
  if (place_lead) {
    Agent a;
    a.radius = rng.uniform(0.8, 1.2);
    const double gap0 = rng.uniform(11.0, 22.0);
    const double v_lead = opt.adversarial ? rng.uniform(0.0, 0.25 * v0) : rng.uniform(0.0, 0.8 * v0);
    lead.present = true;
    lead.s0 = 5.0 + gap0;  // route starts 5 m behind the ego
    lead.speed = v_lead;
    a.pos = Vec2(gap0, 0.0);
    a.vel = Vec2(v_lead, 0.0);
    s.agents.push_back(a);
  }
  if (opt.adversarial ? rng.bernoulli(0.8) : rng.bernoulli(0.5 * opt.agent_prob)) {
    Agent parked;
    parked.radius = rng.uniform(0.8, 1.1);
    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    parked.pos = Vec2(rng.uniform(8.0, 30.0), side * (w / 2 - 0.6));
    parked.vel = Vec2(0.0, 0.0);
    s.agents.push_back(parked);
  }

  bp.candidates.push_back(drive_route(route, v0, rng.uniform(5.0, 7.5), lead, opt.n_f, opt.dt));
  return bp;
}

Blueprint draw_turn(Rng& rng, const GenOptions& opt) {
  Blueprint bp;
  const double w = rng.uniform(7.5, 9.0);
  const double v0 = rng.uniform(3.5, 5.5);
  const double d_bend = rng.uniform(8.0, 13.0);
  const double radius = rng.uniform(7.0, 10.0);
  const int dir_sign = rng.bernoulli(0.5) ? 1 : -1;

  RouteBuilder rb;
  rb.start(Vec2(-5.0, 0.0), 0.0);
  rb.straight(5.0 + d_bend, 1.0);
  rb.arc(radius, kPi / 2.0, dir_sign, 1.0);
  rb.straight(14.0, 1.0);
  Route route = rb.build();

  Scene& s = bp.scene;
  s.tag = SceneTag::turn;
  s.ego_radius = 1.0;
  s.ego_speed = v0;
  s.drivable = corridor_polygon(route.line, w);
  s.centerline = route.line;

  if (opt.adversarial || rng.bernoulli(opt.agent_prob)) {
    // Oncoming vehicle on the entry straight, offset to the far side.
    Agent a;
    a.radius = rng.uniform(0.8, 1.2);
    const double lat = std::max(3.2, w / 2 - 1.0);
    a.pos = Vec2(rng.uniform(14.0, 26.0), dir_sign * lat);
    a.vel = Vec2(-rng.uniform(2.0, 5.0), 0.0);
    s.agents.push_back(a);
  }
  if (opt.adversarial ? rng.bernoulli(0.8) : rng.bernoulli(0.5 * opt.agent_prob)) {
    // Parked car pinching the corridor just before the bend.
    Agent parked;
    parked.radius = rng.uniform(0.7, 1.0);
    const double lat = w / 2 - 0.5;
    parked.pos = Vec2(rng.uniform(4.0, d_bend - 1.0), (rng.bernoulli(0.5) ? 1.0 : -1.0) * lat);
    parked.vel = Vec2(0.0, 0.0);
    s.agents.push_back(parked);
  }

  LeadSpec no_lead;
  bp.candidates.push_back(drive_route(route, v0, rng.uniform(4.5, 6.5), no_lead, opt.n_f, opt.dt));
  return bp;
}

Blueprint draw_multi_modal(Rng& rng, const GenOptions& opt) {
  Blueprint bp;
  const double w = rng.uniform(7.5, 9.0);
  const double wb = rng.uniform(8.0, 10.0);
  const double d_j = rng.uniform(8.0, 12.0);   // stem mouth
  const double bar_half = 18.0;
  const double v0 = rng.uniform(3.5, 5.0);
  const double x_bar = d_j + wb / 2.0;

  Scene& s = bp.scene;
  s.tag = SceneTag::multi_modal;
  s.ego_radius = 1.0;
  s.ego_speed = v0;
  s.drivable.v = {Vec2(-5.0, -w / 2),      Vec2(d_j, -w / 2),      Vec2(d_j, -bar_half),
                  Vec2(d_j + wb, -bar_half), Vec2(d_j + wb, bar_half), Vec2(d_j, bar_half),
                  Vec2(d_j, w / 2),        Vec2(-5.0, w / 2)};
  // The shared stem is the scene centerline; both maneuvers traverse it.
  s.centerline = Polyline({Vec2(-5.0, 0.0), Vec2(x_bar, 0.0)});

  const double radius = std::min(x_bar - 0.5, rng.uniform(5.5, 7.0));
  auto turn_route = [&](int dir_sign) {
    RouteBuilder rb;
    rb.start(Vec2(-5.0, 0.0), 0.0);
    rb.straight(5.0 + x_bar - radius, 1.0);
    rb.arc(radius, kPi / 2.0, dir_sign, 1.0);
    rb.straight(bar_half - radius - 2.0, 1.0);
    return rb.build();
  };
  const Route left = turn_route(1);
  const Route right = turn_route(-1);

  if (opt.adversarial || rng.bernoulli(opt.agent_prob)) {
    // Outbound vehicle on one arm, moving away from the junction.
    Agent a;
    a.radius = rng.uniform(0.8, 1.1);
    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    a.pos = Vec2(x_bar, side * rng.uniform(5.0, 8.0));
    a.vel = Vec2(0.0, side * rng.uniform(2.5, 4.0));
    s.agents.push_back(a);
  }
  if (opt.adversarial ? rng.bernoulli(0.9) : rng.bernoulli(0.6 * opt.agent_prob)) {
    // Early crosser: sweeps the junction well before the ego arrives.
    Agent a;
    a.radius = rng.uniform(0.8, 1.1);
    const double vc = rng.uniform(5.0, 6.5);
    const double t_cross = rng.uniform(0.2, 0.5);
    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    a.pos = Vec2(x_bar + rng.uniform(-1.5, 1.5), -side * vc * t_cross);
    a.vel = Vec2(0.0, side * vc);
    s.agents.push_back(a);
  }
  if (opt.adversarial ? rng.bernoulli(0.7) : rng.bernoulli(0.4 * opt.agent_prob)) {
    Agent parked;
    parked.radius = rng.uniform(0.7, 1.0);
    parked.pos = Vec2(rng.uniform(3.0, d_j - 2.0),
                      (rng.bernoulli(0.5) ? 1.0 : -1.0) * (w / 2 - 0.5));
    parked.vel = Vec2(0.0, 0.0);
    s.agents.push_back(parked);
  }

  LeadSpec no_lead;
  const double cruise = rng.uniform(4.0, 5.5);
  Trajectory left_traj = drive_route(left, v0, cruise, no_lead, opt.n_f, opt.dt);
  Trajectory right_traj = drive_route(right, v0, cruise, no_lead, opt.n_f, opt.dt);
  if (rng.bernoulli(0.5)) {
    bp.candidates = {left_traj, right_traj};
  } else {
    bp.candidates = {right_traj, left_traj};
  }
  return bp;
}

Blueprint draw_blueprint(SceneTag tag, Rng& rng, const GenOptions& opt) {
  switch (tag) {
    case SceneTag::straight: return draw_straight(rng, opt);
    case SceneTag::turn: return draw_turn(rng, opt);
    case SceneTag::multi_modal: return draw_multi_modal(rng, opt);
  }
  throw std::logic_error("bad scene tag");
}

bool blueprint_ok(Blueprint& bp) {
  Scene& s = bp.scene;
  if (!s.drivable.is_simple()) return false;
  if (!s.drivable.contains(Vec2(0.0, 0.0))) return false;
  s.expert = bp.candidates.front();
  if (!s.expert.finite()) return false;
  for (const auto& cand : bp.candidates) {
    if (score_submetrics(s, cand).pdms < 0.8) return false;
  }
  return true;
}

Blueprint accepted_blueprint(SceneTag tag, uint64_t seed, const GenOptions& options) {
  Rng base(seed ^ 0x5ce9e5eed0c0ffeeULL);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Rng rng = base.fork(attempt);
    Blueprint bp = draw_blueprint(tag, rng, options);
    bp.scene.seed = seed;
    if (blueprint_ok(bp)) return bp;
  }
  throw std::runtime_error("scene generation failed after 1000 draws (tag " + tag_name(tag) + ")");
}

}  // namespace

Scene generate_scene(SceneTag tag, uint64_t seed, const GenOptions& options) {
  return accepted_blueprint(tag, seed, options).scene;
}

std::vector<Trajectory> scripted_mode_candidates(SceneTag tag, uint64_t seed,
                                                 const GenOptions& options) {
  return accepted_blueprint(tag, seed, options).candidates;
}

std::vector<Scene> generate_dataset(int n_scenes, const DatasetMix& mix, uint64_t seed,
                                    const GenOptions& options) {
  const double total = mix.straight + mix.turn + mix.multi_modal;
  if (total <= 0.0) throw std::invalid_argument("dataset mix must have positive mass");
  Rng rng(seed);
  std::vector<Scene> scenes;
  scenes.reserve(n_scenes);
  for (int i = 0; i < n_scenes; ++i) {
    const double u = rng.uniform() * total;
    SceneTag tag = SceneTag::multi_modal;
    if (u < mix.straight) {
      tag = SceneTag::straight;
    } else if (u < mix.straight + mix.turn) {
      tag = SceneTag::turn;
    }
    scenes.push_back(generate_scene(tag, rng.fork(1000 + i).seed(), options));
  }
  return scenes;
}

}  // namespace planlab
