#include "planlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "planlab/features.hpp"
#include "planlab/metrics.hpp"
#include "planlab/scene_gen.hpp"

namespace planlab {

std::string rank_mode_name(RankMode mode) {
  switch (mode) {
    case RankMode::generator_score: return "generator_score";
    case RankMode::selector: return "selector";
    case RankMode::oracle_pdms: return "oracle_pdms";
  }
  throw std::logic_error("bad rank mode");
}

std::vector<std::pair<Trajectory, double>> generate_candidates(const DiffusionPolicy& policy,
                                                               const Eigen::VectorXd& features,
                                                               int n_candidates, int n_steps,
                                                               uint64_t seed) {
  if (n_candidates < 1) throw std::invalid_argument("need at least one candidate");
  Rng base(seed);
  std::vector<std::pair<Trajectory, double>> out;
  int replicate = 0;
  while (static_cast<int>(out.size()) < n_candidates) {
    const auto batch = policy.infer(features, n_steps, base.fork(replicate).seed());
    for (const auto& cand : batch) {
      if (static_cast<int>(out.size()) >= n_candidates) break;
      out.push_back(cand);
    }
    ++replicate;
  }
  return out;
}

namespace {

std::vector<int> rank_by_scores(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

struct SceneEval {
  double selected_pdms = 0.0;
  double at1 = 0.0, at5 = 0.0, at10 = 0.0;
  double diversity = 0.0;
  bool diversity_defined = true;
  double collision_rate = 0.0;
};

double topk_mean(const std::vector<double>& pdms, const std::vector<int>& order, int k) {
  const int kk = std::min<int>(k, static_cast<int>(order.size()));
  double sum = 0.0;
  for (int i = 0; i < kk; ++i) sum += pdms[order[i]];
  return sum / kk;
}

}  // namespace

EvalReport evaluate(const DiffusionPolicy& policy, const Selector* selector,
                    const std::vector<Scene>& scenes, int n_candidates, int n_steps, uint64_t seed,
                    RankMode mode, const std::string& label) {
  if (scenes.empty()) throw std::invalid_argument("evaluate: no scenes");
  if (mode == RankMode::selector && selector == nullptr) {
    throw std::invalid_argument("evaluate: selector ranking requested without a selector");
  }

  EvalReport report;
  report.label = label;
  report.rank_mode = mode;

  Rng base(seed);
  std::map<std::string, std::vector<SceneEval>> by_tag;
  std::vector<SceneEval> all;

  for (size_t si = 0; si < scenes.size(); ++si) {
    const Scene& scene = scenes[si];
    const Eigen::VectorXd features = scene_features(scene);
    const auto candidates =
        generate_candidates(policy, features, n_candidates, n_steps, base.fork(si).seed());

    std::vector<Trajectory> trajs;
    std::vector<double> logits;
    for (const auto& [traj, logit] : candidates) {
      trajs.push_back(traj);
      logits.push_back(logit);
    }
    std::vector<double> pdms(trajs.size());
    int collided = 0;
    for (size_t i = 0; i < trajs.size(); ++i) {
      const RewardBreakdown rb = score_submetrics(scene, trajs[i]);
      pdms[i] = rb.pdms;
      collided += rb.collided ? 1 : 0;
    }

    std::vector<int> order;
    switch (mode) {
      case RankMode::generator_score: order = rank_by_scores(logits); break;
      case RankMode::selector: order = rank_candidates(*selector, features, trajs); break;
      case RankMode::oracle_pdms: order = rank_by_scores(pdms); break;
    }

    SceneEval ev;
    ev.selected_pdms = pdms[order.front()];
    ev.at1 = topk_mean(pdms, order, 1);
    ev.at5 = topk_mean(pdms, order, 5);
    ev.at10 = topk_mean(pdms, order, 10);
    if (trajs.size() >= 2) {
      ev.diversity = diversity(trajs);
    } else {
      ev.diversity = 0.0;
      ev.diversity_defined = false;
    }
    ev.collision_rate = static_cast<double>(collided) / trajs.size();
    by_tag[tag_name(scene.tag)].push_back(ev);
    all.push_back(ev);
  }

  auto aggregate = [](const std::vector<SceneEval>& evs) {
    EvalMetrics m;
    for (const auto& e : evs) {
      m.mean_selected_pdms += e.selected_pdms;
      m.pdms_at1 += e.at1;
      m.pdms_at5 += e.at5;
      m.pdms_at10 += e.at10;
      m.diversity += e.diversity;
      m.collision_rate += e.collision_rate;
    }
    const double n = static_cast<double>(evs.size());
    m.mean_selected_pdms /= n;
    m.pdms_at1 /= n;
    m.pdms_at5 /= n;
    m.pdms_at10 /= n;
    m.diversity /= n;
    m.collision_rate /= n;
    m.n_scenes = static_cast<int>(evs.size());
    return m;
  };

  report.overall = aggregate(all);
  for (const auto& [tag, evs] : by_tag) report.per_tag[tag] = aggregate(evs);
  report.diversity_defined =
      std::all_of(all.begin(), all.end(), [](const SceneEval& e) { return e.diversity_defined; });
  report.topk_monotone = report.overall.pdms_at1 >= report.overall.pdms_at5 &&
                         report.overall.pdms_at5 >= report.overall.pdms_at10;
  return report;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

EvalReport median_report(const std::vector<EvalReport>& reports, const std::string& label) {
  EvalReport out;
  out.label = label;
  out.rank_mode = reports.front().rank_mode;
  auto med = [&](auto field) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(field(r.overall));
    return median(v);
  };
  out.overall.mean_selected_pdms = med([](const EvalMetrics& m) { return m.mean_selected_pdms; });
  out.overall.pdms_at1 = med([](const EvalMetrics& m) { return m.pdms_at1; });
  out.overall.pdms_at5 = med([](const EvalMetrics& m) { return m.pdms_at5; });
  out.overall.pdms_at10 = med([](const EvalMetrics& m) { return m.pdms_at10; });
  out.overall.diversity = med([](const EvalMetrics& m) { return m.diversity; });
  out.overall.collision_rate = med([](const EvalMetrics& m) { return m.collision_rate; });
  out.overall.n_scenes = reports.front().overall.n_scenes;
  return out;
}

}  // namespace

AblationTable run_ablation(const std::string& name, const AblationContext& ctx,
                           const std::vector<uint64_t>& seeds) {
  const std::vector<std::string> valid = {"noise_type", "intra_anchor", "inter_trunc",
                                          "selector_design"};
  if (std::find(valid.begin(), valid.end(), name) == valid.end()) {
    std::string msg = "unknown ablation '" + name + "'; valid names:";
    for (const auto& v : valid) msg += " " + v;
    throw std::invalid_argument(msg);
  }

  AblationTable table;
  table.name = name;

  struct Variant {
    std::string label;
    RLConfig rl;
    SelectorConfig sel;
    bool needs_selector = false;
  };
  std::vector<Variant> variants;
  if (name == "noise_type") {
    Variant mul{"multiplicative", ctx.rl, ctx.selector, false};
    mul.rl.noise_type = ExploreNoise::multiplicative;
    Variant add{"additive", ctx.rl, ctx.selector, false};
    add.rl.noise_type = ExploreNoise::additive;
    variants = {mul, add};
  } else if (name == "intra_anchor") {
    Variant on{"intra_anchor", ctx.rl, ctx.selector, false};
    on.rl.intra_anchor = true;
    Variant off{"pooled", ctx.rl, ctx.selector, false};
    off.rl.intra_anchor = false;
    variants = {on, off};
  } else if (name == "inter_trunc") {
    Variant on{"truncated", ctx.rl, ctx.selector, false};
    on.rl.inter_trunc = true;
    Variant off{"raw_advantages", ctx.rl, ctx.selector, false};
    off.rl.inter_trunc = false;
    variants = {on, off};
  } else {
    Variant c2f{"coarse2fine_rank", ctx.rl, ctx.selector, true};
    c2f.sel.two_stage = true;
    c2f.sel.use_rank = true;
    Variant single{"single_stage_bce", ctx.rl, ctx.selector, true};
    single.sel.two_stage = false;
    single.sel.use_rank = false;
    variants = {c2f, single};
  }

  std::vector<std::vector<EvalReport>> per_variant(variants.size());
  for (uint64_t seed : seeds) {
    const auto train =
        generate_dataset(ctx.n_train_scenes, ctx.train_mix, seed ^ 0x7261a1ULL, ctx.gen_train);
    const auto eval_set =
        generate_dataset(ctx.n_eval_scenes, ctx.eval_mix, seed ^ 0xe7a1ULL, ctx.gen_eval);
    const ILResult il = train_il(ctx.il, train, seed);

    for (size_t v = 0; v < variants.size(); ++v) {
      const RLResult rl = train_rl(variants[v].rl, train, il.policy, seed);
      if (variants[v].needs_selector) {
        const SelectorResult sel = train_selector(variants[v].sel, rl.policy, train, seed);
        per_variant[v].push_back(evaluate(rl.policy, &sel.selector, eval_set, ctx.n_candidates,
                                          ctx.n_steps, seed, RankMode::selector,
                                          variants[v].label));
      } else {
        per_variant[v].push_back(evaluate(rl.policy, nullptr, eval_set, ctx.n_candidates,
                                          ctx.n_steps, seed, RankMode::generator_score,
                                          variants[v].label));
      }
    }
  }
  for (size_t v = 0; v < variants.size(); ++v) {
    table.rows.push_back({variants[v].label, median_report(per_variant[v], variants[v].label)});
  }
  return table;
}

namespace {

std::string fmt(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string csv_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string svg_path(const std::vector<Vec2>& pts, bool close) {
  std::string d;
  for (size_t i = 0; i < pts.size(); ++i) {
    d += (i == 0 ? "M " : "L ") + fmt(pts[i].x()) + ' ' + fmt(-pts[i].y()) + ' ';
  }
  if (close) d += "Z";
  return d;
}

}  // namespace

std::string render_scene_svg(const Scene& scene, const std::vector<Trajectory>& candidates,
                             const std::vector<int>& highlights) {
  Vec2 lo, hi;
  scene.drivable.bounding_box(&lo, &hi);
  const double pad = 3.0;
  const double x0 = lo.x() - pad, y0 = -hi.y() - pad;
  const double wdt = hi.x() - lo.x() + 2 * pad, hgt = hi.y() - lo.y() + 2 * pad;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt(x0) << ' ' << fmt(y0) << ' '
     << fmt(wdt) << ' ' << fmt(hgt) << "\" width=\"" << fmt(wdt * 14, 0) << "\" height=\""
     << fmt(hgt * 14, 0) << "\">\n";
  os << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(wdt)
     << "\" height=\"" << fmt(hgt) << "\" fill=\"#f4f4f2\"/>\n";
  os << "<path d=\"" << svg_path(scene.drivable.v, true)
     << "\" fill=\"#d8dde3\" stroke=\"#6b7280\" stroke-width=\"0.2\"/>\n";
  os << "<path d=\"" << svg_path(scene.centerline.points(), false)
     << "\" fill=\"none\" stroke=\"#9aa3ad\" stroke-width=\"0.12\" stroke-dasharray=\"0.8 0.6\"/>\n";

  for (const auto& a : scene.agents) {
    os << "<circle cx=\"" << fmt(a.pos.x()) << "\" cy=\"" << fmt(-a.pos.y()) << "\" r=\""
       << fmt(a.radius) << "\" fill=\"#c78f2d\" fill-opacity=\"0.85\"/>\n";
    if (a.vel.norm() > 1e-9) {
      const Vec2 tip = a.pos + a.vel;
      os << "<line x1=\"" << fmt(a.pos.x()) << "\" y1=\"" << fmt(-a.pos.y()) << "\" x2=\""
         << fmt(tip.x()) << "\" y2=\"" << fmt(-tip.y())
         << "\" stroke=\"#8a6420\" stroke-width=\"0.15\"/>\n";
    }
  }

  // Candidates in rank order: earlier entries more opaque.
  for (size_t i = 0; i < candidates.size(); ++i) {
    const double opacity =
        candidates.size() > 1
            ? 0.9 - 0.65 * static_cast<double>(i) / (candidates.size() - 1)
            : 0.9;
    const bool highlighted =
        std::find(highlights.begin(), highlights.end(), static_cast<int>(i)) != highlights.end();
    std::vector<Vec2> pts = {Vec2(0.0, 0.0)};
    pts.insert(pts.end(), candidates[i].wp.begin(), candidates[i].wp.end());
    os << "<path d=\"" << svg_path(pts, false) << "\" fill=\"none\" stroke=\""
       << (highlighted ? "#1d4ed8" : "#3b82f6") << "\" stroke-width=\""
       << (highlighted ? "0.35" : "0.18") << "\" stroke-opacity=\"" << fmt(opacity) << "\"/>\n";
    const CollisionResult col = check_collision(scene, candidates[i]);
    if (col.collided) {
      const Vec2 p = candidates[i].wp[*col.first_index];
      os << "<g class=\"collision\"><circle cx=\"" << fmt(p.x()) << "\" cy=\"" << fmt(-p.y())
         << "\" r=\"0.5\" fill=\"none\" stroke=\"#dc2626\" stroke-width=\"0.2\"/>"
         << "<line x1=\"" << fmt(p.x() - 0.35) << "\" y1=\"" << fmt(-p.y() - 0.35) << "\" x2=\""
         << fmt(p.x() + 0.35) << "\" y2=\"" << fmt(-p.y() + 0.35)
         << "\" stroke=\"#dc2626\" stroke-width=\"0.2\"/></g>\n";
    }
  }

  // Expert drawn last with a distinct stroke.
  std::vector<Vec2> expert_pts = {Vec2(0.0, 0.0)};
  expert_pts.insert(expert_pts.end(), scene.expert.wp.begin(), scene.expert.wp.end());
  os << "<path d=\"" << svg_path(expert_pts, false)
     << "\" fill=\"none\" stroke=\"#15803d\" stroke-width=\"0.3\" stroke-dasharray=\"1.2 0.5\"/>\n";
  os << "<circle cx=\"0.00\" cy=\"0.00\" r=\"" << fmt(scene.ego_radius)
     << "\" fill=\"#374151\" fill-opacity=\"0.8\"/>\n";
  os << "</svg>\n";
  return os.str();
}

void write_curve_csv(const std::vector<CurveRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << "step,l_rec,l_bce,total\n";
  for (const auto& r : rows) {
    os << r.step << ',' << csv_num(r.l_rec) << ',' << csv_num(r.l_bce) << ',' << csv_num(r.total)
       << '\n';
  }
}

void write_rl_metrics_csv(const std::vector<RLMetricsRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << "iteration,mean_reward,collision_rate,diversity,rl_loss,il_loss\n";
  for (const auto& r : rows) {
    os << r.iteration << ',' << csv_num(r.mean_reward) << ',' << csv_num(r.collision_rate) << ','
       << csv_num(r.diversity) << ',' << csv_num(r.rl_loss) << ',' << csv_num(r.il_loss) << '\n';
  }
}

namespace {

void write_report_row(std::ostream& os, const std::string& label, const std::string& tag,
                      const EvalReport& rep, const EvalMetrics& m) {
  os << label << ',' << tag << ',' << rank_mode_name(rep.rank_mode) << ',' << m.n_scenes << ','
     << csv_num(m.mean_selected_pdms) << ',' << csv_num(m.pdms_at1) << ',' << csv_num(m.pdms_at5)
     << ',' << csv_num(m.pdms_at10) << ',' << csv_num(m.diversity) << ','
     << csv_num(m.collision_rate) << ',' << (rep.diversity_defined ? 1 : 0) << ','
     << (rep.topk_monotone ? 1 : 0) << '\n';
}

void write_report_header(std::ostream& os) {
  os << "label,tag,rank_mode,n_scenes,mean_selected_pdms,pdms_at1,pdms_at5,pdms_at10,"
        "diversity,collision_rate,diversity_defined,topk_monotone\n";
}

}  // namespace

void write_eval_reports_csv(const std::vector<EvalReport>& reports, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  write_report_header(os);
  for (const auto& rep : reports) {
    write_report_row(os, rep.label, "all", rep, rep.overall);
    for (const auto& [tag, m] : rep.per_tag) write_report_row(os, rep.label, tag, rep, m);
  }
}

void write_ablation_csv(const AblationTable& table, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  write_report_header(os);
  for (const auto& row : table.rows) {
    write_report_row(os, table.name + ":" + row.variant, "all", row.report, row.report.overall);
  }
}

}  // namespace planlab
