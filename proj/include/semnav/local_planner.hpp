#pragma once
// Sampling-based local planner: a grid of (v, w) candidates is rolled out
// over a short horizon with exact unicycle arcs, rollouts touching the
// inscribed ring or worse are discarded, and the survivors are scored by
// progress toward a lookahead point, clearance, and speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "semnav/common.hpp"
#include "semnav/costmap.hpp"

namespace semnav {

struct RobotState {
  Pose pose;
  double v = 0.0;  // m/s
  double w = 0.0;  // rad/s
};

struct Command {
  double v = 0.0;
  double w = 0.0;
};

struct PlannerConfig {
  double v_max = 0.26;           // m/s
  double w_max = 1.82;           // rad/s
  double control_period = 0.1;   // s
  double horizon = 1.5;          // rollout length, s
  int v_samples = 7;
  int w_samples = 21;
  double goal_tolerance = 0.2;   // m
  double lookahead = 0.5;        // m along the global path
  double inflation_radius = 0.2;  // m
  double progress_weight = 2.0;
  double clearance_weight = 0.5;
  double speed_weight = 0.3;
  double max_duration = 180.0;   // episode wall-clock budget, simulated s
};

inline void validate_planner_config(const PlannerConfig& c) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0))
      throw DomainError(std::string(what) + " must be positive, got " +
                        format_double(v));
  };
  positive(c.v_max, "v_max");
  positive(c.w_max, "w_max");
  positive(c.control_period, "control_period");
  positive(c.horizon, "horizon");
  positive(c.goal_tolerance, "goal_tolerance");
  positive(c.lookahead, "lookahead");
  positive(c.inflation_radius, "inflation_radius");
  positive(c.progress_weight, "progress_weight");
  positive(c.clearance_weight, "clearance_weight");
  positive(c.speed_weight, "speed_weight");
  positive(c.max_duration, "max_duration");
  if (c.v_samples < 2 || c.w_samples < 3)
    throw DomainError("need at least 2 velocity and 3 rotation samples");
  if (c.goal_tolerance < kResolution)
    throw DomainError("goal_tolerance must be at least one cell");
}

// Exact unicycle step: a circular arc for w != 0, a straight segment in the
// w -> 0 limit. This single function defines kinematic feasibility; the
// episode loop and the rollouts both use it.
inline Pose integrate_unicycle(const Pose& p, double v, double w, double dt) {
  Pose q;
  if (std::abs(w) < 1e-9) {
    q.x = p.x + v * dt * std::cos(p.heading);
    q.y = p.y + v * dt * std::sin(p.heading);
    q.heading = wrap_angle(p.heading + w * dt);
  } else {
    const double h1 = p.heading + w * dt;
    q.x = p.x + (v / w) * (std::sin(h1) - std::sin(p.heading));
    q.y = p.y - (v / w) * (std::cos(h1) - std::cos(p.heading));
    q.heading = wrap_angle(h1);
  }
  return q;
}

// One control decision. Scores every (v, w) sample over the horizon against
// the local costmap and returns the best survivor; ties break toward the
// smallest |w|, then the smallest v, then the earlier sample. If every
// rollout collides, rotates in place toward the lookahead.
inline Command local_plan_step(const Costmap& m, const RobotState& state,
                               Vec2 look, const PlannerConfig& cfg) {
  validate_planner_config(cfg);
  const double dx0 = look.x - state.pose.x, dy0 = look.y - state.pose.y;
  const double d0 = std::hypot(dx0, dy0);
  if (d0 <= cfg.goal_tolerance) return {0.0, 0.0};

  const int steps =
      std::max(1, static_cast<int>(std::lround(cfg.horizon /
                                               cfg.control_period)));
  // Normally any inscribed-or-worse cell kills a rollout. When the robot is
  // already standing on such a cell (sensor noise can shift an inflation ring
  // over it), that rule would reject every arc including rotate-in-place and
  // freeze the robot; instead, permit inscribed cells and forbid only lethal
  // ones so escape arcs survive, with the clearance term steering outward.
  std::uint8_t block_at = kCostInscribed;
  {
    const auto [rr, rc] = m.cell_of(state.pose.x, state.pose.y);
    if (m.in_bounds(rr, rc) && m.at(rr, rc) >= kCostInscribed)
      block_at = kCostLethal;
  }
  double best_score = 0.0;
  bool have_best = false;
  Command best;
  for (int iv = 0; iv < cfg.v_samples; ++iv) {
    const double v = cfg.v_max * iv / (cfg.v_samples - 1);
    for (int iw = 0; iw < cfg.w_samples; ++iw) {
      // Symmetric grid hitting -w_max, 0, +w_max exactly.
      const double w =
          cfg.w_max * (2.0 * iw - (cfg.w_samples - 1)) / (cfg.w_samples - 1);
      Pose p = state.pose;
      int max_cost = 0;
      bool collide = false;
      for (int k = 0; k < steps; ++k) {
        p = integrate_unicycle(p, v, w, cfg.control_period);
        const auto [r, c] = m.cell_of(p.x, p.y);
        if (!m.in_bounds(r, c)) {
          collide = true;  // leaving the local window counts as unsafe
          break;
        }
        const std::uint8_t cost = m.at(r, c);
        if (cost >= block_at) {
          collide = true;
          break;
        }
        max_cost = std::max(max_cost, static_cast<int>(cost));
      }
      if (collide) continue;
      const double d_end = std::hypot(look.x - p.x, look.y - p.y);
      const double progress = (d0 - d_end) / (cfg.v_max * cfg.horizon);
      const double clearance = 1.0 - max_cost / 100.0;
      const double speed = v / cfg.v_max;
      const double score = cfg.progress_weight * progress +
                           cfg.clearance_weight * clearance +
                           cfg.speed_weight * speed;
      const bool better =
          !have_best || score > best_score ||
          (score == best_score &&
           (std::abs(w) < std::abs(best.w) ||
            (std::abs(w) == std::abs(best.w) && v < best.v)));
      if (better) {
        have_best = true;
        best_score = score;
        best = {v, w};
      }
    }
  }
  // Standing still scores exactly like rotating in place (the score only
  // sees position), so a wedged robot would tie-break to (0, 0) and freeze.
  // Whenever no arc beats standing still, spin toward the lookahead instead;
  // targets behind the robot always turn left so the direction cannot
  // flip-flop across the +-pi bearing seam between control cycles.
  if (have_best && (best.v != 0.0 || best.w != 0.0)) return best;
  const double bearing =
      wrap_angle(std::atan2(dy0, dx0) - state.pose.heading);
  return {0.0,
          (bearing >= 0.0 || bearing <= -kPi / 2) ? cfg.w_max : -cfg.w_max};
}

}  // namespace semnav
