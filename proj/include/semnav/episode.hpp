#pragma once
// The closed navigation loop: scan, imagine (optionally), fuse costmaps,
// replan globally, issue a local command, integrate kinematics, repeat.
// Records a timestamped trajectory with a termination reason.

#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semnav/astar.hpp"
#include "semnav/common.hpp"
#include "semnav/costmap.hpp"
#include "semnav/dataset.hpp"
#include "semnav/imagine.hpp"
#include "semnav/local_planner.hpp"
#include "semnav/sensor.hpp"
#include "semnav/world.hpp"

namespace semnav {

enum class ImaginationMode {
  none,    // plan on lidar evidence only
  oracle,  // fuse the true footprint layer instead of a network
  model,   // fuse thresholded network output
};

inline const char* imagination_mode_name(ImaginationMode m) {
  switch (m) {
    case ImaginationMode::none: return "none";
    case ImaginationMode::oracle: return "oracle";
    default: return "model";
  }
}

struct TrajectoryPoint {
  double t = 0.0;  // seconds since episode start
  Pose pose;
  double v = 0.0;  // command that produced this state from the previous one
  double w = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  bool goal_reached = false;
  std::string reason;  // "goal", "collision", "no_path", "timeout"

  double length() const {
    double sum = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
      sum += std::hypot(points[i].pose.x - points[i - 1].pose.x,
                        points[i].pose.y - points[i - 1].pose.y);
    return sum;
  }
  double duration() const { return points.empty() ? 0.0 : points.back().t; }
};

struct EpisodeSetup {
  Pose start;
  Vec2 goal;
  ImaginationMode mode = ImaginationMode::none;
  const NetWeights<float>* weights = nullptr;  // required for mode model
  int patch_size = kObsSize;                   // oracle patch width
  PlannerConfig planner;
  LidarConfig lidar = navigation_lidar();
  ImagineConfig imagine;
  std::uint64_t seed = 1;
};

namespace detail {

// Point roughly `lookahead` meters along the planned path, measured by cell
// steps from the start; the exact goal point once the path end is closer.
inline Vec2 path_lookahead(const Costmap& m, const PlanResult& plan,
                           Vec2 goal, double lookahead) {
  double walked = 0.0;
  for (std::size_t i = 1; i < plan.cells.size(); ++i) {
    const auto [r0, c0] = plan.cells[i - 1];
    const auto [r1, c1] = plan.cells[i];
    const bool diagonal = r0 != r1 && c0 != c1;
    walked += (diagonal ? std::sqrt(2.0) : 1.0) * m.resolution;
    if (walked >= lookahead) return m.center_of(r1, c1);
  }
  return goal;
}

}  // namespace detail

inline Trajectory run_episode(const SemanticGrid& grid,
                              const EpisodeSetup& setup) {
  validate_planner_config(setup.planner);
  if (setup.mode == ImaginationMode::model && setup.weights == nullptr)
    throw DomainError("model imagination requested without weights");

  auto cell_of = [&](double x, double y) {
    return std::pair<int, int>(
        static_cast<int>(std::floor(y / grid.resolution)),
        static_cast<int>(std::floor(x / grid.resolution)));
  };
  const auto [start_r, start_c] = cell_of(setup.start.x, setup.start.y);
  const auto [goal_r, goal_c] = cell_of(setup.goal.x, setup.goal.y);
  if (!grid.in_bounds(start_r, start_c) || !grid.in_bounds(goal_r, goal_c))
    throw InvalidEndpointError("start or goal outside the world");
  if (grid.laser(start_r, start_c) != ClassId::free ||
      grid.laser(goal_r, goal_c) != ClassId::free)
    throw InvalidEndpointError("start or goal inside an obstacle");

  const FuseOptions fuse{setup.planner.inflation_radius, 6};
  Costmap global = build_global_costmap(grid, setup.planner.inflation_radius);
  if (global.at(start_r, start_c) == kCostLethal ||
      global.at(goal_r, goal_c) == kCostLethal)
    throw InvalidEndpointError("start or goal on a lethal cell");

  BinaryImage oracle_gt;
  if (setup.mode == ImaginationMode::oracle)
    oracle_gt = make_ground_truth_maps(grid).occupancy;
  std::unique_ptr<Imaginer> imaginer;
  if (setup.mode == ImaginationMode::model)
    imaginer = std::make_unique<Imaginer>(*setup.weights, setup.imagine);
  const int patch_size =
      setup.mode == ImaginationMode::model ? imaginer->input_size()
                                           : setup.patch_size;

  Rng rng(setup.seed);
  RobotState state{setup.start, 0.0, 0.0};
  Trajectory traj;
  traj.points.push_back({0.0, state.pose, 0.0, 0.0});

  auto goal_distance = [&] {
    return std::hypot(setup.goal.x - state.pose.x,
                      setup.goal.y - state.pose.y);
  };
  if (goal_distance() <= setup.planner.goal_tolerance) {
    traj.goal_reached = true;
    traj.reason = "goal";
    return traj;
  }

  const int max_steps = static_cast<int>(
      std::lround(setup.planner.max_duration / setup.planner.control_period));
  for (int k = 1; k <= max_steps; ++k) {
    const SemanticScan scan =
        simulate_scan(grid, state.pose, setup.lidar, &rng);
    const SnappedPose snap = snap_pose(state.pose, grid.resolution);

    BinaryImage patch;
    bool have_patch = false;
    if (setup.mode == ImaginationMode::oracle) {
      patch = crop_patch(oracle_gt, snap, patch_size);
      have_patch = true;
    } else if (setup.mode == ImaginationMode::model) {
      const std::vector<ClassId> obs =
          project_egocentric(scan, patch_size, snap.pose);
      patch = imaginer->imagine(obs).occupancy;
      have_patch = true;
    }
    if (have_patch) fuse_imagination_inplace(global, patch, state.pose, fuse);

    PlanResult plan;
    try {
      plan = astar(global, {snap.row, snap.col}, {goal_r, goal_c});
    } catch (const DomainError&) {
      traj.reason = "no_path";
      return traj;
    }
    const Vec2 look = detail::path_lookahead(global, plan, setup.goal,
                                             setup.planner.lookahead);
    const Costmap local = build_local_costmap(
        scan, have_patch ? &patch : nullptr, 31, fuse);
    const Command cmd = local_plan_step(local, state, look, setup.planner);

    state.pose = integrate_unicycle(state.pose, cmd.v, cmd.w,
                                    setup.planner.control_period);
    state.v = cmd.v;
    state.w = cmd.w;
    traj.points.push_back(
        {k * setup.planner.control_period, state.pose, cmd.v, cmd.w});

    const auto [r, c] = cell_of(state.pose.x, state.pose.y);
    if (!grid.in_bounds(r, c) || grid.laser(r, c) != ClassId::free) {
      traj.reason = "collision";
      return traj;
    }
    if (goal_distance() <= setup.planner.goal_tolerance) {
      traj.goal_reached = true;
      traj.reason = "goal";
      return traj;
    }
  }
  traj.reason = "timeout";
  return traj;
}

// ---------------------------------------------------------------------------
// Trajectory records: one JSON object per line — a state line per point and
// a final summary line with the termination reason. Number formatting comes
// from the JSON library's shortest round-trip printer, so identical runs
// serialize to identical bytes.

inline void write_trajectory_jsonl(std::ostream& out, const Trajectory& t) {
  for (const TrajectoryPoint& p : t.points) {
    nlohmann::ordered_json j;
    j["t"] = p.t;
    j["x"] = p.pose.x;
    j["y"] = p.pose.y;
    j["heading"] = p.pose.heading;
    j["v"] = p.v;
    j["w"] = p.w;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json j;
  j["reason"] = t.reason;
  j["goal_reached"] = t.goal_reached;
  j["length"] = t.length();
  j["duration"] = t.duration();
  out << j.dump() << '\n';
}

inline Trajectory read_trajectory_jsonl(std::istream& in) {
  Trajectory t;
  bool saw_summary = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad trajectory line: ") + e.what());
    }
    try {
      if (j.contains("reason")) {
        t.reason = j.at("reason").get<std::string>();
        t.goal_reached = j.at("goal_reached").get<bool>();
        saw_summary = true;
      } else {
        TrajectoryPoint p;
        p.t = j.at("t").get<double>();
        p.pose.x = j.at("x").get<double>();
        p.pose.y = j.at("y").get<double>();
        p.pose.heading = j.at("heading").get<double>();
        p.v = j.at("v").get<double>();
        p.w = j.at("w").get<double>();
        t.points.push_back(p);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad trajectory field: ") + e.what());
    }
  }
  if (!saw_summary)
    throw ParseError("trajectory record has no summary line");
  return t;
}

}  // namespace semnav
