#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "semnav/common.hpp"
#include "semnav/world.hpp"

namespace semnav {

// Planar lidar mounted at leg height: it sees the laser layer (walls and
// furniture legs), never table tops or chair seats.
struct LidarConfig {
  int beam_count = 360;
  double angle_min = -kPi;         // first beam, radians in robot frame
  double angle_max = kPi;          // beams cover [angle_min, angle_max)
  double max_range = 3.5;          // meters
  double noise_sigma = 0.0;        // additive Gaussian noise on hit ranges

  double angle_increment() const {
    return (angle_max - angle_min) / beam_count;
  }
};

// Lidar settings for closed-loop runs: dataset generation scans are
// noiseless, navigation scans carry 5 mm range noise.
inline LidarConfig navigation_lidar() {
  LidarConfig cfg;
  cfg.noise_sigma = 0.005;
  return cfg;
}

struct SemanticScan {
  Pose pose;                       // sensor pose when the scan was taken
  double angle_min = -kPi;
  double angle_increment = 0.0;
  double max_range = 3.5;
  std::vector<double> ranges;      // meters; == max_range when nothing was hit
  std::vector<ClassId> classes;    // class of the struck cell; free on no hit

  double beam_angle(std::size_t i) const {
    return angle_min + static_cast<double>(i) * angle_increment;
  }
};

namespace detail {

struct RayHit {
  bool hit = false;
  double range = 0.0;
  ClassId cls = ClassId::free;
};

// Casts one ray from (ox, oy) along (dx, dy) through the grid, visiting cells
// in strict traversal order and stopping at the first non-free laser cell.
// Returns the distance to the boundary where the ray entered the struck cell;
// boundaries at or beyond max_range count as misses.
inline RayHit cast_ray(const SemanticGrid& g, double ox, double oy, double dx,
                       double dy, double max_range) {
  const double res = g.resolution;
  int c = static_cast<int>(std::floor(ox / res));
  int r = static_cast<int>(std::floor(oy / res));
  if (!g.in_bounds(r, c)) return {};

  // Cell the origin sits in counts as distance zero.
  if (g.laser(r, c) != ClassId::free) return {true, 0.0, g.laser(r, c)};

  const int step_c = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int step_r = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();

  // t to the first vertical / horizontal cell boundary, then per-cell strides.
  double t_max_x = inf, t_delta_x = inf;
  if (step_c != 0) {
    double next_x = (step_c > 0 ? (c + 1) * res : c * res);
    t_max_x = (next_x - ox) / dx;
    t_delta_x = res / std::abs(dx);
  }
  double t_max_y = inf, t_delta_y = inf;
  if (step_r != 0) {
    double next_y = (step_r > 0 ? (r + 1) * res : r * res);
    t_max_y = (next_y - oy) / dy;
    t_delta_y = res / std::abs(dy);
  }

  while (true) {
    double t;
    if (t_max_x <= t_max_y) {  // ties advance in x first
      t = t_max_x;
      t_max_x += t_delta_x;
      c += step_c;
    } else {
      t = t_max_y;
      t_max_y += t_delta_y;
      r += step_r;
    }
    if (t >= max_range) return {};
    if (!g.in_bounds(r, c)) return {};
    ClassId cls = g.laser(r, c);
    if (cls != ClassId::free) return {true, t, cls};
  }
}

}  // namespace detail

// Simulates a full sweep of the lidar at `pose`. The pose must sit on a free
// laser-layer cell. Noise (if configured) perturbs hit ranges only and is
// clamped so a noisy hit can never masquerade as a miss.
inline SemanticScan simulate_scan(const SemanticGrid& grid, const Pose& pose,
                                  const LidarConfig& cfg, Rng* rng = nullptr) {
  if (cfg.beam_count < 1) throw DomainError("beam_count must be >= 1");
  if (cfg.max_range <= 0.0) throw DomainError("max_range must be positive");
  if (cfg.noise_sigma < 0.0) throw DomainError("noise_sigma must be >= 0");
  if (cfg.noise_sigma > 0.0 && rng == nullptr)
    throw DomainError("range noise requested without an Rng");
  {
    int c = static_cast<int>(std::floor(pose.x / grid.resolution));
    int r = static_cast<int>(std::floor(pose.y / grid.resolution));
    if (!grid.in_bounds(r, c))
      throw DomainError("scan pose outside the grid");
    if (grid.laser(r, c) != ClassId::free)
      throw DomainError("scan pose inside a laser-layer obstacle");
  }

  SemanticScan scan;
  scan.pose = pose;
  scan.angle_min = cfg.angle_min;
  scan.angle_increment = cfg.angle_increment();
  scan.max_range = cfg.max_range;
  scan.ranges.assign(cfg.beam_count, cfg.max_range);
  scan.classes.assign(cfg.beam_count, ClassId::free);

  for (int i = 0; i < cfg.beam_count; ++i) {
    double a = pose.heading + cfg.angle_min + i * scan.angle_increment;
    auto hit = detail::cast_ray(grid, pose.x, pose.y, std::cos(a), std::sin(a),
                                cfg.max_range);
    if (!hit.hit) continue;
    double range = hit.range;
    if (cfg.noise_sigma > 0.0) {
      range += cfg.noise_sigma * rng->normal();
      range = std::clamp(range, 1e-3, cfg.max_range - 1e-6);
    }
    scan.ranges[i] = range;
    scan.classes[i] = hit.cls;
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Egocentric semantic maps. A scan becomes a size x size class image centered
// on the robot: forward is "up" (decreasing row), the robot's left is
// increasing column. Beam endpoints with range < max_range are stamped with
// their class; everything else in the window is free. For size 100 only the
// central 60x60 window carries observations and the surrounding ring is
// exactly unknown.

inline int egocentric_center(int size) { return size / 2; }

// Projects scan hits into a frame anchored at `frame` (a pose in world
// coordinates). When frame == scan.pose this is the robot's own view. Beams
// are processed in index order; on conflicts the later beam wins.
inline std::vector<ClassId> project_egocentric(const SemanticScan& scan, int size,
                                               const Pose& frame) {
  if (size != 60 && size != 100)
    throw DomainError("egocentric size must be 60 or 100");
  const int c0 = egocentric_center(size);
  std::vector<ClassId> img(static_cast<std::size_t>(size) * size,
                           ClassId::free);

  int lo = 0, hi = size;
  if (size > 60) {
    lo = (size - 60) / 2;
    hi = lo + 60;
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c)
        if (r < lo || r >= hi || c < lo || c >= hi)
          img[static_cast<std::size_t>(r) * size + c] = ClassId::unknown;
  }

  const double cos_f = std::cos(frame.heading);
  const double sin_f = std::sin(frame.heading);
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    if (!(scan.ranges[i] < scan.max_range)) continue;  // hits only
    double a = scan.pose.heading + scan.beam_angle(i);
    double wx = scan.pose.x + scan.ranges[i] * std::cos(a);
    double wy = scan.pose.y + scan.ranges[i] * std::sin(a);
    // World displacement rotated into the frame.
    double fx = cos_f * (wx - frame.x) + sin_f * (wy - frame.y);
    double fy = -sin_f * (wx - frame.x) + cos_f * (wy - frame.y);
    int row = c0 - static_cast<int>(std::lround(fx / kResolution));
    int col = c0 + static_cast<int>(std::lround(fy / kResolution));
    if (row < lo || row >= hi || col < lo || col >= hi) continue;
    img[static_cast<std::size_t>(row) * size + col] = scan.classes[i];
  }
  return img;
}

// Robot-frame projection: forward is up, left is +columns.
inline std::vector<ClassId> project_egocentric(const SemanticScan& scan, int size) {
  return project_egocentric(scan, size, scan.pose);
}

// ---------------------------------------------------------------------------
// Pose snapping. Ground-truth crops live on the world grid, so observation
// and target must share a frame: the pose is snapped to its cell center and
// the heading to the nearest quarter turn.

struct SnappedPose {
  Pose pose;          // cell-centered position, heading an exact quarter turn
  int row = 0;        // cell containing the original position
  int col = 0;
  int quarter_turns = 0;  // heading as multiples of pi/2, in 0..3
};

inline SnappedPose snap_pose(const Pose& p, double resolution = kResolution) {
  SnappedPose s;
  s.col = static_cast<int>(std::floor(p.x / resolution));
  s.row = static_cast<int>(std::floor(p.y / resolution));
  long q = std::lround(p.heading / (kPi / 2.0));
  s.quarter_turns = static_cast<int>(((q % 4) + 4) % 4);
  s.pose.x = (s.col + 0.5) * resolution;
  s.pose.y = (s.row + 0.5) * resolution;
  s.pose.heading = s.quarter_turns * (kPi / 2.0);
  return s;
}

// Maps an egocentric patch cell (pr, pc) for a snapped pose to the world cell
// it covers. Forward offset f and left offset l rotate by the quarter turn.
inline std::pair<int, int> patch_cell_to_world(const SnappedPose& s, int size,
                                               int pr, int pc) {
  const int c0 = egocentric_center(size);
  const int f = c0 - pr;  // cells in front of the robot
  const int l = pc - c0;  // cells to the robot's left
  switch (s.quarter_turns) {
    case 0: return {s.row + l, s.col + f};
    case 1: return {s.row + f, s.col - l};
    case 2: return {s.row - l, s.col - f};
    default: return {s.row - f, s.col + l};
  }
}

}  // namespace semnav
