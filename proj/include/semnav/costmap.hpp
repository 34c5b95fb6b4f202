#pragma once
// Costmaps over the world grid: lethal obstacles from the laser layer, an
// inscribed ring inflated around them, and max-merge fusion of imagined
// occupancy patches. Cost values: 0 free, 1..98 graded, 99 inscribed
// (too close for the robot body), 100 lethal.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "semnav/common.hpp"
#include "semnav/dataset.hpp"
#include "semnav/sensor.hpp"
#include "semnav/world.hpp"

namespace semnav {

inline constexpr std::uint8_t kCostLethal = 100;
inline constexpr std::uint8_t kCostInscribed = 99;

// A world-axis-aligned cost grid. Cell (0,0) covers the world grid cell
// (origin_row, origin_col), so global maps use origin (0,0) and local maps
// are windows at the robot.
struct Costmap {
  int rows = 0;
  int cols = 0;
  double resolution = kResolution;
  int origin_row = 0;  // world grid cell covered by local cell (0,0)
  int origin_col = 0;
  std::vector<std::uint8_t> cost;

  Costmap() = default;
  Costmap(int r, int c)
      : rows(r), cols(c), cost(static_cast<std::size_t>(r) * c, 0) {}

  bool in_bounds(int r, int c) const {
    return r >= 0 && c >= 0 && r < rows && c < cols;
  }
  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * cols + c;
  }
  std::uint8_t at(int r, int c) const { return cost[idx(r, c)]; }
  void set(int r, int c, std::uint8_t v) { cost[idx(r, c)] = v; }

  double origin_x() const { return origin_col * resolution; }
  double origin_y() const { return origin_row * resolution; }

  // Cell containing a world point; may be out of bounds.
  std::pair<int, int> cell_of(double x, double y) const {
    return {static_cast<int>(std::floor(y / resolution)) - origin_row,
            static_cast<int>(std::floor(x / resolution)) - origin_col};
  }
  // World coordinates of a cell center.
  Vec2 center_of(int r, int c) const {
    return {(origin_col + c + 0.5) * resolution,
            (origin_row + r + 0.5) * resolution};
  }
};

namespace detail {

// All integer offsets with dr^2 + dc^2 <= radius^2, row-major order.
inline std::vector<std::pair<int, int>> disk_offsets(int radius_cells) {
  std::vector<std::pair<int, int>> offs;
  for (int dr = -radius_cells; dr <= radius_cells; ++dr)
    for (int dc = -radius_cells; dc <= radius_cells; ++dc)
      if (dr * dr + dc * dc <= radius_cells * radius_cells)
        offs.emplace_back(dr, dc);
  return offs;
}

inline int inflation_cells(double radius_m, double resolution) {
  if (radius_m < 0.0) throw DomainError("inflation radius must be >= 0");
  return static_cast<int>(std::lround(radius_m / resolution));
}

// Raises every cell within the disk around each seed to at least inscribed.
inline void inflate_around(Costmap& m,
                           const std::vector<std::pair<int, int>>& seeds,
                           int radius_cells) {
  const auto offs = disk_offsets(radius_cells);
  for (const auto& [r, c] : seeds) {
    for (const auto& [dr, dc] : offs) {
      const int rr = r + dr, cc = c + dc;
      if (!m.in_bounds(rr, cc)) continue;
      std::uint8_t& v = m.cost[m.idx(rr, cc)];
      v = std::max(v, kCostInscribed);
    }
  }
}

}  // namespace detail

// Marks every cell within radius_m of a lethal cell as at least inscribed.
// Writing only 99s never creates new lethal cells, so one pass is exact.
inline void inflate(Costmap& m, double radius_m) {
  const int rc = detail::inflation_cells(radius_m, m.resolution);
  std::vector<std::pair<int, int>> lethal;
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c)
      if (m.at(r, c) == kCostLethal) lethal.emplace_back(r, c);
  detail::inflate_around(m, lethal, rc);
}

// Global costmap from the laser layer only: what a 2D lidar can ever see.
// Furniture footprints do not appear here; that is the gap imagination
// fills.
inline Costmap build_global_costmap(const SemanticGrid& grid,
                                    double inflation_radius = 0.2) {
  Costmap m(grid.rows, grid.cols);
  m.resolution = grid.resolution;
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c)
      if (grid.laser(r, c) != ClassId::free) m.set(r, c, kCostLethal);
  inflate(m, inflation_radius);
  return m;
}

struct FuseOptions {
  double inflation_radius = 0.2;
  // No new lethality is accepted this close to the robot's own cell, so an
  // imagined blob can never trap the planner at its start cell.
  int clear_radius_cells = 6;
};

// Merges an imagined occupancy patch (egocentric, in the snapped robot
// frame) into the costmap by max with lethal, then re-inflates around the
// newly lethal cells. Returns the number of cells that became lethal.
// Values never decrease, so repeated fusion is monotone.
inline std::size_t fuse_imagination_inplace(Costmap& m,
                                            const BinaryImage& patch,
                                            const Pose& robot,
                                            const FuseOptions& opt = {}) {
  if (patch.rows != patch.cols)
    throw DomainError("imagination patch must be square");
  const SnappedPose s = snap_pose(robot, m.resolution);
  {
    const auto [rr, rc] = m.cell_of(robot.x, robot.y);
    if (!m.in_bounds(rr, rc))
      throw DomainError("robot pose outside the costmap");
  }
  const int size = patch.rows;
  const int clear2 = opt.clear_radius_cells * opt.clear_radius_cells;
  std::vector<std::pair<int, int>> fresh;
  for (int pr = 0; pr < size; ++pr) {
    for (int pc = 0; pc < size; ++pc) {
      if (!patch.at(pr, pc)) continue;
      const auto [wr, wc] = patch_cell_to_world(s, size, pr, pc);
      const int dr = wr - s.row, dc = wc - s.col;
      if (dr * dr + dc * dc <= clear2) continue;
      const int r = wr - m.origin_row, c = wc - m.origin_col;
      if (!m.in_bounds(r, c)) continue;
      if (m.at(r, c) == kCostLethal) continue;
      m.set(r, c, kCostLethal);
      fresh.emplace_back(r, c);
    }
  }
  detail::inflate_around(
      m, fresh, detail::inflation_cells(opt.inflation_radius, m.resolution));
  return fresh.size();
}

inline Costmap fuse_imagination(const Costmap& m, const BinaryImage& patch,
                                const Pose& robot,
                                const FuseOptions& opt = {}) {
  Costmap out = m;
  fuse_imagination_inplace(out, patch, robot, opt);
  return out;
}

// Local costmap for rollout scoring, rebuilt from scratch every control
// cycle: a window centered on the robot's cell holding this cycle's scan
// hits as lethal plus (optionally) this cycle's imagination patch, inflated.
inline Costmap build_local_costmap(const SemanticScan& scan,
                                   const BinaryImage* patch,
                                   int half_size_cells = 31,
                                   const FuseOptions& opt = {}) {
  const SnappedPose s = snap_pose(scan.pose);
  Costmap m(2 * half_size_cells + 1, 2 * half_size_cells + 1);
  m.origin_row = s.row - half_size_cells;
  m.origin_col = s.col - half_size_cells;
  // Stamp each hit half a cell past its entry boundary so the sample lands
  // inside the struck cell; inflation absorbs the residual +-1 cell.
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    if (scan.ranges[i] >= scan.max_range) continue;
    const double a = scan.pose.heading + scan.beam_angle(i);
    const double d = scan.ranges[i] + 0.5 * m.resolution;
    const auto [r, c] = m.cell_of(scan.pose.x + d * std::cos(a),
                                  scan.pose.y + d * std::sin(a));
    if (m.in_bounds(r, c)) m.set(r, c, kCostLethal);
  }
  inflate(m, opt.inflation_radius);
  if (patch != nullptr) fuse_imagination_inplace(m, *patch, scan.pose, opt);
  return m;
}

}  // namespace semnav
