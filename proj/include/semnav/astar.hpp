#pragma once
// 8-connected A* over a costmap. Step costs are integers (axis step scaled
// to 1e6) so path costs compare exactly: axis 1.0, diagonal sqrt(2), plus a
// traversal penalty of cost/100 axis-steps for the cell being entered.
// Lethal cells are impassable and diagonal moves may not cut a lethal
// corner. The octile heuristic uses the same step constants and ignores
// penalties, so it is admissible and consistent and A* returns exactly the
// Dijkstra-optimal cost.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "semnav/common.hpp"
#include "semnav/costmap.hpp"

namespace semnav {

struct NoPathError : DomainError {
  using DomainError::DomainError;
};
struct InvalidEndpointError : DomainError {
  using DomainError::DomainError;
};

inline constexpr std::int64_t kAxisStepCost = 1'000'000;
inline constexpr std::int64_t kDiagStepCost = 1'414'214;  // round(sqrt2 * 1e6)

// Penalty for entering a cell: 1.0 * cost/100 in axis-step units.
inline std::int64_t cell_penalty(std::uint8_t cost) {
  return static_cast<std::int64_t>(cost) * 10'000;
}

struct PlanResult {
  std::vector<std::pair<int, int>> cells;  // start .. goal inclusive
  std::int64_t cost_scaled = 0;

  double cost() const {
    return static_cast<double>(cost_scaled) / kAxisStepCost;
  }
};

namespace detail {

inline std::int64_t octile(int r0, int c0, int r1, int c1) {
  const int dr = r0 > r1 ? r0 - r1 : r1 - r0;
  const int dc = c0 > c1 ? c0 - c1 : c1 - c0;
  const int lo = dr < dc ? dr : dc;
  const int hi = dr < dc ? dc : dr;
  return static_cast<std::int64_t>(hi - lo) * kAxisStepCost +
         static_cast<std::int64_t>(lo) * kDiagStepCost;
}

}  // namespace detail

inline PlanResult astar(const Costmap& m, std::pair<int, int> start,
                        std::pair<int, int> goal) {
  const auto [sr, sc] = start;
  const auto [gr, gc] = goal;
  if (!m.in_bounds(sr, sc) || !m.in_bounds(gr, gc))
    throw InvalidEndpointError("plan endpoint outside the costmap");
  if (m.at(sr, sc) == kCostLethal || m.at(gr, gc) == kCostLethal)
    throw InvalidEndpointError("plan endpoint on a lethal cell");
  if (start == goal) return {{start}, 0};

  // Axis moves first, then diagonals; fixed order for determinism.
  static constexpr int kDr[8] = {-1, 1, 0, 0, -1, -1, 1, 1};
  static constexpr int kDc[8] = {0, 0, -1, 1, -1, 1, -1, 1};

  const std::size_t n = static_cast<std::size_t>(m.rows) * m.cols;
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> g(n, kInf);
  std::vector<std::int32_t> parent(n, -1);

  using Entry = std::pair<std::int64_t, std::int32_t>;  // (f, cell index)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> open;
  const std::int32_t si = static_cast<std::int32_t>(m.idx(sr, sc));
  const std::int32_t gi = static_cast<std::int32_t>(m.idx(gr, gc));
  g[si] = 0;
  open.emplace(detail::octile(sr, sc, gr, gc), si);

  while (!open.empty()) {
    const auto [f, ui] = open.top();
    open.pop();
    const int ur = ui / m.cols, uc = ui % m.cols;
    if (f != g[ui] + detail::octile(ur, uc, gr, gc)) continue;  // stale
    if (ui == gi) break;
    for (int k = 0; k < 8; ++k) {
      const int vr = ur + kDr[k], vc = uc + kDc[k];
      if (!m.in_bounds(vr, vc)) continue;
      const std::uint8_t vcost = m.at(vr, vc);
      if (vcost == kCostLethal) continue;
      const bool diagonal = k >= 4;
      if (diagonal && m.at(ur + kDr[k], uc) == kCostLethal &&
          m.at(ur, uc + kDc[k]) == kCostLethal)
        continue;  // both adjacent axis cells blocked: no corner cutting
      const std::int64_t step = diagonal ? kDiagStepCost : kAxisStepCost;
      const std::int64_t cand = g[ui] + step + cell_penalty(vcost);
      const std::int32_t vi = static_cast<std::int32_t>(m.idx(vr, vc));
      if (cand < g[vi]) {
        g[vi] = cand;
        parent[vi] = ui;
        open.emplace(cand + detail::octile(vr, vc, gr, gc), vi);
      }
    }
  }

  if (g[gi] == kInf) throw NoPathError("goal unreachable from start");

  PlanResult result;
  result.cost_scaled = g[gi];
  for (std::int32_t i = gi; i != -1; i = parent[i])
    result.cells.emplace_back(i / m.cols, i % m.cols);
  std::reverse(result.cells.begin(), result.cells.end());
  return result;
}

}  // namespace semnav
