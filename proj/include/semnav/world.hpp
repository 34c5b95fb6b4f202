#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "semnav/common.hpp"

namespace semnav {

// Integer cell offset relative to an object's anchor cell, in template frame
// at orientation 0. dx runs along +x (columns), dy along +y (rows).
struct CellOffset {
  int dx = 0;
  int dy = 0;

  friend bool operator==(const CellOffset&, const CellOffset&) = default;
  friend auto operator<=>(const CellOffset&, const CellOffset&) = default;
};

// Rotates an offset by `quarter_turns` quarter turns CCW. Exact on the grid.
inline CellOffset rotate_offset(CellOffset o, int quarter_turns) {
  switch (((quarter_turns % 4) + 4) % 4) {
    case 1: return {-o.dy, o.dx};
    case 2: return {-o.dx, -o.dy};
    case 3: return {o.dy, -o.dx};
    default: return o;
  }
}

// A furniture piece: the cells its legs occupy at laser height and the cells
// of its full top-down footprint. Legs are always a subset of the footprint.
struct ObjectTemplate {
  ClassId cls = ClassId::chair;  // chair or table
  std::string name;
  std::vector<CellOffset> leg_cells;
  std::vector<CellOffset> footprint_cells;
};

// An object instance in a world: template by name, position in meters,
// orientation restricted to quarter turns so rasterization stays exact.
struct Placement {
  std::string template_name;
  double x_m = 0.0;
  double y_m = 0.0;
  int quarter_turns = 0;  // 0..3
};

// Axis-aligned wall segment in meters, one cell thick when rasterized.
struct WallSegment {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
};

struct WorldSpec {
  double width_m = 0.0;
  double height_m = 0.0;
  double resolution = kResolution;
  std::vector<WallSegment> walls;
  std::vector<Placement> placements;

  int cols() const { return static_cast<int>(std::llround(width_m / resolution)); }
  int rows() const { return static_cast<int>(std::llround(height_m / resolution)); }
};

// The world rasterized into class IDs. Two layers over the same cells:
//  - laser_layer: what a 0.2 m lidar can hit (walls + legs only)
//  - footprint_layer: full top-down occupancy (walls + whole footprints)
// Row r covers y in [r*res, (r+1)*res), column c covers x likewise.
struct SemanticGrid {
  int rows = 0;
  int cols = 0;
  double resolution = kResolution;
  std::vector<ClassId> laser_layer;
  std::vector<ClassId> footprint_layer;

  bool in_bounds(int r, int c) const {
    return r >= 0 && c >= 0 && r < rows && c < cols;
  }
  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * cols + c;
  }
  ClassId laser(int r, int c) const { return laser_layer[idx(r, c)]; }
  ClassId footprint(int r, int c) const { return footprint_layer[idx(r, c)]; }

  friend bool operator==(const SemanticGrid&, const SemanticGrid&) = default;
};

// ---------------------------------------------------------------------------
// Built-in object library: 5 chairs, 5 tables, explicit cell geometry at
// 0.05 m/cell. Chair seats 0.4-0.5 m with four 1x1 legs; table tops
// 0.8-1.6 m with four 2x2 legs.

namespace detail {

inline void add_rect(std::vector<CellOffset>& cells, int x0, int y0, int x1, int y1) {
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) cells.push_back({x, y});
}

inline void add_disk(std::vector<CellOffset>& cells, int r2) {
  int r = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(r2))));
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x)
      if (x * x + y * y <= r2) cells.push_back({x, y});
}

inline ObjectTemplate make_template(ClassId cls, std::string name,
                                    std::vector<CellOffset> legs,
                                    std::vector<CellOffset> footprint) {
  std::sort(legs.begin(), legs.end());
  std::sort(footprint.begin(), footprint.end());
  for (const auto& leg : legs) {
    if (!std::binary_search(footprint.begin(), footprint.end(), leg))
      throw DomainError("template '" + name + "': leg cell outside footprint");
  }
  if (legs.empty() || footprint.empty())
    throw DomainError("template '" + name + "': empty cell list");
  return ObjectTemplate{cls, std::move(name), std::move(legs), std::move(footprint)};
}

}  // namespace detail

inline const std::vector<ObjectTemplate>& builtin_templates() {
  static const std::vector<ObjectTemplate> lib = [] {
    using detail::add_disk;
    using detail::add_rect;
    using detail::make_template;
    std::vector<ObjectTemplate> t;

    // chair_a: 0.4 m square seat, legs at the seat corners.
    {
      std::vector<CellOffset> fp, legs;
      add_rect(fp, -4, -4, 3, 3);
      legs = {{-4, -4}, {-4, 3}, {3, -4}, {3, 3}};
      t.push_back(make_template(ClassId::chair, "chair_a", legs, fp));
    }
    // chair_b: 0.45 m seat.
    {
      std::vector<CellOffset> fp, legs;
      add_rect(fp, -4, -4, 4, 4);
      legs = {{-4, -4}, {-4, 4}, {4, -4}, {4, 4}};
      t.push_back(make_template(ClassId::chair, "chair_b", legs, fp));
    }
    // chair_c: 0.5 m seat.
    {
      std::vector<CellOffset> fp, legs;
      add_rect(fp, -5, -5, 4, 4);
      legs = {{-5, -5}, {-5, 4}, {4, -5}, {4, 4}};
      t.push_back(make_template(ClassId::chair, "chair_c", legs, fp));
    }
    // chair_d: 0.4 m seat, legs inset one cell.
    {
      std::vector<CellOffset> fp, legs;
      add_rect(fp, -4, -4, 3, 3);
      legs = {{-3, -3}, {-3, 2}, {2, -3}, {2, 2}};
      t.push_back(make_template(ClassId::chair, "chair_d", legs, fp));
    }
    // chair_e: round seat, ~0.45 m across.
    {
      std::vector<CellOffset> fp, legs;
      add_disk(fp, 20);
      legs = {{-3, -3}, {-3, 3}, {3, -3}, {3, 3}};
      t.push_back(make_template(ClassId::chair, "chair_e", legs, fp));
    }
    // table_a: 0.8 m square top, 2x2 legs at the corners.
    {
      std::vector<CellOffset> fp, legs;
      add_rect(fp, -8, -8, 7, 7);
      add_rect(legs, -8, -8, -7, -7);
      add_rect(legs, 6, -8, 7, -7);
      add_rect(legs, -8, 6, -7, 7);
      add_rect(legs, 6, 6, 7, 7);
      t.push_back(make_template(ClassId::table, "table_a", legs, fp));
    }
    // table_b: 1.2 x 0.8 m top.
    {
      std::vector<CellOffset> fp, legs;
      add_rect(fp, -12, -8, 11, 7);
      add_rect(legs, -12, -8, -11, -7);
      add_rect(legs, 10, -8, 11, -7);
      add_rect(legs, -12, 6, -11, 7);
      add_rect(legs, 10, 6, 11, 7);
      t.push_back(make_template(ClassId::table, "table_b", legs, fp));
    }
    // table_c: 1.6 x 0.8 m top.
    {
      std::vector<CellOffset> fp, legs;
      add_rect(fp, -16, -8, 15, 7);
      add_rect(legs, -16, -8, -15, -7);
      add_rect(legs, 14, -8, 15, -7);
      add_rect(legs, -16, 6, -15, 7);
      add_rect(legs, 14, 6, 15, 7);
      t.push_back(make_template(ClassId::table, "table_c", legs, fp));
    }
    // table_d: 1.0 m square top, legs inset two cells.
    {
      std::vector<CellOffset> fp, legs;
      add_rect(fp, -10, -10, 9, 9);
      add_rect(legs, -8, -8, -7, -7);
      add_rect(legs, 6, -8, 7, -7);
      add_rect(legs, -8, 6, -7, 7);
      add_rect(legs, 6, 6, 7, 7);
      t.push_back(make_template(ClassId::table, "table_d", legs, fp));
    }
    // table_e: round top, ~0.95 m across.
    {
      std::vector<CellOffset> fp, legs;
      add_disk(fp, 81);
      add_rect(legs, 4, 4, 5, 5);
      add_rect(legs, -5, 4, -4, 5);
      add_rect(legs, 4, -5, 5, -4);
      add_rect(legs, -5, -5, -4, -4);
      t.push_back(make_template(ClassId::table, "table_e", legs, fp));
    }
    return t;
  }();
  return lib;
}

inline const ObjectTemplate* find_template(const std::string& name) {
  for (const auto& t : builtin_templates())
    if (t.name == name) return &t;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Placement geometry.

// Anchor cell of a placement (the cell containing its position).
inline std::pair<int, int> placement_anchor(const WorldSpec& spec, const Placement& p) {
  int c = static_cast<int>(std::floor(p.x_m / spec.resolution));
  int r = static_cast<int>(std::floor(p.y_m / spec.resolution));
  return {r, c};
}

// Absolute (row, col) cells of a placement's footprint or legs.
inline std::vector<std::pair<int, int>> placement_cells(const WorldSpec& spec,
                                                        const Placement& p,
                                                        bool legs_only) {
  const ObjectTemplate* tpl = find_template(p.template_name);
  if (!tpl) throw DomainError("unknown template '" + p.template_name + "'");
  auto [ar, ac] = placement_anchor(spec, p);
  const auto& src = legs_only ? tpl->leg_cells : tpl->footprint_cells;
  std::vector<std::pair<int, int>> out;
  out.reserve(src.size());
  for (const auto& o : src) {
    CellOffset ro = rotate_offset(o, p.quarter_turns);
    out.emplace_back(ar + ro.dy, ac + ro.dx);
  }
  return out;
}

// ---------------------------------------------------------------------------
// World document format. Line-oriented UTF-8, '#' starts a comment:
//
//   size <width_m> <height_m>
//   wall <x1> <y1> <x2> <y2>        # axis-aligned, repeated per segment
//   object <template> <x_m> <y_m> <quarter_turns>
//
// One `size` line is required; `wall` lines form the walls section and
// `object` lines the objects section. save_world() round-trips losslessly.

namespace detail {

inline double parse_number(const std::string& tok, int line_no, const char* field) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError("line " + std::to_string(line_no) + ": bad number for " +
                     field + ": '" + tok + "'");
  return v;
}

inline std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream is(line);
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

}  // namespace detail

// Validates a parsed spec: bounds, template resolution, footprint overlaps.
inline void validate_world(const WorldSpec& spec) {
  if (spec.width_m <= 0.0 || spec.height_m <= 0.0)
    throw ParseError("world size must be positive");
  if (spec.resolution != kResolution)
    throw ParseError("resolution must be " + format_double(kResolution));
  const int rows = spec.rows(), cols = spec.cols();
  if (rows <= 0 || cols <= 0) throw ParseError("world too small to rasterize");

  for (const auto& w : spec.walls) {
    if (w.x1 != w.x2 && w.y1 != w.y2)
      throw ParseError("wall segments must be axis-aligned");
  }

  std::vector<std::set<std::pair<int, int>>> footprints;
  for (std::size_t i = 0; i < spec.placements.size(); ++i) {
    const auto& p = spec.placements[i];
    if (!find_template(p.template_name))
      throw ParseError("object " + std::to_string(i) + ": unknown template '" +
                       p.template_name + "'");
    if (p.quarter_turns < 0 || p.quarter_turns > 3)
      throw ParseError("object " + std::to_string(i) +
                       ": orientation must be 0..3 quarter turns");
    auto cells = placement_cells(spec, p, /*legs_only=*/false);
    for (auto [r, c] : cells) {
      if (r < 0 || c < 0 || r >= rows || c >= cols)
        throw ParseError("object " + std::to_string(i) + " ('" + p.template_name +
                         "') extends outside the world bounds");
    }
    footprints.emplace_back(cells.begin(), cells.end());
  }
  for (std::size_t i = 0; i < footprints.size(); ++i) {
    for (std::size_t j = i + 1; j < footprints.size(); ++j) {
      for (const auto& cell : footprints[i]) {
        if (footprints[j].count(cell)) {
          throw ParseError("objects " + std::to_string(i) + " ('" +
                           spec.placements[i].template_name + "') and " +
                           std::to_string(j) + " ('" +
                           spec.placements[j].template_name +
                           "') have overlapping footprints");
        }
      }
    }
  }
}

inline WorldSpec parse_world(std::istream& in) {
  WorldSpec spec;
  bool have_size = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto toks = detail::split_tokens(line);
    if (toks.empty()) continue;
    const std::string& key = toks[0];
    if (key == "size") {
      if (toks.size() != 3)
        throw ParseError("line " + std::to_string(line_no) +
                         ": size expects <width_m> <height_m>");
      spec.width_m = detail::parse_number(toks[1], line_no, "size.width");
      spec.height_m = detail::parse_number(toks[2], line_no, "size.height");
      have_size = true;
    } else if (key == "wall") {
      if (toks.size() != 5)
        throw ParseError("line " + std::to_string(line_no) +
                         ": wall expects <x1> <y1> <x2> <y2>");
      WallSegment w;
      w.x1 = detail::parse_number(toks[1], line_no, "wall.x1");
      w.y1 = detail::parse_number(toks[2], line_no, "wall.y1");
      w.x2 = detail::parse_number(toks[3], line_no, "wall.x2");
      w.y2 = detail::parse_number(toks[4], line_no, "wall.y2");
      spec.walls.push_back(w);
    } else if (key == "object") {
      if (toks.size() != 5)
        throw ParseError("line " + std::to_string(line_no) +
                         ": object expects <template> <x_m> <y_m> <quarter_turns>");
      Placement p;
      p.template_name = toks[1];
      p.x_m = detail::parse_number(toks[2], line_no, "object.x");
      p.y_m = detail::parse_number(toks[3], line_no, "object.y");
      double q = detail::parse_number(toks[4], line_no, "object.quarter_turns");
      p.quarter_turns = static_cast<int>(q);
      if (static_cast<double>(p.quarter_turns) != q)
        throw ParseError("line " + std::to_string(line_no) +
                         ": quarter_turns must be an integer");
      spec.placements.push_back(p);
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": unknown key '" +
                       key + "'");
    }
  }
  if (!have_size) throw ParseError("missing required 'size' line");
  validate_world(spec);
  return spec;
}

inline WorldSpec load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open world file: " + path);
  try {
    return parse_world(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void save_world(const WorldSpec& spec, std::ostream& out) {
  out << "size " << format_double(spec.width_m) << ' '
      << format_double(spec.height_m) << '\n';
  for (const auto& w : spec.walls)
    out << "wall " << format_double(w.x1) << ' ' << format_double(w.y1) << ' '
        << format_double(w.x2) << ' ' << format_double(w.y2) << '\n';
  for (const auto& p : spec.placements)
    out << "object " << p.template_name << ' ' << format_double(p.x_m) << ' '
        << format_double(p.y_m) << ' ' << p.quarter_turns << '\n';
}

inline void save_world(const WorldSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write world file: " + path);
  save_world(spec, out);
}

// ---------------------------------------------------------------------------
// Rasterization. Deterministic: identical specs yield identical grids.

inline SemanticGrid rasterize(const WorldSpec& spec) {
  SemanticGrid g;
  g.rows = spec.rows();
  g.cols = spec.cols();
  g.resolution = spec.resolution;
  g.laser_layer.assign(static_cast<std::size_t>(g.rows) * g.cols, ClassId::free);
  g.footprint_layer = g.laser_layer;

  auto clamp_cell = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
  for (const auto& w : spec.walls) {
    int c1 = clamp_cell(static_cast<int>(std::floor(w.x1 / g.resolution)), g.cols);
    int c2 = clamp_cell(static_cast<int>(std::floor(w.x2 / g.resolution)), g.cols);
    int r1 = clamp_cell(static_cast<int>(std::floor(w.y1 / g.resolution)), g.rows);
    int r2 = clamp_cell(static_cast<int>(std::floor(w.y2 / g.resolution)), g.rows);
    if (c1 > c2) std::swap(c1, c2);
    if (r1 > r2) std::swap(r1, r2);
    for (int r = r1; r <= r2; ++r)
      for (int c = c1; c <= c2; ++c) {
        g.laser_layer[g.idx(r, c)] = ClassId::wall;
        g.footprint_layer[g.idx(r, c)] = ClassId::wall;
      }
  }

  for (const auto& p : spec.placements) {
    const ObjectTemplate* tpl = find_template(p.template_name);
    for (auto [r, c] : placement_cells(spec, p, /*legs_only=*/false))
      g.footprint_layer[g.idx(r, c)] = tpl->cls;
    for (auto [r, c] : placement_cells(spec, p, /*legs_only=*/true))
      g.laser_layer[g.idx(r, c)] = tpl->cls;
  }
  return g;
}

}  // namespace semnav
