#pragma once

// Evaluation utilities: per-episode trajectory metrics, imagination pixel
// statistics against ground-truth footprints, and deterministic SVG
// renderings of trajectories over a world map.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "semnav/common.hpp"
#include "semnav/dataset.hpp"
#include "semnav/episode.hpp"
#include "semnav/world.hpp"

namespace semnav {

struct EpisodeMetrics {
  double length = 0.0;        // m, sum of Euclidean segment lengths
  double duration = 0.0;      // s, last minus first timestamp
  double avg_velocity = 0.0;  // m/s, length / duration (0 when duration is 0)
  bool reached = false;
  std::string reason;
};

inline EpisodeMetrics trajectory_metrics(const Trajectory& traj) {
  if (traj.points.size() < 2)
    throw DomainError("trajectory_metrics: need at least 2 states, got " +
                      std::to_string(traj.points.size()));
  EpisodeMetrics m;
  for (std::size_t i = 1; i < traj.points.size(); ++i)
    m.length += std::hypot(traj.points[i].pose.x - traj.points[i - 1].pose.x,
                           traj.points[i].pose.y - traj.points[i - 1].pose.y);
  m.duration = traj.points.back().t - traj.points.front().t;
  m.avg_velocity = m.duration > 0.0 ? m.length / m.duration : 0.0;
  m.reached = traj.goal_reached;
  m.reason = traj.reason;
  return m;
}

struct PixelStats {
  std::size_t total = 0;      // occupied cells in the predicted patch
  std::size_t in_object = 0;  // of those, also occupied in the ground truth
  std::size_t out_object = 0; // total - in_object

  PixelStats& operator+=(const PixelStats& o) {
    total += o.total;
    in_object += o.in_object;
    out_object += o.out_object;
    return *this;
  }
};

inline PixelStats pixel_stats(const BinaryImage& patch,
                              const BinaryImage& gt_footprint) {
  if (patch.rows != gt_footprint.rows || patch.cols != gt_footprint.cols)
    throw DomainError("pixel_stats: size mismatch " +
                      std::to_string(patch.rows) + "x" +
                      std::to_string(patch.cols) + " vs " +
                      std::to_string(gt_footprint.rows) + "x" +
                      std::to_string(gt_footprint.cols));
  PixelStats s;
  for (std::size_t i = 0; i < patch.cells.size(); ++i) {
    if (!patch.cells[i]) continue;
    ++s.total;
    if (gt_footprint.cells[i]) ++s.in_object;
  }
  s.out_object = s.total - s.in_object;
  return s;
}

// One named trajectory for rendering; the legend shows labels in input order
// and stroke colors are assigned from a fixed palette in the same order.
struct AgentTrack {
  std::string label;
  Trajectory trajectory;
};

namespace detail {

constexpr double kSvgPixelsPerMeter = 100.0;

inline const char* class_fill(ClassId c) {
  switch (c) {
    case ClassId::wall: return "#4d4d4d";
    case ClassId::chair: return "#c28430";
    case ClassId::table: return "#7a86b8";
    default: return nullptr;  // free/unknown cells are not painted
  }
}

inline const char* agent_stroke(std::size_t i) {
  static constexpr const char* kPalette[] = {
      "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace detail

// Renders the world's footprint layer (filled run-length rects per class),
// a start disc, a goal bullseye, and one polyline per agent with a legend.
// Pure string assembly from the inputs: identical inputs give identical bytes.
inline std::string render_svg(const SemanticGrid& world,
                              const std::vector<AgentTrack>& tracks,
                              const Vec2& start, const Vec2& goal) {
  const double px_per_cell = world.resolution * detail::kSvgPixelsPerMeter;
  const double width = world.cols * px_per_cell;
  const double height = world.rows * px_per_cell;
  const double world_h = world.rows * world.resolution;
  const auto to_px_x = [&](double x) { return x * detail::kSvgPixelsPerMeter; };
  const auto to_px_y = [&](double y) {
    return (world_h - y) * detail::kSvgPixelsPerMeter;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
  svg += format_double(width);
  svg += "\" height=\"";
  svg += format_double(height);
  svg += "\" viewBox=\"0 0 " + format_double(width) + " " +
         format_double(height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + format_double(width) +
         "\" height=\"" + format_double(height) + "\" fill=\"#ffffff\"/>\n";

  // Footprints, merged into one rect per horizontal run of a single class.
  for (int r = 0; r < world.rows; ++r) {
    int c = 0;
    while (c < world.cols) {
      const ClassId cls = world.footprint(r, c);
      const char* fill = detail::class_fill(cls);
      if (!fill) {
        ++c;
        continue;
      }
      int c_end = c + 1;
      while (c_end < world.cols && world.footprint(r, c_end) == cls) ++c_end;
      svg += "<rect x=\"" + format_double(c * px_per_cell) + "\" y=\"" +
             format_double((world.rows - r - 1) * px_per_cell) +
             "\" width=\"" + format_double((c_end - c) * px_per_cell) +
             "\" height=\"" + format_double(px_per_cell) + "\" fill=\"" +
             fill + "\"/>\n";
      c = c_end;
    }
  }

  // Agent paths.
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += detail::agent_stroke(i);
    svg += "\" stroke-width=\"2.5\" stroke-linecap=\"round\" "
           "stroke-linejoin=\"round\" points=\"";
    const auto& pts = tracks[i].trajectory.points;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k) svg += " ";
      svg += format_double(to_px_x(pts[k].pose.x)) + "," +
             format_double(to_px_y(pts[k].pose.y));
    }
    svg += "\"/>\n";
  }

  // Start disc and goal bullseye.
  svg += "<circle cx=\"" + format_double(to_px_x(start.x)) + "\" cy=\"" +
         format_double(to_px_y(start.y)) +
         "\" r=\"6\" fill=\"#111111\"/>\n";
  svg += "<circle cx=\"" + format_double(to_px_x(goal.x)) + "\" cy=\"" +
         format_double(to_px_y(goal.y)) +
         "\" r=\"8\" fill=\"none\" stroke=\"#111111\" stroke-width=\"2\"/>\n";
  svg += "<circle cx=\"" + format_double(to_px_x(goal.x)) + "\" cy=\"" +
         format_double(to_px_y(goal.y)) + "\" r=\"2.5\" fill=\"#111111\"/>\n";

  // Legend, top-left, one swatch + label per agent.
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const double y = 22.0 + 20.0 * i;
    svg += "<line x1=\"12\" y1=\"" + format_double(y - 4.0) +
           "\" x2=\"40\" y2=\"" + format_double(y - 4.0) + "\" stroke=\"";
    svg += detail::agent_stroke(i);
    svg += "\" stroke-width=\"2.5\"/>\n";
    svg += "<text x=\"46\" y=\"" + format_double(y) +
           "\" font-family=\"sans-serif\" font-size=\"14\">" +
           detail::xml_escape(tracks[i].label) + "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

inline void write_svg(const std::string& path, const SemanticGrid& world,
                      const std::vector<AgentTrack>& tracks, const Vec2& start,
                      const Vec2& goal) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::string doc = render_svg(world, tracks, start, goal);
  out.write(doc.data(), static_cast<std::streamsize>(doc.size()));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace semnav
