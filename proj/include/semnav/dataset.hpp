#pragma once

#include <array>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "semnav/binio.hpp"
#include "semnav/common.hpp"
#include "semnav/sensor.hpp"
#include "semnav/world.hpp"

namespace semnav {

inline constexpr int kObsSize = 60;    // observed egocentric window, cells
inline constexpr int kWideSize = 100;  // widened prediction window, cells
inline constexpr int kDilationRadius = 5;

// A binary raster; 1 = occupied. Used for ground-truth maps and predictions.
struct BinaryImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> cells;

  BinaryImage() = default;
  BinaryImage(int r, int c)
      : rows(r), cols(c), cells(static_cast<std::size_t>(r) * c, 0) {}

  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * cols + c;
  }
  std::uint8_t at(int r, int c) const { return cells[idx(r, c)]; }
  void set(int r, int c, std::uint8_t v) { cells[idx(r, c)] = v; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : cells) n += v != 0;
    return n;
  }

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

// ---------------------------------------------------------------------------
// Morphological dilation with a Euclidean disk: a cell is occupied in the
// result iff some input cell within `radius` (dx^2 + dy^2 <= radius^2) is
// occupied. Cells whose disk extends past the border just lose that part.

inline std::vector<CellOffset> disk_offsets(int radius) {
  if (radius < 0) throw DomainError("dilation radius must be non-negative");
  std::vector<CellOffset> offsets;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) offsets.push_back({dx, dy});
  return offsets;
}

inline BinaryImage dilate(const BinaryImage& img, int radius) {
  const auto offsets = disk_offsets(radius);
  BinaryImage out(img.rows, img.cols);
  for (int r = 0; r < img.rows; ++r) {
    for (int c = 0; c < img.cols; ++c) {
      if (!img.at(r, c)) continue;
      for (const auto& o : offsets) {
        int rr = r + o.dy, cc = c + o.dx;
        if (rr >= 0 && cc >= 0 && rr < img.rows && cc < img.cols)
          out.set(rr, cc, 1);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ground truth. The target for the predictor is the world's full top-down
// occupancy (footprint layer, walls included) around the robot, optionally
// dilated so predictions err on the safe side.

struct GroundTruthMaps {
  BinaryImage occupancy;  // binarized footprint layer
  BinaryImage extended;   // same, dilated by kDilationRadius
};

inline GroundTruthMaps make_ground_truth_maps(const SemanticGrid& grid,
                                              int radius = kDilationRadius) {
  GroundTruthMaps m;
  m.occupancy = BinaryImage(grid.rows, grid.cols);
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c)
      if (is_obstacle(grid.footprint(r, c))) m.occupancy.set(r, c, 1);
  m.extended = dilate(m.occupancy, radius);
  return m;
}

// Crops a size x size patch around a snapped pose, rotated into its frame
// (same cell correspondence as the egocentric projection). Cells outside the
// world read as unoccupied.
inline BinaryImage crop_patch(const BinaryImage& world, const SnappedPose& s,
                              int size) {
  BinaryImage out(size, size);
  for (int pr = 0; pr < size; ++pr) {
    for (int pc = 0; pc < size; ++pc) {
      auto [wr, wc] = patch_cell_to_world(s, size, pr, pc);
      if (wr < 0 || wc < 0 || wr >= world.rows || wc >= world.cols) continue;
      out.set(pr, pc, world.at(wr, wc));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prediction variants: the window the net predicts is either the observed
// 60x60 or the widened 100x100, with plain or safety-extended occupancy.

struct GtVariant {
  int size = kObsSize;
  bool extended = false;

  friend bool operator==(const GtVariant&, const GtVariant&) = default;
};

inline constexpr int kGtVariantCount = 4;

inline const std::array<GtVariant, kGtVariantCount>& gt_variants() {
  static const std::array<GtVariant, kGtVariantCount> v = {
      GtVariant{kObsSize, false}, GtVariant{kObsSize, true},
      GtVariant{kWideSize, false}, GtVariant{kWideSize, true}};
  return v;
}

inline std::string variant_name(const GtVariant& v) {
  return std::to_string(v.size) + (v.extended ? "e" : "");
}

inline GtVariant variant_from_name(const std::string& name) {
  for (const auto& v : gt_variants())
    if (variant_name(v) == name) return v;
  throw DomainError("unknown variant '" + name + "' (use 60, 60e, 100, 100e)");
}

inline int variant_index(const GtVariant& v) {
  for (int i = 0; i < kGtVariantCount; ++i)
    if (gt_variants()[i] == v) return i;
  throw DomainError("unknown variant");
}

// ---------------------------------------------------------------------------
// Training samples.

struct TrainingSample {
  Pose pose;                                   // snapped collection pose
  std::vector<ClassId> obs;                    // 60x60 egocentric classes
  std::array<BinaryImage, kGtVariantCount> gt;  // targets per variant
};

// Embeds a 60x60 observation into a larger window, ring filled with unknown.
inline std::vector<ClassId> widen_observation(const std::vector<ClassId>& obs,
                                              int size) {
  if (obs.size() != static_cast<std::size_t>(kObsSize) * kObsSize)
    throw DomainError("widen_observation expects a 60x60 observation");
  if (size < kObsSize || size % 2 != 0)
    throw DomainError("widened size must be even and >= 60");
  std::vector<ClassId> out(static_cast<std::size_t>(size) * size,
                           ClassId::unknown);
  const int off = (size - kObsSize) / 2;
  for (int r = 0; r < kObsSize; ++r)
    for (int c = 0; c < kObsSize; ++c)
      out[static_cast<std::size_t>(r + off) * size + (c + off)] =
          obs[static_cast<std::size_t>(r) * kObsSize + c];
  return out;
}

inline std::vector<ClassId> observation_for_size(const TrainingSample& s,
                                                 int size) {
  return size == kObsSize ? s.obs : widen_observation(s.obs, size);
}

// One-hot encodes a class image into kClassCount planes (channel-major).
template <class T>
std::vector<T> encode_observation(const std::vector<ClassId>& obs, int size) {
  if (obs.size() != static_cast<std::size_t>(size) * size)
    throw DomainError("observation size mismatch");
  const std::size_t plane = obs.size();
  std::vector<T> x(static_cast<std::size_t>(kClassCount) * plane, T(0));
  for (std::size_t i = 0; i < plane; ++i)
    x[static_cast<std::size_t>(obs[i]) * plane + i] = T(1);
  return x;
}

// Builds one aligned sample: the pose snaps to the grid first, the scan is
// simulated from the snapped pose, and observation and targets share that
// frame exactly.
inline TrainingSample make_sample(const SemanticGrid& grid,
                                  const GroundTruthMaps& gt_maps,
                                  const Pose& pose, const LidarConfig& lidar,
                                  Rng* rng = nullptr) {
  SnappedPose snap = snap_pose(pose, grid.resolution);
  TrainingSample s;
  s.pose = snap.pose;
  SemanticScan scan = simulate_scan(grid, snap.pose, lidar, rng);
  s.obs = project_egocentric(scan, kObsSize);
  for (int i = 0; i < kGtVariantCount; ++i) {
    const GtVariant& v = gt_variants()[i];
    s.gt[i] = crop_patch(v.extended ? gt_maps.extended : gt_maps.occupancy,
                         snap, v.size);
  }
  return s;
}

inline TrainingSample make_sample(const SemanticGrid& grid, const Pose& pose,
                                  const LidarConfig& lidar, Rng* rng = nullptr) {
  return make_sample(grid, make_ground_truth_maps(grid), pose, lidar, rng);
}

// Draws collection poses uniformly over free space, keeping only poses whose
// Euclidean distance to the nearest object footprint cell is at most
// max_dist_m, so collected scans actually contain furniture.
inline std::vector<Pose> sample_poses(const WorldSpec& spec,
                                      const SemanticGrid& grid, int count,
                                      double max_dist_m, Rng& rng) {
  if (count < 1) throw DomainError("pose count must be >= 1");
  if (max_dist_m <= 0.0) throw DomainError("max_dist_m must be positive");
  if (spec.placements.empty())
    throw DomainError("cannot sample poses near objects: the world has none");

  // Centers of all chair/table footprint cells, in meters.
  std::vector<Vec2> object_cells;
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      ClassId cls = grid.footprint(r, c);
      if (cls == ClassId::chair || cls == ClassId::table)
        object_cells.push_back(
            {(c + 0.5) * grid.resolution, (r + 0.5) * grid.resolution});
    }

  std::vector<Pose> poses;
  poses.reserve(count);
  const long long max_attempts = 10000LL * count;
  long long attempts = 0;
  while (static_cast<int>(poses.size()) < count) {
    if (++attempts > max_attempts)
      throw DomainError("could not sample " + std::to_string(count) +
                        " poses within " + format_double(max_dist_m) +
                        " m of an object; attempt budget exhausted");
    Pose p;
    p.x = rng.uniform(0.0, spec.width_m);
    p.y = rng.uniform(0.0, spec.height_m);
    p.heading = rng.uniform(-kPi, kPi);
    SnappedPose snap = snap_pose(p, grid.resolution);
    if (!grid.in_bounds(snap.row, snap.col)) continue;
    if (grid.footprint(snap.row, snap.col) != ClassId::free) continue;
    bool near = false;
    for (const auto& cell : object_cells) {
      double dx = cell.x - p.x, dy = cell.y - p.y;
      if (dx * dx + dy * dy <= max_dist_m * max_dist_m) {
        near = true;
        break;
      }
    }
    if (near) poses.push_back(p);
  }
  return poses;
}

inline std::vector<Pose> sample_poses(const WorldSpec& spec, int count,
                                      double max_dist_m, std::uint64_t seed) {
  Rng rng(seed);
  return sample_poses(spec, rasterize(spec), count, max_dist_m, rng);
}

// ---------------------------------------------------------------------------
// Dataset container. Little-endian binary:
//
//   magic  'SLID'
//   u32    version (1)
//   u32    observation size (60)
//   4 x { u32 size, u8 extended }   target variant table
//   u64    sample count
//   then per sample:
//     f64 x, f64 y, f64 heading
//     u8[obs_size^2]            class ids, row-major
//     4 x bit-packed planes     LSB-first, ceil(size^2 / 8) bytes each

namespace detail {

inline constexpr char kDatasetMagic[4] = {'S', 'L', 'I', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;

inline std::vector<std::uint8_t> pack_bits(const BinaryImage& img) {
  const std::size_t n = img.cells.size();
  std::vector<std::uint8_t> bytes((n + 7) / 8, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (img.cells[i]) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return bytes;
}

inline void unpack_bits(const std::vector<std::uint8_t>& bytes,
                        BinaryImage& img) {
  const std::size_t n = img.cells.size();
  for (std::size_t i = 0; i < n; ++i)
    img.cells[i] = (bytes[i / 8] >> (i % 8)) & 1u;
}

}  // namespace detail

inline void save_dataset(const std::vector<TrainingSample>& samples,
                         std::ostream& out) {
  out.write(detail::kDatasetMagic, 4);
  detail::write_pod(out, detail::kDatasetVersion);
  detail::write_pod(out, static_cast<std::uint32_t>(kObsSize));
  for (const auto& v : gt_variants()) {
    detail::write_pod(out, static_cast<std::uint32_t>(v.size));
    detail::write_pod(out, static_cast<std::uint8_t>(v.extended ? 1 : 0));
  }
  detail::write_pod(out, static_cast<std::uint64_t>(samples.size()));
  for (const auto& s : samples) {
    detail::write_pod(out, s.pose.x);
    detail::write_pod(out, s.pose.y);
    detail::write_pod(out, s.pose.heading);
    static_assert(sizeof(ClassId) == 1);
    out.write(reinterpret_cast<const char*>(s.obs.data()),
              static_cast<std::streamsize>(s.obs.size()));
    for (const auto& g : s.gt) {
      auto bytes = detail::pack_bits(g);
      out.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    }
  }
  if (!out) throw IoError("failed writing dataset stream");
}

inline void save_dataset(const std::vector<TrainingSample>& samples,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset file: " + path);
  save_dataset(samples, out);
}

inline std::vector<TrainingSample> load_dataset(std::istream& in) {
  char magic[4];
  detail::read_exact(in, magic, 4, "magic");
  if (std::memcmp(magic, detail::kDatasetMagic, 4) != 0)
    throw FormatError("not a dataset file (bad magic)");
  auto version = detail::read_pod<std::uint32_t>(in, "version");
  if (version != detail::kDatasetVersion)
    throw FormatError("unsupported dataset version " + std::to_string(version));
  auto obs_size = detail::read_pod<std::uint32_t>(in, "observation size");
  if (obs_size != kObsSize)
    throw FormatError("unexpected observation size " + std::to_string(obs_size));
  for (const auto& v : gt_variants()) {
    auto size = detail::read_pod<std::uint32_t>(in, "variant size");
    auto ext = detail::read_pod<std::uint8_t>(in, "variant flag");
    if (size != static_cast<std::uint32_t>(v.size) ||
        (ext != 0) != v.extended)
      throw FormatError("dataset variant table does not match this build");
  }
  auto count = detail::read_pod<std::uint64_t>(in, "sample count");

  std::vector<TrainingSample> samples;
  samples.reserve(count);
  std::vector<std::uint8_t> bytes;
  for (std::uint64_t i = 0; i < count; ++i) {
    TrainingSample s;
    s.pose.x = detail::read_pod<double>(in, "pose.x");
    s.pose.y = detail::read_pod<double>(in, "pose.y");
    s.pose.heading = detail::read_pod<double>(in, "pose.heading");
    s.obs.resize(static_cast<std::size_t>(kObsSize) * kObsSize);
    detail::read_exact(in, s.obs.data(), s.obs.size(), "observation");
    for (auto c : s.obs) {
      auto raw = static_cast<std::uint8_t>(c);
      if (raw >= kClassCount)
        throw FormatError("observation contains invalid class id " +
                          std::to_string(raw));
    }
    for (int v = 0; v < kGtVariantCount; ++v) {
      const int size = gt_variants()[v].size;
      s.gt[v] = BinaryImage(size, size);
      bytes.resize((s.gt[v].cells.size() + 7) / 8);
      detail::read_exact(in, bytes.data(), bytes.size(), "target plane");
      detail::unpack_bits(bytes, s.gt[v]);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

inline std::vector<TrainingSample> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path);
  return load_dataset(in);
}

}  // namespace semnav
