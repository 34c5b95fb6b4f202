#include "semnav/dataset.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace semnav;

namespace {

WorldSpec furnished_room() {
  WorldSpec spec;
  spec.width_m = 10.0;
  spec.height_m = 10.0;
  double e = 9.99;
  spec.walls = {{0, 0, e, 0}, {0, e, e, e}, {0, 0, 0, e}, {e, 0, e, e}};
  spec.placements = {{"table_a", 5.0, 5.0, 0},
                     {"chair_a", 3.0, 7.0, 1},
                     {"chair_d", 7.4, 2.4, 3}};
  return spec;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Dilate, EmptyStaysEmpty) {
  BinaryImage img(60, 60);
  EXPECT_EQ(dilate(img, 5).count(), 0u);
}

TEST(Dilate, CenterPixelRadiusFiveGives81Cells) {
  BinaryImage img(60, 60);
  img.set(30, 30, 1);
  BinaryImage out = dilate(img, 5);
  // Lattice-point oracle: dx^2 + dy^2 <= 25.
  std::size_t expected = 0;
  for (int dy = -5; dy <= 5; ++dy)
    for (int dx = -5; dx <= 5; ++dx)
      if (dx * dx + dy * dy <= 25) ++expected;
  EXPECT_EQ(expected, 81u);
  EXPECT_EQ(out.count(), expected);
  for (int dy = -5; dy <= 5; ++dy)
    for (int dx = -5; dx <= 5; ++dx)
      EXPECT_EQ(out.at(30 + dy, 30 + dx), dx * dx + dy * dy <= 25 ? 1 : 0);
}

TEST(Dilate, CornerPixelRadiusFiveGives26Cells) {
  BinaryImage img(60, 60);
  img.set(0, 0, 1);
  BinaryImage out = dilate(img, 5);
  std::size_t expected = 0;
  for (int dy = 0; dy <= 5; ++dy)
    for (int dx = 0; dx <= 5; ++dx)
      if (dx * dx + dy * dy <= 25) ++expected;
  EXPECT_EQ(expected, 26u);
  EXPECT_EQ(out.count(), expected);
}

TEST(Dilate, ExtensiveMonotoneAndIdempotentAtZero) {
  BinaryImage img(40, 40);
  Rng rng(11);
  for (int i = 0; i < 30; ++i)
    img.set(static_cast<int>(rng.uniform_int(40)),
            static_cast<int>(rng.uniform_int(40)), 1);
  BinaryImage d0 = dilate(img, 0);
  BinaryImage d3 = dilate(img, 3);
  BinaryImage d5 = dilate(img, 5);
  EXPECT_EQ(d0, img);
  for (std::size_t i = 0; i < img.cells.size(); ++i) {
    if (img.cells[i]) EXPECT_TRUE(d3.cells[i]);  // extensive
    if (d3.cells[i]) EXPECT_TRUE(d5.cells[i]);   // monotone in radius
  }
  EXPECT_THROW(dilate(img, -1), DomainError);
}

TEST(GroundTruth, CropMatchesDirectSliceAtQuarterTurnZero) {
  SemanticGrid g = rasterize(furnished_room());
  GroundTruthMaps maps = make_ground_truth_maps(g);
  SnappedPose s = snap_pose({4.2, 4.7, 0.0});
  BinaryImage patch = crop_patch(maps.occupancy, s, 60);
  // Independent slice: at quarter turn 0 the patch axes are
  // row <- world col (forward), col <- world row (left).
  for (int pr = 0; pr < 60; ++pr)
    for (int pc = 0; pc < 60; ++pc) {
      int wr = s.row + (pc - 30);
      int wc = s.col + (30 - pr);
      std::uint8_t want = 0;
      if (wr >= 0 && wc >= 0 && wr < g.rows && wc < g.cols)
        want = is_obstacle(g.footprint(wr, wc)) ? 1 : 0;
      EXPECT_EQ(patch.at(pr, pc), want) << pr << "," << pc;
    }
}

TEST(GroundTruth, CropCommutesWithWorldTranslation) {
  // Mid-cell coordinates everywhere: cell membership under floor() must not
  // sit on a boundary, or the +dx shift lands in a different relative cell.
  WorldSpec a;
  a.width_m = 12.0;
  a.height_m = 12.0;
  a.placements = {{"table_d", 5.025, 5.025, 2}, {"chair_e", 3.225, 6.125, 0}};
  WorldSpec b = a;
  const double dx = 0.55, dy = -0.40;  // whole numbers of cells
  for (auto& p : b.placements) {
    p.x_m += dx;
    p.y_m += dy;
  }
  GroundTruthMaps ma = make_ground_truth_maps(rasterize(a));
  GroundTruthMaps mb = make_ground_truth_maps(rasterize(b));
  for (int q = 0; q < 4; ++q) {
    // Mid-cell coordinates: translation equivalence needs floor() on both
    // sides of the shift to land in corresponding cells.
    Pose pa{4.12, 4.33, q * (kPi / 2.0)};
    Pose pb{pa.x + dx, pa.y + dy, pa.heading};
    EXPECT_EQ(crop_patch(ma.occupancy, snap_pose(pa), 60),
              crop_patch(mb.occupancy, snap_pose(pb), 60))
        << "q=" << q;
    EXPECT_EQ(crop_patch(ma.extended, snap_pose(pa), 100),
              crop_patch(mb.extended, snap_pose(pb), 100))
        << "q=" << q;
  }
}

TEST(Variants, NamesRoundTrip) {
  EXPECT_EQ(variant_name(gt_variants()[0]), "60");
  EXPECT_EQ(variant_name(gt_variants()[1]), "60e");
  EXPECT_EQ(variant_name(gt_variants()[2]), "100");
  EXPECT_EQ(variant_name(gt_variants()[3]), "100e");
  for (const auto& v : gt_variants())
    EXPECT_EQ(variant_from_name(variant_name(v)), v);
  EXPECT_THROW(variant_from_name("42"), DomainError);
}

TEST(Samples, ExtendedTargetsContainNormalTargets) {
  WorldSpec spec = furnished_room();
  SemanticGrid g = rasterize(spec);
  GroundTruthMaps maps = make_ground_truth_maps(g);
  Rng rng(5);
  auto poses = sample_poses(spec, g, 20, 2.5, rng);
  for (const auto& pose : poses) {
    TrainingSample s = make_sample(g, maps, pose, LidarConfig{});
    for (int v = 0; v < kGtVariantCount; ++v) {
      const GtVariant& var = gt_variants()[v];
      if (!var.extended) continue;
      int normal = variant_index(GtVariant{var.size, false});
      EXPECT_GE(s.gt[v].count(), s.gt[normal].count());
      for (std::size_t i = 0; i < s.gt[v].cells.size(); ++i)
        if (s.gt[normal].cells[i]) EXPECT_TRUE(s.gt[v].cells[i]);
    }
  }
}

TEST(Samples, WideTargetMatchesNarrowTargetOnCentralWindow) {
  SemanticGrid g = rasterize(furnished_room());
  GroundTruthMaps maps = make_ground_truth_maps(g);
  TrainingSample s = make_sample(g, maps, {3.7, 5.2, 0.4}, LidarConfig{});
  const BinaryImage& narrow = s.gt[variant_index({60, false})];
  const BinaryImage& wide = s.gt[variant_index({100, false})];
  for (int r = 0; r < 60; ++r)
    for (int c = 0; c < 60; ++c)
      EXPECT_EQ(wide.at(r + 20, c + 20), narrow.at(r, c));
}

TEST(Samples, FarFromObjectsTargetsHoldOnlyWalls) {
  WorldSpec spec = furnished_room();
  SemanticGrid g = rasterize(spec);
  GroundTruthMaps maps = make_ground_truth_maps(g);
  // Walls-only twin of the same room.
  WorldSpec walls_only = spec;
  walls_only.placements.clear();
  GroundTruthMaps wall_maps = make_ground_truth_maps(rasterize(walls_only));

  // Nearest object corner is > 4 m away from (1.2, 1.2); even the 100-cell
  // window (3.54 m half-diagonal) plus dilation cannot reach any object.
  Pose pose{1.2, 1.2, 0.7};
  TrainingSample s = make_sample(g, maps, pose, LidarConfig{});
  SnappedPose snap = snap_pose(pose);
  for (int v = 0; v < kGtVariantCount; ++v) {
    const GtVariant& var = gt_variants()[v];
    const BinaryImage& ref = var.extended ? wall_maps.extended
                                          : wall_maps.occupancy;
    EXPECT_EQ(s.gt[v], crop_patch(ref, snap, var.size))
        << variant_name(var);
  }
}

TEST(Samples, ObservationObstaclesHaveOccupiedTargetNearby) {
  // Noise-free scans from a snapped pose: any obstacle stamped into the
  // observation must be occupied in the normal 60x60 target at that cell or
  // an adjacent one (endpoint rounding can shift a boundary hit by one cell).
  SemanticGrid g = rasterize(furnished_room());
  GroundTruthMaps maps = make_ground_truth_maps(g);
  for (double heading : {0.0, kPi / 2.0}) {
    TrainingSample s = make_sample(g, maps, {3.62, 4.11, heading},
                                   LidarConfig{});
    const BinaryImage& gt = s.gt[variant_index({60, false})];
    for (int r = 0; r < 60; ++r)
      for (int c = 0; c < 60; ++c) {
        ClassId cls = s.obs[r * 60 + c];
        if (cls == ClassId::free || cls == ClassId::unknown) continue;
        bool near = false;
        for (int dr = -1; dr <= 1 && !near; ++dr)
          for (int dc = -1; dc <= 1 && !near; ++dc) {
            int rr = r + dr, cc = c + dc;
            if (rr >= 0 && cc >= 0 && rr < 60 && cc < 60 && gt.at(rr, cc))
              near = true;
          }
        EXPECT_TRUE(near) << "obs obstacle at (" << r << "," << c
                          << ") has no occupied target cell adjacent";
      }
  }
}

TEST(Samples, PosesSampleNearObjectsDeterministically) {
  WorldSpec spec = furnished_room();
  SemanticGrid g = rasterize(spec);

  auto a = sample_poses(spec, 15, 1.0, 99);
  auto b = sample_poses(spec, 15, 1.0, 99);
  ASSERT_EQ(a.size(), 15u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].y, b[i].y);
    EXPECT_EQ(a[i].heading, b[i].heading);
  }

  // Distance-transform oracle: min distance to any object footprint cell.
  for (const auto& p : a) {
    double best = 1e9;
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) {
        ClassId cls = g.footprint(r, c);
        if (cls != ClassId::chair && cls != ClassId::table) continue;
        double dx = (c + 0.5) * g.resolution - p.x;
        double dy = (r + 0.5) * g.resolution - p.y;
        best = std::min(best, std::sqrt(dx * dx + dy * dy));
      }
    EXPECT_LE(best, 1.0);
    EXPECT_GE(p.heading, -kPi);
    EXPECT_LT(p.heading, kPi);
    SnappedPose s = snap_pose(p);
    EXPECT_EQ(g.footprint(s.row, s.col), ClassId::free);
  }
}

TEST(Samples, PoseSamplingErrors) {
  WorldSpec empty;
  empty.width_m = 5.0;
  empty.height_m = 5.0;
  EXPECT_THROW(sample_poses(empty, 1, 1.0, 7), DomainError);

  WorldSpec spec = furnished_room();
  SemanticGrid g = rasterize(spec);
  Rng rng(1);
  EXPECT_THROW(sample_poses(spec, g, 0, 1.0, rng), DomainError);
  EXPECT_THROW(sample_poses(spec, g, 1, 0.0, rng), DomainError);
}

TEST(Samples, WidenedObservationKeepsWindowAndRing) {
  SemanticGrid g = rasterize(furnished_room());
  TrainingSample s = make_sample(g, {4.4, 4.4, 1.6}, LidarConfig{});
  auto wide = observation_for_size(s, 100);
  ASSERT_EQ(wide.size(), 10000u);
  for (int r = 0; r < 100; ++r)
    for (int c = 0; c < 100; ++c) {
      bool ring = r < 20 || r >= 80 || c < 20 || c >= 80;
      if (ring)
        EXPECT_EQ(wide[r * 100 + c], ClassId::unknown);
      else
        EXPECT_EQ(wide[r * 100 + c], s.obs[(r - 20) * 60 + (c - 20)]);
    }
  EXPECT_EQ(observation_for_size(s, 60), s.obs);
}

TEST(Samples, OneHotEncodingSumsToOne) {
  SemanticGrid g = rasterize(furnished_room());
  TrainingSample s = make_sample(g, {4.4, 4.4, -2.3}, LidarConfig{});
  auto x = encode_observation<float>(s.obs, 60);
  ASSERT_EQ(x.size(), 5u * 3600u);
  for (int i = 0; i < 3600; ++i) {
    float sum = 0.0f;
    for (int ch = 0; ch < kClassCount; ++ch) sum += x[ch * 3600 + i];
    EXPECT_EQ(sum, 1.0f);
    EXPECT_EQ(x[static_cast<int>(s.obs[i]) * 3600 + i], 1.0f);
  }

  std::vector<ClassId> one_chair(3600, ClassId::free);
  one_chair[10 * 60 + 30] = ClassId::chair;
  auto y = encode_observation<float>(one_chair, 60);
  int ones_in_chair_plane = 0;
  for (int i = 0; i < 3600; ++i)
    ones_in_chair_plane += y[3 * 3600 + i] == 1.0f;
  EXPECT_EQ(ones_in_chair_plane, 1);
  EXPECT_EQ(y[3 * 3600 + 10 * 60 + 30], 1.0f);
}

TEST(DatasetFile, RoundTripIsIdentity) {
  WorldSpec spec = furnished_room();
  SemanticGrid g = rasterize(spec);
  GroundTruthMaps maps = make_ground_truth_maps(g);
  Rng rng(21);
  std::vector<TrainingSample> samples;
  for (const auto& p : sample_poses(spec, g, 10, 2.0, rng))
    samples.push_back(make_sample(g, maps, p, LidarConfig{}));

  std::string path = temp_path("roundtrip.slid");
  save_dataset(samples, path);
  auto back = load_dataset(path);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(back[i].pose.x, samples[i].pose.x);
    EXPECT_EQ(back[i].pose.y, samples[i].pose.y);
    EXPECT_EQ(back[i].pose.heading, samples[i].pose.heading);
    EXPECT_EQ(back[i].obs, samples[i].obs);
    for (int v = 0; v < kGtVariantCount; ++v)
      EXPECT_EQ(back[i].gt[v], samples[i].gt[v]);
  }
  std::remove(path.c_str());
}

TEST(DatasetFile, CorruptMagicRejected) {
  std::ostringstream out;
  save_dataset({}, out);
  std::string bytes = out.str();
  bytes[0] = 'X';
  std::istringstream in(bytes);
  EXPECT_THROW(load_dataset(in), FormatError);
}

TEST(DatasetFile, TruncationNamesExpectedLength) {
  SemanticGrid g = rasterize(furnished_room());
  std::vector<TrainingSample> samples = {
      make_sample(g, {4.4, 4.4, 0.0}, LidarConfig{})};
  std::ostringstream out;
  save_dataset(samples, out);
  std::string bytes = out.str();
  std::istringstream in(bytes.substr(0, bytes.size() - 100));
  try {
    load_dataset(in);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("expected"), std::string::npos);
  }
}

TEST(DatasetFile, MissingFileIsIoError) {
  EXPECT_THROW(load_dataset(temp_path("does_not_exist.slid")), IoError);
}
