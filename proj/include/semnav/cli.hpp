#pragma once

// Command-line driver: one binary, six subcommands wiring the pipeline
// together (dataset generation, training, prediction inspection, single
// navigation episodes, the benchmark matrix, and trajectory plotting).
// Every subcommand is deterministic for a fixed config and seed.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semnav/astar.hpp"
#include "semnav/binio.hpp"
#include "semnav/common.hpp"
#include "semnav/config.hpp"
#include "semnav/costmap.hpp"
#include "semnav/dataset.hpp"
#include "semnav/episode.hpp"
#include "semnav/eval.hpp"
#include "semnav/imagine.hpp"
#include "semnav/local_planner.hpp"
#include "semnav/net.hpp"
#include "semnav/sensor.hpp"
#include "semnav/train.hpp"
#include "semnav/weights_io.hpp"
#include "semnav/world.hpp"

namespace semnav {
namespace cli_detail {

using json = nlohmann::ordered_json;

inline RunConfig config_from(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::uint32_t file_crc32(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  return semnav::detail::crc32(bytes.data(), bytes.size());
}

inline void write_file_bytes(const std::string& path,
                             const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

// Comma-separated doubles, e.g. "1.5,2.0" or "1.5,2.0,0.785".
inline std::vector<double> parse_numbers(const std::string& text,
                                         std::size_t lo, std::size_t hi,
                                         const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ParseError(std::string(what) + ": bad number '" + tok + "'");
    }
    while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used])))
      ++used;
    if (used != tok.size())
      throw ParseError(std::string(what) + ": bad number '" + tok + "'");
    out.push_back(v);
  }
  if (out.size() < lo || out.size() > hi)
    throw ParseError(std::string(what) + ": expected " + std::to_string(lo) +
                     (hi > lo ? "-" + std::to_string(hi) : "") +
                     " comma-separated numbers, got '" + text + "'");
  return out;
}

inline Vec2 parse_xy(const std::string& text, const char* what) {
  const auto v = parse_numbers(text, 2, 2, what);
  return {v[0], v[1]};
}

inline Pose parse_pose(const std::string& text, const char* what) {
  const auto v = parse_numbers(text, 2, 3, what);
  return {v[0], v[1], v.size() == 3 ? v[2] : 0.0};
}

// Image writers for prediction inspection. Maps are stored south-row-first;
// images are written north-row-first so "forward" points up.

inline void write_pgm(const std::string& path, const std::vector<float>& data,
                      int size) {
  std::string bytes = "P5\n" + std::to_string(size) + " " +
                      std::to_string(size) + "\n255\n";
  for (int r = size - 1; r >= 0; --r)
    for (int c = 0; c < size; ++c) {
      const float v = data[static_cast<std::size_t>(r) * size + c];
      const int g = std::clamp(static_cast<int>(std::lround(v * 255.0f)), 0, 255);
      bytes.push_back(static_cast<char>(g));
    }
  write_file_bytes(path, bytes);
}

inline void write_pbm(const std::string& path, const BinaryImage& img) {
  std::string bytes = "P4\n" + std::to_string(img.cols) + " " +
                      std::to_string(img.rows) + "\n";
  for (int r = img.rows - 1; r >= 0; --r) {
    std::uint8_t acc = 0;
    int nbits = 0;
    for (int c = 0; c < img.cols; ++c) {
      acc = static_cast<std::uint8_t>((acc << 1) | (img.at(r, c) ? 1 : 0));
      if (++nbits == 8) {
        bytes.push_back(static_cast<char>(acc));
        acc = 0;
        nbits = 0;
      }
    }
    if (nbits > 0)
      bytes.push_back(static_cast<char>(acc << (8 - nbits)));
  }
  write_file_bytes(path, bytes);
}

inline EpisodeMetrics metrics_or_zero(const Trajectory& t) {
  if (t.points.size() >= 2) return trajectory_metrics(t);
  EpisodeMetrics m;
  m.reached = t.goal_reached;
  m.reason = t.reason;
  return m;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOpts {
  std::string world;
  std::string out;
  std::string config;
  int count = 1000;
  std::uint64_t seed = 1;
  double near = 2.0;
};

inline int run_gen_data(const GenDataOpts& o) {
  const RunConfig rc = config_from(o.config);
  const WorldSpec spec = load_world(o.world);
  const SemanticGrid grid = rasterize(spec);
  Rng rng(o.seed);
  const std::vector<Pose> poses = sample_poses(spec, grid, o.count, o.near, rng);
  const GroundTruthMaps gt = make_ground_truth_maps(grid, kDilationRadius);
  LidarConfig lidar = rc.lidar;
  lidar.noise_sigma = 0.0;  // training data is noiseless by contract
  std::vector<TrainingSample> samples;
  samples.reserve(poses.size());
  for (const Pose& p : poses)
    samples.push_back(make_sample(grid, gt, p, lidar));
  save_dataset(samples, o.out);
  std::printf("wrote %zu samples to %s\n", samples.size(), o.out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data;
  std::string out;
  std::string config;
  std::string variant = "60";
  int epochs = 0;  // 0 = from config
  std::uint64_t seed = 1;
};

inline int run_train(const TrainOpts& o) {
  const RunConfig rc = config_from(o.config);
  const std::vector<TrainingSample> samples = load_dataset(o.data);
  TrainConfig tc = rc.training;
  tc.variant = variant_from_name(o.variant);
  tc.seed = o.seed;
  if (o.epochs > 0) tc.epochs = o.epochs;
  const TrainResult res = train(samples, tc);
  for (const EpochLog& e : res.log) {
    if (std::isnan(e.val_loss))
      std::printf("epoch %d train %s\n", e.epoch,
                  format_double(e.train_loss).c_str());
    else
      std::printf("epoch %d train %s val %s\n", e.epoch,
                  format_double(e.train_loss).c_str(),
                  format_double(e.val_loss).c_str());
  }
  if (res.diverged)
    std::fprintf(stderr,
                 "warning: loss diverged; restored the last good snapshot\n");
  save_weights(res.weights, o.out);
  std::printf("saved variant %s weights to %s\n", o.variant.c_str(),
              o.out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// imagine

struct ImagineOpts {
  std::string weights;
  std::string world;
  std::string pose;
  std::string out_prefix = "imagine";
  std::string config;
  int size = 0;       // 0 = take from the weights file
  double theta = -1;  // <0 = from config
};

inline int run_imagine(const ImagineOpts& o) {
  RunConfig rc = config_from(o.config);
  NetWeights<float> w = load_weights(o.weights);
  if (o.size != 0 && o.size != w.plan.input_size)
    throw DomainError("--size " + std::to_string(o.size) +
                      " does not match the weights file (input size " +
                      std::to_string(w.plan.input_size) + ")");
  const int size = w.plan.input_size;
  if (o.theta >= 0) rc.imagine.theta = o.theta;

  const SemanticGrid grid = rasterize(load_world(o.world));
  const Pose pose = parse_pose(o.pose, "--pose");
  const SnappedPose snap = snap_pose(pose, grid.resolution);
  LidarConfig lidar = rc.lidar;
  lidar.noise_sigma = 0.0;  // inspection runs are exactly reproducible
  const SemanticScan scan = simulate_scan(grid, snap.pose, lidar);
  const std::vector<ClassId> obs = project_egocentric(scan, size);

  Imaginer imaginer(std::move(w), rc.imagine);
  const ImaginationResult res = imaginer.imagine(obs);
  write_pgm(o.out_prefix + "_raw.pgm", res.raw, size);
  write_pgm(o.out_prefix + "_mask.pgm", res.mask, size);
  write_pbm(o.out_prefix + "_occupancy.pbm", res.occupancy);
  std::printf("%zu of %d cells predicted occupied; wrote %s_{raw,mask}.pgm, %s_occupancy.pbm\n",
              res.occupancy.count(), size * size, o.out_prefix.c_str(),
              o.out_prefix.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// navigate

struct NavigateOpts {
  std::string world;
  std::string start;
  std::string goal;
  std::string weights;
  std::string out;
  std::string svg;
  std::string config;
  bool oracle = false;
  std::uint64_t seed = 1;
};

inline int run_navigate(const NavigateOpts& o) {
  const RunConfig rc = config_from(o.config);
  const SemanticGrid grid = rasterize(load_world(o.world));

  EpisodeSetup setup;
  setup.start = parse_pose(o.start, "--start");
  setup.goal = parse_xy(o.goal, "--goal");
  setup.planner = rc.planner;
  setup.lidar = rc.lidar;
  setup.imagine = rc.imagine;
  setup.seed = o.seed;
  std::optional<NetWeights<float>> weights;
  if (!o.weights.empty()) {
    weights = load_weights(o.weights);
    setup.mode = ImaginationMode::model;
    setup.weights = &*weights;
  } else if (o.oracle) {
    setup.mode = ImaginationMode::oracle;
  }

  const Trajectory traj = run_episode(grid, setup);
  {
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + o.out);
    write_trajectory_jsonl(out, traj);
  }
  if (!o.svg.empty()) {
    AgentTrack track;
    track.label = imagination_mode_name(setup.mode);
    track.trajectory = traj;
    write_svg(o.svg, grid, {track}, Vec2{setup.start.x, setup.start.y},
              setup.goal);
  }
  const EpisodeMetrics m = metrics_or_zero(traj);
  std::printf("reason %s length %s duration %s avg_velocity %s\n",
              m.reason.c_str(), format_double(m.length).c_str(),
              format_double(m.duration).c_str(),
              format_double(m.avg_velocity).c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
  std::string worlds_dir;
  std::string out_dir;
  std::string weights_dir;
  std::string config;
  int paths = 0;  // 0 = from config
  std::uint64_t seed = 1;
  bool oracle = false;
};

struct BenchAgent {
  std::string name;   // file-name-safe id, also the metrics key
  std::string label;  // legend text
  ImaginationMode mode = ImaginationMode::none;
  std::optional<NetWeights<float>> weights;
};

struct BenchPath {
  Pose start;
  Vec2 goal;
};

// Start/goal pairs drawn uniformly over free cells, both endpoints clear of
// inflated obstacles and provably connected on the true map, independent of
// the agent set so every agent sees identical tasks.
inline std::vector<BenchPath> sample_bench_paths(const SemanticGrid& grid,
                                                 int count, double min_sep,
                                                 double inflation_radius,
                                                 Rng& rng) {
  const Costmap truth = build_global_costmap(grid, inflation_radius);
  std::vector<BenchPath> out;
  long long attempts = 0;
  const long long budget = 20000LL * count;
  auto free_cell = [&](int r, int c) {
    return grid.footprint(r, c) == ClassId::free &&
           truth.at(r, c) < kCostInscribed;
  };
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > budget)
      throw DomainError("could not sample " + std::to_string(count) +
                        " start/goal pairs; the world may be too cluttered");
    const int sr = static_cast<int>(rng.uniform_int(grid.rows));
    const int sc = static_cast<int>(rng.uniform_int(grid.cols));
    const int gr = static_cast<int>(rng.uniform_int(grid.rows));
    const int gc = static_cast<int>(rng.uniform_int(grid.cols));
    const double heading = rng.uniform(-kPi, kPi);
    if (!free_cell(sr, sc) || !free_cell(gr, gc)) continue;
    const Vec2 s = truth.center_of(sr, sc);
    const Vec2 g = truth.center_of(gr, gc);
    if (std::hypot(g.x - s.x, g.y - s.y) < min_sep) continue;
    try {
      astar(truth, {sr, sc}, {gr, gc});
    } catch (const DomainError&) {
      continue;
    }
    out.push_back({Pose{s.x, s.y, heading}, g});
  }
  return out;
}

inline int run_bench(const BenchOpts& o) {
  namespace fs = std::filesystem;
  const RunConfig rc = config_from(o.config);
  const int paths_per_world = o.paths > 0 ? o.paths : rc.bench.paths_per_world;

  std::vector<std::string> world_files;
  for (const auto& entry : fs::directory_iterator(o.worlds_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".world")
      world_files.push_back(entry.path().string());
  std::sort(world_files.begin(), world_files.end());
  if (world_files.empty())
    throw IoError("no .world files in " + o.worlds_dir);

  std::vector<BenchAgent> agents;
  {
    BenchAgent none;
    none.name = "none";
    none.label = "no imagination";
    agents.push_back(std::move(none));
  }
  if (o.oracle || o.weights_dir.empty()) {
    BenchAgent oracle;
    oracle.name = "oracle";
    oracle.label = "oracle imagination";
    oracle.mode = ImaginationMode::oracle;
    agents.push_back(std::move(oracle));
  }
  if (!o.weights_dir.empty()) {
    for (const GtVariant& v : gt_variants()) {
      BenchAgent a;
      a.name = "model_" + variant_name(v);
      a.label = "imagination " + variant_name(v);
      a.mode = ImaginationMode::model;
      a.weights =
          load_weights((fs::path(o.weights_dir) /
                        ("unet_" + variant_name(v) + ".imgw")).string());
      agents.push_back(std::move(a));
    }
  }

  fs::create_directories(o.out_dir);
  const fs::path out_dir(o.out_dir);

  json manifest;
  manifest["seed"] = o.seed;
  manifest["paths_per_world"] = paths_per_world;
  {
    json names = json::array();
    for (const auto& a : agents) names.push_back(a.name);
    manifest["agents"] = std::move(names);
  }
  manifest["config"] = run_config_json(rc);
  manifest["worlds"] = json::array();
  manifest["paths"] = json::array();

  std::ofstream metrics_out(out_dir / "metrics.jsonl", std::ios::binary);
  if (!metrics_out)
    throw IoError("cannot open for writing: " +
                  (out_dir / "metrics.jsonl").string());

  struct AgentTotals {
    int episodes = 0;
    int reached = 0;
    double length = 0.0;
    double duration = 0.0;
    double velocity = 0.0;
  };
  std::vector<AgentTotals> totals(agents.size());
  std::vector<std::string> output_files{"metrics.jsonl", "summary.txt"};

  for (std::size_t wi = 0; wi < world_files.size(); ++wi) {
    const std::string& wf = world_files[wi];
    const std::string stem = fs::path(wf).stem().string();
    const SemanticGrid grid = rasterize(load_world(wf));
    manifest["worlds"].push_back(
        {{"file", fs::path(wf).filename().string()}, {"crc32", file_crc32(wf)}});

    Rng path_rng(mix_seed(o.seed, wi));
    const std::vector<BenchPath> paths =
        sample_bench_paths(grid, paths_per_world, rc.bench.min_separation,
                           rc.planner.inflation_radius, path_rng);

    for (std::size_t pi = 0; pi < paths.size(); ++pi) {
      const BenchPath& bp = paths[pi];
      manifest["paths"].push_back({{"world", stem},
                                   {"path", pi},
                                   {"start", {bp.start.x, bp.start.y, bp.start.heading}},
                                   {"goal", {bp.goal.x, bp.goal.y}}});
      std::vector<AgentTrack> tracks;
      for (std::size_t ai = 0; ai < agents.size(); ++ai) {
        const BenchAgent& agent = agents[ai];
        EpisodeSetup setup;
        setup.start = bp.start;
        setup.goal = bp.goal;
        setup.mode = agent.mode;
        if (agent.weights) setup.weights = &*agent.weights;
        setup.planner = rc.planner;
        setup.lidar = rc.lidar;
        setup.imagine = rc.imagine;
        setup.seed = mix_seed(mix_seed(o.seed, wi * 1024 + pi), 4096 + ai);
        const Trajectory traj = run_episode(grid, setup);

        const std::string traj_file =
            "traj_" + stem + "_p" + std::to_string(pi) + "_" + agent.name +
            ".jsonl";
        {
          std::ofstream tout(out_dir / traj_file, std::ios::binary);
          if (!tout)
            throw IoError("cannot open for writing: " +
                          (out_dir / traj_file).string());
          write_trajectory_jsonl(tout, traj);
        }
        output_files.push_back(traj_file);

        const EpisodeMetrics m = metrics_or_zero(traj);
        json line = {{"world", stem},     {"path", pi},
                     {"agent", agent.name}, {"reason", m.reason},
                     {"reached", m.reached}, {"length", m.length},
                     {"duration", m.duration}, {"avg_velocity", m.avg_velocity}};
        metrics_out << line.dump() << '\n';

        AgentTotals& t = totals[ai];
        ++t.episodes;
        t.reached += m.reached ? 1 : 0;
        t.length += m.length;
        t.duration += m.duration;
        t.velocity += m.avg_velocity;

        tracks.push_back({agent.label, traj});
      }
      const std::string fig_file =
          "fig_" + stem + "_p" + std::to_string(pi) + ".svg";
      write_svg((out_dir / fig_file).string(), grid, tracks,
                Vec2{bp.start.x, bp.start.y}, bp.goal);
      output_files.push_back(fig_file);
    }
  }
  metrics_out.close();
  if (!metrics_out) throw IoError("write failed: metrics.jsonl");

  // Per-agent means over all episodes, plain text.
  std::string summary =
      "agent        episodes  reached  mean_length_m  mean_duration_s  "
      "mean_velocity_mps\n";
  for (std::size_t ai = 0; ai < agents.size(); ++ai) {
    const AgentTotals& t = totals[ai];
    const double n = t.episodes > 0 ? static_cast<double>(t.episodes) : 1.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-12s %9d %8d %14.3f %16.3f %18.3f\n",
                  agents[ai].name.c_str(), t.episodes, t.reached,
                  t.length / n, t.duration / n, t.velocity / n);
    summary += buf;
  }
  write_file_bytes((out_dir / "summary.txt").string(), summary);
  std::fputs(summary.c_str(), stdout);

  std::sort(output_files.begin(), output_files.end());
  manifest["outputs"] = json::array();
  for (const std::string& f : output_files)
    manifest["outputs"].push_back(
        {{"file", f}, {"crc32", file_crc32((out_dir / f).string())}});
  write_file_bytes((out_dir / "manifest.json").string(),
                   manifest.dump(2) + "\n");
  std::printf("wrote %zu episodes to %s\n",
              static_cast<std::size_t>(totals.size() ? totals[0].episodes : 0) *
                  agents.size(),
              o.out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// plot

struct PlotOpts {
  std::string world;
  std::vector<std::string> trajs;
  std::vector<std::string> labels;
  std::string out;
  std::string start;
  std::string goal;
};

inline int run_plot(const PlotOpts& o) {
  if (!o.labels.empty() && o.labels.size() != o.trajs.size())
    throw DomainError("--label count must match --traj count");
  const SemanticGrid grid = rasterize(load_world(o.world));
  std::vector<AgentTrack> tracks;
  for (std::size_t i = 0; i < o.trajs.size(); ++i) {
    std::ifstream in(o.trajs[i], std::ios::binary);
    if (!in) throw IoError("cannot open trajectory: " + o.trajs[i]);
    AgentTrack t;
    t.label = i < o.labels.size()
                  ? o.labels[i]
                  : std::filesystem::path(o.trajs[i]).stem().string();
    t.trajectory = read_trajectory_jsonl(in);
    if (t.trajectory.points.empty())
      throw DomainError("empty trajectory: " + o.trajs[i]);
    tracks.push_back(std::move(t));
  }
  const auto& first = tracks.front().trajectory.points;
  const Vec2 start = o.start.empty()
                         ? Vec2{first.front().pose.x, first.front().pose.y}
                         : parse_xy(o.start, "--start");
  const Vec2 goal = o.goal.empty()
                        ? Vec2{first.back().pose.x, first.back().pose.y}
                        : parse_xy(o.goal, "--goal");
  write_svg(o.out, grid, tracks, start, goal);
  std::printf("wrote %s\n", o.out.c_str());
  return 0;
}

}  // namespace cli_detail

inline int cli_main(int argc, char** argv) {
  using namespace cli_detail;
  CLI::App app{"2D semantic navigation: learn full furniture footprints from "
               "leg-level lidar and plan around them"};
  app.require_subcommand(1);

  GenDataOpts gd;
  auto* gen = app.add_subcommand(
      "gen-data", "sample scan/ground-truth training pairs from a world");
  gen->add_option("--world", gd.world, "world file")
      ->required()
      ->check(CLI::ExistingFile);
  gen->add_option("--count", gd.count, "number of samples")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gd.seed, "RNG seed");
  gen->add_option("--near", gd.near,
                  "max distance from a pose to the nearest object, m")
      ->check(CLI::PositiveNumber);
  gen->add_option("--out", gd.out, "output dataset file")->required();
  gen->add_option("--config", gd.config, "JSON config file")
      ->check(CLI::ExistingFile);

  TrainOpts tr;
  auto* train_cmd =
      app.add_subcommand("train", "train occupancy prediction weights");
  train_cmd->add_option("--data", tr.data, "dataset file")->required();
  train_cmd
      ->add_option("--variant", tr.variant,
                   "ground-truth variant: 60, 60e, 100, 100e")
      ->check(CLI::IsMember({"60", "60e", "100", "100e"}));
  train_cmd->add_option("--epochs", tr.epochs, "override config epoch count")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", tr.seed, "RNG seed");
  train_cmd->add_option("--out", tr.out, "output weights file")->required();
  train_cmd->add_option("--config", tr.config, "JSON config file")
      ->check(CLI::ExistingFile);

  ImagineOpts im;
  auto* imagine_cmd = app.add_subcommand(
      "imagine", "run one prediction and dump raw/mask/occupancy images");
  imagine_cmd->add_option("--weights", im.weights, "weights file")
      ->required()
      ->check(CLI::ExistingFile);
  imagine_cmd->add_option("--world", im.world, "world file")
      ->required()
      ->check(CLI::ExistingFile);
  imagine_cmd->add_option("--pose", im.pose, "robot pose x,y[,heading]")
      ->required();
  imagine_cmd->add_option("--size", im.size,
                          "map size in cells; must match the weights");
  imagine_cmd->add_option("--theta", im.theta, "occupancy threshold override");
  imagine_cmd->add_option("--out-prefix", im.out_prefix,
                          "prefix for the emitted images");
  imagine_cmd->add_option("--config", im.config, "JSON config file")
      ->check(CLI::ExistingFile);

  NavigateOpts nav;
  auto* nav_cmd =
      app.add_subcommand("navigate", "run one closed-loop episode");
  nav_cmd->add_option("--world", nav.world, "world file")
      ->required()
      ->check(CLI::ExistingFile);
  nav_cmd->add_option("--start", nav.start, "start pose x,y[,heading]")
      ->required();
  nav_cmd->add_option("--goal", nav.goal, "goal point x,y")->required();
  auto* nav_weights = nav_cmd->add_option(
      "--weights", nav.weights, "weights file (enables model predictions)");
  nav_cmd->add_flag("--oracle", nav.oracle, "use ground truth as predictions")
      ->excludes(nav_weights);
  nav_cmd->add_option("--seed", nav.seed, "RNG seed for scan noise");
  nav_cmd->add_option("--out", nav.out, "output trajectory JSONL")->required();
  nav_cmd->add_option("--svg", nav.svg, "also render the episode to SVG");
  nav_cmd->add_option("--config", nav.config, "JSON config file")
      ->check(CLI::ExistingFile);

  BenchOpts be;
  auto* bench_cmd = app.add_subcommand(
      "bench", "run the full agent-by-path benchmark matrix");
  bench_cmd->add_option("--worlds-dir", be.worlds_dir,
                        "directory of .world files")
      ->required()
      ->check(CLI::ExistingDirectory);
  bench_cmd->add_option("--out-dir", be.out_dir, "output directory")
      ->required();
  bench_cmd->add_option("--weights-dir", be.weights_dir,
                        "directory with unet_{60,60e,100,100e}.imgw")
      ->check(CLI::ExistingDirectory);
  bench_cmd->add_flag("--oracle", be.oracle,
                      "include the oracle agent (implied without weights)");
  bench_cmd->add_option("--paths", be.paths, "paths per world override")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", be.seed, "benchmark seed");
  bench_cmd->add_option("--config", be.config, "JSON config file")
      ->check(CLI::ExistingFile);

  PlotOpts pl;
  auto* plot_cmd = app.add_subcommand(
      "plot", "render recorded trajectories over a world to SVG");
  plot_cmd->add_option("--world", pl.world, "world file")
      ->required()
      ->check(CLI::ExistingFile);
  plot_cmd->add_option("--traj", pl.trajs, "trajectory JSONL (repeatable)")
      ->required();
  plot_cmd->add_option("--label", pl.labels, "legend label per --traj");
  plot_cmd->add_option("--start", pl.start, "start marker x,y");
  plot_cmd->add_option("--goal", pl.goal, "goal marker x,y");
  plot_cmd->add_option("--out", pl.out, "output SVG file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (gen->parsed()) return run_gen_data(gd);
  if (train_cmd->parsed()) return run_train(tr);
  if (imagine_cmd->parsed()) return run_imagine(im);
  if (nav_cmd->parsed()) return run_navigate(nav);
  if (bench_cmd->parsed()) return run_bench(be);
  if (plot_cmd->parsed()) return run_plot(pl);
  return 2;
}

}  // namespace semnav
