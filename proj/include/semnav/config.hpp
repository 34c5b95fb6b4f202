#pragma once

// Consolidated run configuration. Every tunable default lives in the structs
// referenced here (LidarConfig, ImagineConfig, PlannerConfig, TrainConfig);
// a JSON config document can override any subset, and unknown keys are
// rejected so typos fail loudly instead of silently using a default.

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "semnav/common.hpp"
#include "semnav/imagine.hpp"
#include "semnav/local_planner.hpp"
#include "semnav/sensor.hpp"
#include "semnav/train.hpp"

namespace semnav {

struct BenchConfig {
  int paths_per_world = 7;      // start/goal pairs drawn per test world
  double min_separation = 3.0;  // m between a path's start and goal
};

struct RunConfig {
  LidarConfig lidar = navigation_lidar();  // scans during navigation runs;
                                           // dataset scans are always noiseless
  ImagineConfig imagine;
  PlannerConfig planner;
  TrainConfig training;  // variant and seed are per-invocation flags
  BenchConfig bench;
};

inline void validate_run_config(const RunConfig& c) {
  if (c.lidar.beam_count < 1)
    throw DomainError("lidar.beam_count must be >= 1");
  if (!(c.lidar.max_range > 0.0))
    throw DomainError("lidar.max_range must be positive");
  if (c.lidar.noise_sigma < 0.0)
    throw DomainError("lidar.noise_sigma must be >= 0");
  if (!(c.imagine.sigma > 0.0))
    throw DomainError("imagine.sigma must be positive");
  if (!(c.imagine.theta >= 0.0 && c.imagine.theta < 1.0))
    throw DomainError("imagine.theta must be in [0, 1)");
  validate_planner_config(c.planner);
  if (c.training.epochs < 1) throw DomainError("training.epochs must be >= 1");
  if (c.training.batch_size < 1)
    throw DomainError("training.batch_size must be >= 1");
  if (!(c.training.adam.lr > 0.0))
    throw DomainError("training.learning_rate must be positive");
  if (!(c.training.alpha_cap >= 1.0))
    throw DomainError("training.alpha_cap must be >= 1");
  if (!(c.training.val_fraction >= 0.0 && c.training.val_fraction < 1.0))
    throw DomainError("training.val_fraction must be in [0, 1)");
  if (!(c.training.early_stop_fraction >= 0.0 &&
        c.training.early_stop_fraction <= 1.0))
    throw DomainError("training.early_stop_fraction must be in [0, 1]");
  if (c.bench.paths_per_world < 1)
    throw DomainError("bench.paths_per_world must be >= 1");
  if (!(c.bench.min_separation > 0.0))
    throw DomainError("bench.min_separation must be positive");
}

namespace detail {

using json = nlohmann::ordered_json;

inline void expect_keys(const json& obj, const std::string& section,
                        std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known)
      throw ParseError("config: unknown key '" + key + "' in " + section);
  }
}

template <class T>
void read_field(const json& obj, const char* key, T& out,
                const std::string& section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError("config: bad value for '" + section + "." + key + "'");
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  detail::json doc;
  try {
    doc = detail::json::parse(text);
  } catch (const detail::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("config: top level must be an object");

  RunConfig c;
  detail::expect_keys(doc, "config",
                      {"lidar", "imagine", "planner", "training", "bench"});
  if (doc.contains("lidar")) {
    const auto& o = doc["lidar"];
    detail::expect_keys(o, "lidar", {"beam_count", "max_range", "noise_sigma"});
    detail::read_field(o, "beam_count", c.lidar.beam_count, "lidar");
    detail::read_field(o, "max_range", c.lidar.max_range, "lidar");
    detail::read_field(o, "noise_sigma", c.lidar.noise_sigma, "lidar");
  }
  if (doc.contains("imagine")) {
    const auto& o = doc["imagine"];
    detail::expect_keys(o, "imagine", {"sigma", "theta"});
    detail::read_field(o, "sigma", c.imagine.sigma, "imagine");
    detail::read_field(o, "theta", c.imagine.theta, "imagine");
  }
  if (doc.contains("planner")) {
    const auto& o = doc["planner"];
    detail::expect_keys(
        o, "planner",
        {"v_max", "w_max", "control_period", "horizon", "v_samples",
         "w_samples", "goal_tolerance", "lookahead", "inflation_radius",
         "progress_weight", "clearance_weight", "speed_weight",
         "max_duration"});
    detail::read_field(o, "v_max", c.planner.v_max, "planner");
    detail::read_field(o, "w_max", c.planner.w_max, "planner");
    detail::read_field(o, "control_period", c.planner.control_period,
                       "planner");
    detail::read_field(o, "horizon", c.planner.horizon, "planner");
    detail::read_field(o, "v_samples", c.planner.v_samples, "planner");
    detail::read_field(o, "w_samples", c.planner.w_samples, "planner");
    detail::read_field(o, "goal_tolerance", c.planner.goal_tolerance,
                       "planner");
    detail::read_field(o, "lookahead", c.planner.lookahead, "planner");
    detail::read_field(o, "inflation_radius", c.planner.inflation_radius,
                       "planner");
    detail::read_field(o, "progress_weight", c.planner.progress_weight,
                       "planner");
    detail::read_field(o, "clearance_weight", c.planner.clearance_weight,
                       "planner");
    detail::read_field(o, "speed_weight", c.planner.speed_weight, "planner");
    detail::read_field(o, "max_duration", c.planner.max_duration, "planner");
  }
  if (doc.contains("training")) {
    const auto& o = doc["training"];
    detail::expect_keys(o, "training",
                        {"epochs", "batch_size", "learning_rate", "alpha_cap",
                         "val_fraction", "early_stop_fraction"});
    detail::read_field(o, "epochs", c.training.epochs, "training");
    detail::read_field(o, "batch_size", c.training.batch_size, "training");
    detail::read_field(o, "learning_rate", c.training.adam.lr, "training");
    detail::read_field(o, "alpha_cap", c.training.alpha_cap, "training");
    detail::read_field(o, "val_fraction", c.training.val_fraction, "training");
    detail::read_field(o, "early_stop_fraction",
                       c.training.early_stop_fraction, "training");
  }
  if (doc.contains("bench")) {
    const auto& o = doc["bench"];
    detail::expect_keys(o, "bench", {"paths_per_world", "min_separation"});
    detail::read_field(o, "paths_per_world", c.bench.paths_per_world, "bench");
    detail::read_field(o, "min_separation", c.bench.min_separation, "bench");
  }
  validate_run_config(c);
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_run_config(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// Full dump of the effective configuration, one key per tunable; feeding the
// result back through parse_run_config reproduces the same configuration.
inline nlohmann::ordered_json run_config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["lidar"] = {{"beam_count", c.lidar.beam_count},
                {"max_range", c.lidar.max_range},
                {"noise_sigma", c.lidar.noise_sigma}};
  j["imagine"] = {{"sigma", c.imagine.sigma}, {"theta", c.imagine.theta}};
  j["planner"] = {{"v_max", c.planner.v_max},
                  {"w_max", c.planner.w_max},
                  {"control_period", c.planner.control_period},
                  {"horizon", c.planner.horizon},
                  {"v_samples", c.planner.v_samples},
                  {"w_samples", c.planner.w_samples},
                  {"goal_tolerance", c.planner.goal_tolerance},
                  {"lookahead", c.planner.lookahead},
                  {"inflation_radius", c.planner.inflation_radius},
                  {"progress_weight", c.planner.progress_weight},
                  {"clearance_weight", c.planner.clearance_weight},
                  {"speed_weight", c.planner.speed_weight},
                  {"max_duration", c.planner.max_duration}};
  j["training"] = {{"epochs", c.training.epochs},
                   {"batch_size", c.training.batch_size},
                   {"learning_rate", c.training.adam.lr},
                   {"alpha_cap", c.training.alpha_cap},
                   {"val_fraction", c.training.val_fraction},
                   {"early_stop_fraction", c.training.early_stop_fraction}};
  j["bench"] = {{"paths_per_world", c.bench.paths_per_world},
                {"min_separation", c.bench.min_separation}};
  return j;
}

}  // namespace semnav
