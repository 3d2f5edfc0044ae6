#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "graspkit/bridge.hpp"
#include "graspkit/grasp.hpp"
#include "graspkit/language.hpp"
#include "graspkit/materials.hpp"
#include "graspkit/metrics.hpp"

namespace graspkit {

struct MeshEntry {
  std::string object_id;
  std::string mesh;   // OBJ or PLY path, relative to the config file
  std::string parts;  // part-annotation JSON path
};

struct TrainConfig {
  int instances = 10;
  int steps = 2000;
  double lr = 0.05;
  int points_per_instance = 128;
  int max_pairs = 16;  // per sign, per instance
};

/// Every tunable default in one place. `info --defaults` prints to_json(Config{}).
struct Config {
  std::uint64_t seed = 0;
  std::size_t num_points = 2048;
  int instances_per_object = 10;
  int max_retries = 5;
  double sigma_fraction = 0.05;
  bool quality_weighting = false;
  int workers = 1;
  std::array<double, 3> split = {0.8, 0.1, 0.1};
  double auc_threshold = -1.0;  // < 0 selects 1/n

  MaterialTable materials = builtin_materials();
  PriorPolicy priors;
  ContactConfig contact;
  CandidateConfig candidates;
  LabelPolicy label;
  LanguageConfig language;
  HardSetConfig hard;
  OpenShellPolicy open_shell = OpenShellPolicy::ConvexHullFallback;
  GripperConfig gripper;
  LossConfig loss;
  TrainConfig train;
  std::vector<MeshEntry> meshes;
};

nlohmann::json to_json(const Config& config);

/// Missing keys keep their defaults; unknown keys throw ConfigError.
Config config_from_json(const nlohmann::json& j);

/// TOML subset: tables, arrays of tables, strings, numbers, booleans and
/// (nested) arrays. Throws ConfigError on anything else.
nlohmann::json parse_toml(const std::string& text);

/// Reads .toml, or JSON for any other extension. Relative mesh paths are
/// resolved against the config file's directory.
Config load_config(const std::filesystem::path& path);

/// Applies `key.path=value` overrides; values are parsed as JSON when
/// possible, else taken as strings.
Config apply_overrides(const Config& config, const std::vector<std::string>& overrides);

/// FNV-1a over the canonical JSON of every field that affects records
/// (worker count and mesh list excluded), as 16 hex digits.
std::string config_hash(const Config& config);

std::string hex64(std::uint64_t v);

}  // namespace graspkit
