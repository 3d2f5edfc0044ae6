#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graspkit/affordance.hpp"
#include "graspkit/config.hpp"
#include "graspkit/language.hpp"

namespace graspkit {

constexpr int kSchemaVersion = 1;

/// Per-part physical table stored with each record.
struct PartRecord {
  PartId id = 0;
  std::string name;
  Material material;
  double grasp_prior = 0.0;
  double force_cap = 0.0;
  double volume = 0.0;
  double mass = 0.0;
  bool hull_fallback = false;

  friend bool operator==(const PartRecord&, const PartRecord&) = default;
};

/// Exact positive grasp contacts, aligned with DatasetRecord::positive_pairs.
struct StoredGrasp {
  std::array<Vec3, 2> position;
  std::array<Vec3, 2> normal;
  std::array<PartId, 2> part{};
  double min_force = 0.0;

  friend bool operator==(const StoredGrasp&, const StoredGrasp&) = default;
};

struct DatasetRecord {
  int schema_version = kSchemaVersion;
  std::string instance_id;
  std::string object_id;
  std::string mesh_ref;
  std::uint64_t seed = 0;           // per-instance seed
  std::uint64_t material_seed = 0;  // seed of the accepted attempt
  int attempt = 0;

  // Point cloud. Coordinates are rounded to float32 at generation so the
  // stored blob reproduces them exactly.
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<PartId> point_part;

  Eigen::VectorXd prob;
  double sigma = 0.0;
  std::vector<IndexPair> positive_pairs;
  std::vector<IndexPair> negative_pairs;
  std::vector<StoredGrasp> positive_grasps;

  std::vector<PartRecord> parts;
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  ContactConfig contact;
  LabelPolicy label;
  bool quality_weighting = false;

  LanguageConfig language;
  std::string summary;
  std::vector<Emphasis> emphasized;
  HardSetVerdict hard;

  std::string material_table_hash;
  std::string config_hash;
  /// Object-to-record transform; identity (native scale, canonical pose).
  Eigen::Matrix4d transform = Eigen::Matrix4d::Identity();

  bool watertight = false;
  std::vector<PartId> reoriented_parts;
  std::size_t candidate_count = 0;
  std::size_t same_surface_added = 0;
  std::size_t dropped_pairs = 0;
};

bool operator==(const DatasetRecord& a, const DatasetRecord& b);

/// Forced material/prior choices, for controlled comparisons.
struct InstanceOverrides {
  std::map<PartId, Material> materials;
  std::map<PartId, double> priors;
};

struct GeneratedInstance {
  InstanceSpec spec;
  DatasetRecord record;
};

/// assign -> mass -> candidates -> labels -> snap -> affordance -> summary ->
/// hard set. Attempts with no usable positive are retried with a fresh
/// material seed up to config.max_retries times, then NoPositiveGrasps.
GeneratedInstance generate_instance(std::shared_ptr<const PartMesh> mesh, const std::string& object_id,
                                    const std::string& mesh_ref, const std::string& instance_id,
                                    std::uint64_t seed, const Config& config,
                                    const InstanceOverrides& overrides = {});

/// `object_id-0003` style ids.
std::string make_instance_id(const std::string& object_id, int index);

struct ObjectMesh {
  std::string object_id;
  std::string mesh_ref;
  std::shared_ptr<const PartMesh> mesh;
};

struct GenerationFailure {
  std::string instance_id;
  std::string message;
};

struct GenerationResult {
  std::vector<DatasetRecord> records;  // in (object, index) order
  std::vector<GenerationFailure> failures;
};

/// Generates config.instances_per_object instances per mesh on
/// config.workers threads. Seeds are derive_seed(config.seed, instance_id),
/// so the output does not depend on the worker count.
GenerationResult generate_dataset(const std::vector<ObjectMesh>& objects, const Config& config);

/// Loads every mesh listed in config.meshes.
std::vector<ObjectMesh> load_config_meshes(const Config& config);

struct DatasetSplit {
  std::vector<std::string> train, val, test, hard;
};

/// Seeded shuffle then partition by rounded fractions; the test split takes
/// the remainder. `hard` lists test ids whose record is flagged hard.
DatasetSplit split_dataset(const std::vector<DatasetRecord>& records, const std::array<double, 3>& fractions,
                           std::uint64_t seed);

nlohmann::json to_json(const DatasetSplit& split);

/// Index line for one record (without blob payloads).
nlohmann::json index_entry(const DatasetRecord& record);

/// dir/index.jsonl plus dir/blobs/<instance_id>.bin.
void write_records(const std::filesystem::path& dir, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_records(const std::filesystem::path& dir);

/// Index lines in file order.
std::vector<nlohmann::json> read_index(const std::filesystem::path& dir);
/// One record from its index line and blob. Throws IoError or
/// SchemaVersionMismatch for damaged files.
DatasetRecord read_record(const std::filesystem::path& dir, const nlohmann::json& entry);

std::vector<std::uint8_t> encode_blob(const DatasetRecord& record);
void decode_blob(const std::vector<std::uint8_t>& bytes, DatasetRecord& record);

/// Instance view of a record: part table as assignments, mass properties and
/// a label-only mesh.
InstanceSpec instance_from_record(const DatasetRecord& record);

struct VerifyOptions {
  bool check_language = true;
};

/// Re-checks every invariant of a record: shapes, index ranges, pair
/// disjointness, normalization, the affordance against a direct recompute
/// (max abs diff 1e-12), positive pair force closure, and the summary.
/// Returns problems found; empty means the record is valid.
std::vector<std::string> verify_record(const DatasetRecord& record, const VerifyOptions& options = {});

/// Standalone summary text file export.
void write_summary(const std::filesystem::path& path, const DatasetRecord& record);

}  // namespace graspkit
