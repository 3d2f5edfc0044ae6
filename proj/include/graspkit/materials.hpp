#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "graspkit/mesh.hpp"

namespace graspkit {

enum class Fragility { Fragile, Normal, Tough };

std::string_view to_string(Fragility f);
Fragility fragility_from_string(std::string_view s);

struct Material {
  std::string name;
  double density = 0.0;   // kg/m^3
  double friction = 0.0;  // Coulomb mu against the gripper pad
  Fragility fragility = Fragility::Normal;
  bool uncommon = false;  // rarity partition used by the hard-set rules

  friend bool operator==(const Material&, const Material&) = default;
};

using MaterialTable = std::vector<Material>;

/// The 16 stock materials. plastic, brass and fiberglass carry the reference
/// values; the rest are handbook figures (src/materials.cpp) and are config.
const MaterialTable& builtin_materials();
const Material& find_material(const MaterialTable& table, std::string_view name);
void validate_material(const Material& m);

nlohmann::json to_json(const MaterialTable& table);
MaterialTable material_table_from_json(const nlohmann::json& j);
std::uint64_t material_table_hash(const MaterialTable& table);

/// Keyword -> grasp prior. A part name matching several keywords takes the
/// lowest of their priors.
struct PriorPolicy {
  std::map<std::string, double> keywords = {{"blade", 0.05}, {"screen", 0.05}, {"lens", 0.05},
                                            {"handle", 1.0}, {"base", 1.0},    {"frame", 1.0}};
  double default_prior = 0.7;

  double prior_for(std::string_view part_name) const;
};

nlohmann::json to_json(const PriorPolicy& policy);
PriorPolicy prior_policy_from_json(const nlohmann::json& j);

struct PartAssignment {
  PartId part = 0;
  Material material;
  double grasp_prior = 0.0;

  friend bool operator==(const PartAssignment&, const PartAssignment&) = default;
};

using PartAssignments = std::vector<PartAssignment>;

const PartAssignment& assignment_for(const PartAssignments& assignments, PartId part);

/// One uniformly drawn material per part (parts in ascending id order), priors
/// from `policy` unless `prior_overrides` names the part.
PartAssignments assign_materials(const PartMesh& mesh, std::uint64_t seed, const MaterialTable& table,
                                 const PriorPolicy& policy = {},
                                 const std::map<PartId, double>& prior_overrides = {});

enum class OpenShellPolicy {
  Strict,             // DegenerateVolume for any part with |signed volume| < 1e-12
  ConvexHullFallback  // open or degenerate parts use their convex hull
};

struct MassProperties {
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  std::map<PartId, double> per_part_mass;
  std::map<PartId, double> per_part_volume;
  std::vector<PartId> hull_fallback_parts;
};

MassProperties mass_properties(const PartMesh& mesh, const PartAssignments& assignments,
                               OpenShellPolicy policy = OpenShellPolicy::ConvexHullFallback);

struct ContactModel {
  double mu = 0.5;
  double force_cap = 100.0;  // max normal force, N
  int cone_edges = 8;
};

struct ContactConfig {
  double fragile_cap = 20.0;
  double normal_cap = 100.0;
  double tough_cap = 1000.0;
  double force_scale = 1.0;
  int cone_edges = 8;

  double cap_for(Fragility f) const;
};

ContactModel contact_model_at(const SurfaceSample& sample, const PartAssignments& assignments,
                              const ContactConfig& config = {});

/// One object instance: a mesh plus its sampled physical properties.
struct InstanceSpec {
  std::string instance_id;
  std::string object_id;
  std::string mesh_ref;
  std::shared_ptr<const PartMesh> mesh;
  PartAssignments assignments;
  MassProperties mass_props;
  std::uint64_t seed = 0;
};

}  // namespace graspkit
