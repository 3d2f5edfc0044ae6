#include "graspkit/materials.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "graspkit/convex_hull.hpp"
#include "graspkit/errors.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

std::string_view to_string(Fragility f) {
  switch (f) {
    case Fragility::Fragile: return "fragile";
    case Fragility::Normal: return "normal";
    case Fragility::Tough: return "tough";
  }
  return "normal";
}

Fragility fragility_from_string(std::string_view s) {
  if (s == "fragile") return Fragility::Fragile;
  if (s == "normal") return Fragility::Normal;
  if (s == "tough") return Fragility::Tough;
  throw ConfigError("unknown fragility '" + std::string(s) + "'");
}

// Densities in kg/m^3, friction against a rubberized gripper pad. Only
// plastic, brass and fiberglass are reference values; everything else is a
// handbook estimate.
const MaterialTable& builtin_materials() {
  using F = Fragility;
  static const MaterialTable table = {
      {"plastic", 1400, 0.40, F::Normal, false},
      {"brass", 8530, 0.38, F::Tough, false},
      {"fiberglass", 2020, 0.60, F::Normal, false},
      {"steel", 7850, 0.50, F::Tough, false},
      {"aluminum", 2700, 0.45, F::Tough, false},
      {"wood", 700, 0.50, F::Normal, false},
      {"glass", 2500, 0.35, F::Fragile, false},
      {"ceramic", 2400, 0.50, F::Normal, false},
      {"rubber", 1100, 1.00, F::Tough, false},
      {"copper", 8960, 0.45, F::Tough, false},
      {"leather", 860, 0.60, F::Normal, false},
      {"cardboard", 690, 0.50, F::Normal, false},
      {"granite", 2650, 0.65, F::Tough, false},
      {"titanium", 4500, 0.36, F::Tough, true},
      {"porcelain", 2400, 0.55, F::Fragile, false},
      {"foam", 100, 0.80, F::Normal, false},
  };
  return table;
}

const Material& find_material(const MaterialTable& table, std::string_view name) {
  for (const auto& m : table)
    if (m.name == name) return m;
  throw ConfigError("unknown material '" + std::string(name) + "'");
}

void validate_material(const Material& m) {
  if (!(m.density > 0.0)) throw ConfigError("material " + m.name + ": density must be > 0");
  if (!(m.friction > 0.0 && m.friction < 2.0))
    throw ConfigError("material " + m.name + ": friction must be in (0, 2)");
}

nlohmann::json to_json(const MaterialTable& table) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : table)
    arr.push_back({{"name", m.name},
                   {"density", m.density},
                   {"friction", m.friction},
                   {"fragility", std::string(to_string(m.fragility))},
                   {"uncommon", m.uncommon}});
  return arr;
}

MaterialTable material_table_from_json(const nlohmann::json& j) {
  MaterialTable table;
  try {
    for (const auto& e : j) {
      Material m;
      m.name = e.at("name").get<std::string>();
      m.density = e.at("density").get<double>();
      m.friction = e.at("friction").get<double>();
      m.fragility = fragility_from_string(e.at("fragility").get<std::string>());
      m.uncommon = e.value("uncommon", false);
      validate_material(m);
      table.push_back(m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("material table: ") + e.what());
  }
  if (table.empty()) throw ConfigError("material table is empty");
  return table;
}

std::uint64_t material_table_hash(const MaterialTable& table) {
  return fnv1a64(to_json(table).dump());
}

double PriorPolicy::prior_for(std::string_view part_name) const {
  std::string name(part_name);
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  std::optional<double> best;
  for (const auto& [kw, prior] : keywords)
    if (name.find(kw) != std::string::npos) best = best ? std::min(*best, prior) : prior;
  return best.value_or(default_prior);
}

nlohmann::json to_json(const PriorPolicy& policy) {
  return {{"keywords", policy.keywords}, {"default", policy.default_prior}};
}

PriorPolicy prior_policy_from_json(const nlohmann::json& j) {
  PriorPolicy p;
  try {
    if (j.contains("keywords")) p.keywords = j["keywords"].get<std::map<std::string, double>>();
    p.default_prior = j.value("default", p.default_prior);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("prior policy: ") + e.what());
  }
  auto check = [](double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("grasp prior outside [0, 1]");
  };
  check(p.default_prior);
  for (const auto& [k, v] : p.keywords) check(v);
  return p;
}

const PartAssignment& assignment_for(const PartAssignments& assignments, PartId part) {
  for (const auto& a : assignments)
    if (a.part == part) return a;
  throw UnassignedPart("part " + std::to_string(part) + " has no material assignment");
}

PartAssignments assign_materials(const PartMesh& mesh, std::uint64_t seed, const MaterialTable& table,
                                 const PriorPolicy& policy,
                                 const std::map<PartId, double>& prior_overrides) {
  if (table.empty()) throw ConfigError("material table is empty");
  Rng rng(derive_seed(seed, "materials"));
  PartAssignments out;
  for (const auto& [part, name] : mesh.part_names) {
    PartAssignment a;
    a.part = part;
    a.material = table[rng.below(table.size())];
    auto it = prior_overrides.find(part);
    a.grasp_prior = it != prior_overrides.end() ? it->second : policy.prior_for(name);
    out.push_back(std::move(a));
  }
  return out;
}

MassProperties mass_properties(const PartMesh& mesh, const PartAssignments& assignments,
                               OpenShellPolicy policy) {
  MassProperties props;
  Vec3 moment = Vec3::Zero();
  for (PartId part : mesh.part_ids()) {
    const auto faces = mesh.faces_of_part(part);
    double volume = 0.0;
    Vec3 first_moment = Vec3::Zero();
    for (auto f : faces) {
      const auto& tri = mesh.faces[f];
      const Vec3& a = mesh.vertices[tri[0]];
      const Vec3& b = mesh.vertices[tri[1]];
      const Vec3& c = mesh.vertices[tri[2]];
      const double v = a.dot(b.cross(c)) / 6.0;
      volume += v;
      first_moment += v * (a + b + c) / 4.0;
    }
    Vec3 centroid = std::abs(volume) > 0.0 ? Vec3(first_moment / volume) : Vec3::Zero();

    const bool degenerate = std::abs(volume) < 1e-12;
    const bool open = !part_is_closed(mesh, part);
    if (policy == OpenShellPolicy::ConvexHullFallback && (degenerate || open)) {
      std::vector<Vec3> pts;
      for (auto f : faces)
        for (auto idx : mesh.faces[f]) pts.push_back(mesh.vertices[idx]);
      const auto hull = convex_hull_volume(pts);
      volume = hull.volume;
      centroid = hull.centroid;
      props.hull_fallback_parts.push_back(part);
    }
    if (std::abs(volume) < 1e-12)
      throw DegenerateVolume("part '" + mesh.part_names.at(part) + "' encloses no volume");

    const double m = assignment_for(assignments, part).material.density * std::abs(volume);
    props.per_part_volume[part] = std::abs(volume);
    props.per_part_mass[part] = m;
    props.mass += m;
    moment += m * centroid;
  }
  props.com = moment / props.mass;
  return props;
}

double ContactConfig::cap_for(Fragility f) const {
  switch (f) {
    case Fragility::Fragile: return fragile_cap * force_scale;
    case Fragility::Normal: return normal_cap * force_scale;
    case Fragility::Tough: return tough_cap * force_scale;
  }
  return normal_cap * force_scale;
}

ContactModel contact_model_at(const SurfaceSample& sample, const PartAssignments& assignments,
                              const ContactConfig& config) {
  const auto& a = assignment_for(assignments, sample.part);
  return {a.material.friction, config.cap_for(a.material.fragility), config.cone_edges};
}

}  // namespace graspkit
