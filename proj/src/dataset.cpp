#include "graspkit/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "graspkit/errors.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

namespace {

// The volatile store keeps GCC 11's SLP vectorizer from folding the
// double->float->double pair away at -O3.
Vec3 round_to_float(const Vec3& v) {
  Vec3 out;
  for (int k = 0; k < 3; ++k) {
    volatile float f = static_cast<float>(v(k));
    out(k) = f;
  }
  return out;
}

double prior_of(const std::vector<PartRecord>& parts, PartId id) {
  for (const auto& p : parts)
    if (p.id == id) return p.grasp_prior;
  throw UnassignedPart("part " + std::to_string(id) + " missing from the part table");
}

double contact_weight(double prior, double min_force, double mass, double gravity, bool quality) {
  return quality ? prior / (1.0 + min_force / (mass * gravity)) : prior;
}

bool same_policy(const LabelPolicy& a, const LabelPolicy& b) {
  if (a.gravity != b.gravity || a.prior_threshold != b.prior_threshold || a.negative_ratio != b.negative_ratio ||
      a.same_surface_angle_deg != b.same_surface_angle_deg || a.disturbances.size() != b.disturbances.size())
    return false;
  for (std::size_t i = 0; i < a.disturbances.size(); ++i)
    if (a.disturbances[i] != b.disturbances[i]) return false;
  return true;
}

}  // namespace

bool operator==(const DatasetRecord& a, const DatasetRecord& b) {
  const auto& ca = a.contact;
  const auto& cb = b.contact;
  const auto& la = a.language;
  const auto& lb = b.language;
  return a.schema_version == b.schema_version && a.instance_id == b.instance_id && a.object_id == b.object_id &&
         a.mesh_ref == b.mesh_ref && a.seed == b.seed && a.material_seed == b.material_seed &&
         a.attempt == b.attempt && a.points == b.points && a.normals == b.normals &&
         a.point_part == b.point_part && a.prob.size() == b.prob.size() && a.prob == b.prob &&
         a.sigma == b.sigma && a.positive_pairs == b.positive_pairs && a.negative_pairs == b.negative_pairs &&
         a.positive_grasps == b.positive_grasps && a.parts == b.parts && a.mass == b.mass && a.com == b.com &&
         ca.fragile_cap == cb.fragile_cap && ca.normal_cap == cb.normal_cap && ca.tough_cap == cb.tough_cap &&
         ca.force_scale == cb.force_scale && ca.cone_edges == cb.cone_edges && same_policy(a.label, b.label) &&
         a.quality_weighting == b.quality_weighting && la.density_ratio == lb.density_ratio &&
         la.friction_gap == lb.friction_gap && la.avoid_prior == lb.avoid_prior &&
         la.prefer_prior == lb.prefer_prior && a.summary == b.summary && a.emphasized == b.emphasized &&
         a.hard.is_hard == b.hard.is_hard && a.hard.score == b.hard.score &&
         a.hard.criteria_hit == b.hard.criteria_hit && a.material_table_hash == b.material_table_hash &&
         a.config_hash == b.config_hash && a.transform == b.transform && a.watertight == b.watertight &&
         a.reoriented_parts == b.reoriented_parts && a.candidate_count == b.candidate_count &&
         a.same_surface_added == b.same_surface_added && a.dropped_pairs == b.dropped_pairs;
}

std::string make_instance_id(const std::string& object_id, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "-%04d", index);
  return object_id + buf;
}

GeneratedInstance generate_instance(std::shared_ptr<const PartMesh> mesh, const std::string& object_id,
                                    const std::string& mesh_ref, const std::string& instance_id,
                                    std::uint64_t seed, const Config& config, const InstanceOverrides& overrides) {
  if (!mesh) throw EmptyInstance("no mesh for " + instance_id);
  const auto samples = sample_surface(*mesh, config.num_points, derive_seed(seed, "points"));
  std::vector<Vec3> points, normals;
  std::vector<PartId> point_part;
  for (const auto& s : samples) {
    points.push_back(round_to_float(s.position));
    normals.push_back(round_to_float(s.normal));
    point_part.push_back(s.part);
  }
  const double sigma = default_sigma(points, config.sigma_fraction);

  std::string last_reason = "no attempt made";
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    const std::uint64_t mseed = derive_seed(seed, "attempt-" + std::to_string(attempt));
    auto assignments = assign_materials(*mesh, mseed, config.materials, config.priors, overrides.priors);
    for (auto& a : assignments) {
      auto it = overrides.materials.find(a.part);
      if (it != overrides.materials.end()) a.material = it->second;
    }
    const auto mass_props = mass_properties(*mesh, assignments, config.open_shell);
    const auto candidates = generate_candidates(*mesh, assignments, mass_props, config.candidates, mseed);
    const auto labeled =
        label_candidates(candidates, mass_props, assignments, config.label, config.contact, samples, mseed);
    if (labeled.positives.empty()) {
      last_reason = "no force-closure grasp among " + std::to_string(candidates.size()) + " candidates";
      continue;
    }

    DatasetRecord rec;
    std::set<std::pair<std::uint32_t, std::uint32_t>> positive_keys;
    for (const auto& lg : labeled.positives) {
      const IndexPair p = {nearest_point(points, lg.grasp.contact1.position),
                           nearest_point(points, lg.grasp.contact2.position)};
      if (p[0] == p[1]) {
        ++rec.dropped_pairs;
        continue;
      }
      positive_keys.insert(std::minmax(p[0], p[1]));
      rec.positive_pairs.push_back(p);
      StoredGrasp g;
      g.position = {lg.grasp.contact1.position, lg.grasp.contact2.position};
      g.normal = {lg.grasp.contact1.normal, lg.grasp.contact2.normal};
      g.part = {lg.grasp.contact1.part, lg.grasp.contact2.part};
      g.min_force = lg.label.min_force;
      rec.positive_grasps.push_back(g);
    }
    if (rec.positive_pairs.empty()) {
      last_reason = "every positive pair collapsed onto one sampled point";
      continue;
    }
    for (const auto& lg : labeled.negatives) {
      const IndexPair p = {nearest_point(points, lg.grasp.contact1.position),
                           nearest_point(points, lg.grasp.contact2.position)};
      if (p[0] == p[1] || positive_keys.contains(std::minmax(p[0], p[1]))) {
        ++rec.dropped_pairs;
        continue;
      }
      rec.negative_pairs.push_back(p);
    }

    for (const auto& a : assignments) {
      PartRecord pr;
      pr.id = a.part;
      pr.name = mesh->part_names.at(a.part);
      pr.material = a.material;
      pr.grasp_prior = a.grasp_prior;
      pr.force_cap = config.contact.cap_for(a.material.fragility);
      pr.volume = mass_props.per_part_volume.at(a.part);
      pr.mass = mass_props.per_part_mass.at(a.part);
      pr.hull_fallback = std::find(mass_props.hull_fallback_parts.begin(), mass_props.hull_fallback_parts.end(),
                                   a.part) != mass_props.hull_fallback_parts.end();
      rec.parts.push_back(pr);
    }

    std::vector<WeightedContact> contacts;
    for (std::size_t k = 0; k < rec.positive_pairs.size(); ++k)
      for (int e = 0; e < 2; ++e)
        contacts.push_back({points[rec.positive_pairs[k][e]],
                            contact_weight(prior_of(rec.parts, rec.positive_grasps[k].part[e]),
                                           rec.positive_grasps[k].min_force, mass_props.mass,
                                           config.label.gravity, config.quality_weighting)});
    auto map = build_affordance(points, contacts, sigma);

    GeneratedInstance out;
    out.spec = InstanceSpec{instance_id, object_id, mesh_ref, mesh, assignments, mass_props, mseed};
    const auto summary = summarize_instance(out.spec, config.language);
    const auto hard = classify_hard(summary, out.spec, config.materials, config.hard);

    rec.instance_id = instance_id;
    rec.object_id = object_id;
    rec.mesh_ref = mesh_ref;
    rec.seed = seed;
    rec.material_seed = mseed;
    rec.attempt = attempt;
    rec.points = points;
    rec.normals = normals;
    rec.point_part = point_part;
    rec.prob = std::move(map.prob);
    rec.sigma = sigma;
    rec.mass = mass_props.mass;
    rec.com = mass_props.com;
    rec.contact = config.contact;
    rec.label = config.label;
    rec.quality_weighting = config.quality_weighting;
    rec.language = config.language;
    rec.summary = summary.text;
    rec.emphasized = summary.emphasized;
    rec.hard = hard;
    rec.material_table_hash = hex64(material_table_hash(config.materials));
    rec.config_hash = config_hash(config);
    rec.watertight = mesh->watertight;
    rec.reoriented_parts = mesh->reoriented_parts;
    rec.candidate_count = candidates.size();
    rec.same_surface_added = labeled.same_surface_added;
    out.record = std::move(rec);
    return out;
  }
  throw NoPositiveGrasps(instance_id + ": " + last_reason + " after " + std::to_string(config.max_retries + 1) +
                         " attempts");
}

GenerationResult generate_dataset(const std::vector<ObjectMesh>& objects, const Config& config) {
  struct Task {
    const ObjectMesh* object;
    std::string instance_id;
  };
  std::vector<Task> tasks;
  for (const auto& o : objects)
    for (int k = 0; k < config.instances_per_object; ++k) tasks.push_back({&o, make_instance_id(o.object_id, k)});

  std::vector<std::optional<DatasetRecord>> records(tasks.size());
  std::vector<std::optional<std::string>> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& t = tasks[i];
      try {
        records[i] = generate_instance(t.object->mesh, t.object->object_id, t.object->mesh_ref, t.instance_id,
                                       derive_seed(config.seed, t.instance_id), config)
                         .record;
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(std::max(1, config.workers));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::min(n_workers, tasks.size()); ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  GenerationResult result;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (records[i]) result.records.push_back(std::move(*records[i]));
    if (errors[i]) result.failures.push_back({tasks[i].instance_id, *errors[i]});
  }
  return result;
}

std::vector<ObjectMesh> load_config_meshes(const Config& config) {
  std::vector<ObjectMesh> out;
  std::set<std::string> seen;
  for (const auto& m : config.meshes) {
    if (!seen.insert(m.object_id).second) throw ConfigError("duplicate object_id '" + m.object_id + "'");
    out.push_back({m.object_id, m.mesh, std::make_shared<const PartMesh>(load_mesh(m.mesh, m.parts))});
  }
  return out;
}

DatasetSplit split_dataset(const std::vector<DatasetRecord>& records, const std::array<double, 3>& fractions,
                           std::uint64_t seed) {
  for (double f : fractions)
    if (!(f >= 0.0)) throw DomainError("split fractions must be nonnegative");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw DomainError("split fractions must sum to 1");

  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split"));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const auto n = records.size();
  const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(fractions[0] * double(n))));
  const auto n_val =
      std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * double(n))));

  DatasetSplit split;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = records[order[k]];
    if (k < n_train) {
      split.train.push_back(r.instance_id);
    } else if (k < n_train + n_val) {
      split.val.push_back(r.instance_id);
    } else {
      split.test.push_back(r.instance_id);
      if (r.hard.is_hard) split.hard.push_back(r.instance_id);
    }
  }
  return split;
}

nlohmann::json to_json(const DatasetSplit& split) {
  return {{"train", split.train}, {"val", split.val}, {"test", split.test}, {"hard", split.hard}};
}

InstanceSpec instance_from_record(const DatasetRecord& record) {
  auto mesh = std::make_shared<PartMesh>();
  InstanceSpec spec;
  spec.instance_id = record.instance_id;
  spec.object_id = record.object_id;
  spec.mesh_ref = record.mesh_ref;
  spec.seed = record.material_seed;
  for (const auto& p : record.parts) {
    mesh->part_names[p.id] = p.name;
    spec.assignments.push_back({p.id, p.material, p.grasp_prior});
    spec.mass_props.per_part_mass[p.id] = p.mass;
    spec.mass_props.per_part_volume[p.id] = p.volume;
    if (p.hull_fallback) spec.mass_props.hull_fallback_parts.push_back(p.id);
  }
  spec.mass_props.mass = record.mass;
  spec.mass_props.com = record.com;
  spec.mesh = std::move(mesh);
  return spec;
}

std::vector<std::string> verify_record(const DatasetRecord& r, const VerifyOptions& options) {
  std::vector<std::string> problems;
  auto fail = [&](const std::string& what) { problems.push_back(what); };

  if (r.schema_version != kSchemaVersion) fail("schema version " + std::to_string(r.schema_version));
  const std::size_t n = r.points.size();
  if (n == 0) fail("no points");
  if (r.normals.size() != n || r.point_part.size() != n || static_cast<std::size_t>(r.prob.size()) != n) {
    fail("per-point arrays differ in length");
    return problems;
  }
  if (r.positive_pairs.empty()) fail("no positive pairs");
  if (r.positive_grasps.size() != r.positive_pairs.size()) {
    fail("positive grasp table does not match positive pairs");
    return problems;
  }

  std::set<PartId> part_ids;
  for (const auto& p : r.parts) {
    if (!part_ids.insert(p.id).second) fail("duplicate part id " + std::to_string(p.id));
    if (!(p.grasp_prior >= 0.0 && p.grasp_prior <= 1.0)) fail("part " + p.name + " prior outside [0, 1]");
  }
  for (auto part : r.point_part)
    if (!part_ids.contains(part)) {
      fail("point labeled with unknown part " + std::to_string(part));
      break;
    }
  for (const auto& g : r.positive_grasps)
    for (auto part : g.part)
      if (!part_ids.contains(part)) fail("grasp contact on unknown part " + std::to_string(part));
  if (!problems.empty()) return problems;

  double part_mass = 0.0;
  for (const auto& p : r.parts) part_mass += p.mass;
  if (std::abs(part_mass - r.mass) > 1e-9 * (1.0 + r.mass)) fail("mass differs from the sum of part masses");

  std::set<std::pair<std::uint32_t, std::uint32_t>> pos_keys;
  auto check_pairs = [&](const std::vector<IndexPair>& pairs, const char* kind, bool positive) {
    for (const auto& p : pairs) {
      if (p[0] >= n || p[1] >= n) {
        fail(std::string(kind) + " pair index out of range");
        return false;
      }
      if (p[0] == p[1]) fail(std::string(kind) + " pair collapses onto one point");
      const auto key = std::minmax(p[0], p[1]);
      if (positive) {
        pos_keys.insert(key);
      } else if (pos_keys.contains(key)) {
        fail("pair appears as both positive and negative");
      }
    }
    return true;
  };
  if (!check_pairs(r.positive_pairs, "positive", true) || !check_pairs(r.negative_pairs, "negative", false))
    return problems;

  double sum = 0.0;
  for (Eigen::Index i = 0; i < r.prob.size(); ++i) {
    if (!(r.prob(i) >= 0.0) || !std::isfinite(r.prob(i))) {
      fail("negative or non-finite probability");
      break;
    }
    sum += r.prob(i);
  }
  if (std::abs(sum - 1.0) > 1e-9) fail("probabilities sum to " + std::to_string(sum));
  if (!(r.sigma > 0.0)) fail("bandwidth must be > 0");

  // Direct recompute of the Gaussian mixture.
  if (problems.empty()) {
    std::vector<double> mass(n, 0.0);
    for (std::size_t k = 0; k < r.positive_pairs.size(); ++k)
      for (int e = 0; e < 2; ++e) {
        const Vec3& c = r.points[r.positive_pairs[k][e]];
        const double w = contact_weight(prior_of(r.parts, r.positive_grasps[k].part[e]),
                                        r.positive_grasps[k].min_force, r.mass, r.label.gravity,
                                        r.quality_weighting);
        for (std::size_t i = 0; i < n; ++i)
          mass[i] += w * std::exp(-(r.points[i] - c).squaredNorm() / (2.0 * r.sigma * r.sigma));
      }
    double total = 0.0;
    for (double m : mass) total += m;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(mass[i] / total - r.prob(static_cast<Eigen::Index>(i))));
    if (!(worst <= 1e-12)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3g", worst);
      fail(std::string("affordance differs from recompute by ") + buf);
    }
  }

  for (const auto& p : r.parts)
    if (p.force_cap != r.contact.cap_for(p.material.fragility))
      fail("part " + p.name + " force cap disagrees with its fragility");

  const auto spec = instance_from_record(r);
  for (std::size_t k = 0; k < r.positive_grasps.size(); ++k) {
    const auto& g = r.positive_grasps[k];
    GraspCandidate c;
    c.contact1 = {g.position[0], g.normal[0], g.part[0], 0};
    c.contact2 = {g.position[1], g.normal[1], g.part[1], 0};
    c.width = (g.position[1] - g.position[0]).norm();
    const auto label = check_grasp(c, spec.mass_props, spec.assignments, r.contact, r.label);
    if (!label.feasible) fail("positive pair " + std::to_string(k) + " is not force closure");
    if (!(prior_of(r.parts, g.part[0]) > r.label.prior_threshold &&
          prior_of(r.parts, g.part[1]) > r.label.prior_threshold))
      fail("positive pair " + std::to_string(k) + " touches a low-prior part");
  }

  if (options.check_language) {
    const auto msg = check_summary({r.summary, r.emphasized}, spec, r.language);
    if (!msg.empty()) fail("summary: " + msg);
  }
  int score = 0;
  for (bool b : r.hard.criteria_hit) score += b;
  if (score != r.hard.score) fail("hard-set score does not match its criteria");
  return problems;
}

void write_summary(const std::filesystem::path& path, const DatasetRecord& record) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << record.summary << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace graspkit
