#include "graspkit/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "graspkit/rng.hpp"

namespace graspkit {

namespace {

SurfaceSample sample_from_hit(const PartMesh& mesh, const RayHit& hit) {
  return {hit.point, mesh.face_normal(hit.face), mesh.face_part[hit.face], hit.face};
}

double angle_between(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0));
}

Vec3 random_unit(Rng& rng) {
  Vec3 v(rng.normal(), rng.normal(), rng.normal());
  while (v.norm() < 1e-12) v = Vec3(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

}  // namespace

std::vector<GraspCandidate> candidates_from_ray(const PartMesh& mesh, const PartAssignments& assignments,
                                                const Vec3& origin, const Vec3& direction,
                                                const CandidateConfig& config) {
  auto hits = cast_ray(mesh, origin, direction);

  // Walk the union boundary: coincident hits are processed entering-first so
  // touching parts do not expose their shared interface.
  std::stable_sort(hits.begin(), hits.end(), [](const RayHit& a, const RayHit& b) {
    if (std::abs(a.t - b.t) > 1e-9) return a.t < b.t;
    return a.entering && !b.entering;
  });
  std::vector<RayHit> boundary;
  int depth = 0;
  for (const auto& h : hits) {
    if (h.entering) {
      if (depth++ == 0) boundary.push_back(h);
    } else if (depth > 0) {
      if (--depth == 0) boundary.push_back(h);
    }
  }

  std::vector<GraspCandidate> out;
  for (std::size_t k = 0; k + 1 < boundary.size(); ++k) {
    if (!boundary[k].entering || boundary[k + 1].entering) continue;
    GraspCandidate c;
    c.contact1 = sample_from_hit(mesh, boundary[k]);
    c.contact2 = sample_from_hit(mesh, boundary[k + 1]);
    c.width = (c.contact2.position - c.contact1.position).norm();
    if (!(c.width > 0.0) || c.width > config.max_width) continue;
    const double mu1 = assignment_for(assignments, c.contact1.part).material.friction;
    const double mu2 = assignment_for(assignments, c.contact2.part).material.friction;
    const Vec3 axis = (c.contact2.position - c.contact1.position).normalized();
    if (angle_between(-c.contact1.normal, axis) > std::atan(mu1) + config.antipodal_margin) continue;
    if (angle_between(-c.contact2.normal, -axis) > std::atan(mu2) + config.antipodal_margin) continue;
    out.push_back(c);
  }
  return out;
}

std::vector<GraspCandidate> generate_candidates(const PartMesh& mesh, const PartAssignments& assignments,
                                                const MassProperties& mass_props,
                                                const CandidateConfig& config, std::uint64_t seed) {
  const auto box = mesh.bounds();
  const Vec3 center = box.center();
  const double radius = std::max(0.5 * box.diagonal().norm(), 1e-9);
  Rng rng(derive_seed(seed, "rays"));

  std::vector<GraspCandidate> out;
  for (int r = 0; r < config.n_rays; ++r) {
    Vec3 through;
    if (config.ray_mode == RayMode::ComVertical) {
      const double dxy = (mass_props.com - center).head<2>().norm();
      const double half = std::sqrt(std::max(radius * radius - dxy * dxy, 0.0));
      through = Vec3(mass_props.com.x(), mass_props.com.y(), center.z() + rng.uniform(-half, half));
    } else {
      do {
        through = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      } while (through.squaredNorm() > 1.0);
      through = center + radius * through;
    }
    const Vec3 dir = random_unit(rng);
    const Vec3 origin = through - 3.0 * radius * dir;
    auto cands = candidates_from_ray(mesh, assignments, origin, dir, config);
    out.insert(out.end(), cands.begin(), cands.end());
  }
  return out;
}

GraspMatrix grasp_matrix(const GraspCandidate& candidate, const MassProperties& mass_props) {
  return grasp_matrix<double>(candidate.contact1.position, candidate.contact2.position, mass_props.com);
}

WrenchTask gravity_task(double mass, double g) {
  WrenchTask task;
  task.f_ext << 0.0, 0.0, -mass * g, 0.0, 0.0, 0.0;
  return task;
}

GraspLabel check_grasp(const GraspCandidate& candidate, const MassProperties& mass_props,
                       const PartAssignments& assignments, const ContactConfig& contact,
                       const LabelPolicy& policy, double force_limit) {
  std::array<ContactModel, 2> models = {contact_model_at(candidate.contact1, assignments, contact),
                                        contact_model_at(candidate.contact2, assignments, contact)};
  if (force_limit > 0.0)
    for (auto& m : models) m.force_cap = std::min(m.force_cap, force_limit);
  const auto G = grasp_matrix(candidate, mass_props);
  const std::array<Vec3, 2> normals = {candidate.contact1.normal, candidate.contact2.normal};

  const WrenchTask gravity = gravity_task(mass_props.mass, policy.gravity);
  GraspLabel label = check_force_closure<double>(G, gravity, models, normals);
  for (const auto& d : policy.disturbances) {
    if (!label.feasible) break;
    WrenchTask task = gravity;
    task.f_ext += d;
    const auto extra = check_force_closure<double>(G, task, models, normals);
    if (!extra.feasible) {
      label.feasible = false;
      label.slack = extra.slack;
    }
  }
  return label;
}

bool same_surface(const Vec3& n1, const Vec3& n2, double angle_deg) {
  return n1.normalized().dot(n2.normalized()) >= std::cos(angle_deg * std::numbers::pi / 180.0);
}

LabeledSet label_candidates(const std::vector<GraspCandidate>& candidates,
                            const MassProperties& mass_props, const PartAssignments& assignments,
                            const LabelPolicy& policy, const ContactConfig& contact,
                            const std::vector<SurfaceSample>& pool, std::uint64_t seed) {
  LabeledSet out;
  std::vector<LabeledGrasp> failed;
  for (const auto& c : candidates) {
    LabeledGrasp lg{c, check_grasp(c, mass_props, assignments, contact, policy), false};
    const bool prior_ok =
        assignment_for(assignments, c.contact1.part).grasp_prior > policy.prior_threshold &&
        assignment_for(assignments, c.contact2.part).grasp_prior > policy.prior_threshold;
    (lg.label.feasible && prior_ok ? out.positives : failed).push_back(lg);
  }

  const auto target =
      static_cast<std::size_t>(std::llround(policy.negative_ratio * static_cast<double>(out.positives.size())));
  Rng rng(derive_seed(seed, "negatives"));
  if (failed.size() > target) {
    // Partial Fisher-Yates picks `target` indices, then restore input order.
    std::vector<std::size_t> idx(failed.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < target; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    idx.resize(target);
    std::sort(idx.begin(), idx.end());
    for (auto i : idx) out.negatives.push_back(failed[i]);
  } else {
    out.negatives = std::move(failed);
  }

  const std::size_t max_attempts = 1000 * (target + 1);
  for (std::size_t attempt = 0; out.negatives.size() < target && pool.size() >= 2 && attempt < max_attempts;
       ++attempt) {
    const auto& a = pool[rng.below(pool.size())];
    const auto& b = pool[rng.below(pool.size())];
    const double width = (a.position - b.position).norm();
    if (width <= 1e-6 || !same_surface(a.normal, b.normal, policy.same_surface_angle_deg)) continue;
    LabeledGrasp lg;
    lg.grasp = {a, b, width};
    lg.same_surface = true;
    out.negatives.push_back(lg);
    ++out.same_surface_added;
  }
  return out;
}

}  // namespace graspkit
