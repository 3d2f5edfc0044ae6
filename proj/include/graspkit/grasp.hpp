#pragma once

#include <cstdint>
#include <vector>

#include "graspkit/force_closure.hpp"
#include "graspkit/materials.hpp"
#include "graspkit/mesh.hpp"

namespace graspkit {

/// Two-contact parallel grasp.
struct GraspCandidate {
  SurfaceSample contact1;
  SurfaceSample contact2;
  double width = 0.0;
};

enum class RayMode {
  /// Lines through a random point of the vertical line through the CoM.
  /// Two point contacts cannot resist torque about their own axis, so only
  /// such lines can hold the object against gravity alone.
  ComVertical,
  /// Lines through a uniform random point of the bounding ball.
  BoundingBall,
};

struct CandidateConfig {
  int n_rays = 256;
  double max_width = 0.10;       // m
  double antipodal_margin = 0.0;  // rad, added to atan(mu)
  RayMode ray_mode = RayMode::ComVertical;
};

/// Candidates from one line: entering/exiting boundary pairs of the part
/// union, gated by width and the widened friction-cone angle.
std::vector<GraspCandidate> candidates_from_ray(const PartMesh& mesh, const PartAssignments& assignments,
                                                const Vec3& origin, const Vec3& direction,
                                                const CandidateConfig& config);

std::vector<GraspCandidate> generate_candidates(const PartMesh& mesh, const PartAssignments& assignments,
                                                const MassProperties& mass_props,
                                                const CandidateConfig& config, std::uint64_t seed);

GraspMatrix grasp_matrix(const GraspCandidate& candidate, const MassProperties& mass_props);

WrenchTask gravity_task(double mass, double g);

struct LabelPolicy {
  double gravity = 9.81;
  double prior_threshold = 0.5;
  double negative_ratio = 1.0;
  double same_surface_angle_deg = 30.0;
  /// Extra wrenches applied on top of gravity; every one must be resisted.
  std::vector<Wrench<double>> disturbances;
};

/// Force-closure verdict against gravity plus every disturbance in `policy`.
/// `force_limit`, when positive, clamps each contact's cap (gripper limit).
GraspLabel check_grasp(const GraspCandidate& candidate, const MassProperties& mass_props,
                       const PartAssignments& assignments, const ContactConfig& contact,
                       const LabelPolicy& policy, double force_limit = 0.0);

struct LabeledGrasp {
  GraspCandidate grasp;
  GraspLabel label;
  bool same_surface = false;  // augmentation negative, not a ray candidate
};

struct LabeledSet {
  std::vector<LabeledGrasp> positives;
  std::vector<LabeledGrasp> negatives;
  std::size_t same_surface_added = 0;
};

/// Positives are feasible grasps whose contacts both have prior above the
/// threshold. Negatives are the remaining candidates, subsampled or padded
/// with same-surface pairs from `pool` to round(ratio * positives).
LabeledSet label_candidates(const std::vector<GraspCandidate>& candidates,
                            const MassProperties& mass_props, const PartAssignments& assignments,
                            const LabelPolicy& policy, const ContactConfig& contact,
                            const std::vector<SurfaceSample>& pool, std::uint64_t seed);

/// Both outward normals within `angle_deg` of each other.
bool same_surface(const Vec3& n1, const Vec3& n2, double angle_deg = 30.0);

}  // namespace graspkit
