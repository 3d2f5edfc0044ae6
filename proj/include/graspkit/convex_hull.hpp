#pragma once

#include <vector>

#include "graspkit/mesh.hpp"

namespace graspkit {

struct HullVolume {
  double volume = 0.0;
  Vec3 centroid = Vec3::Zero();
};

/// Volume and centroid of the convex hull of `points` (incremental hull).
/// Coplanar or fewer than four distinct points give zero volume.
HullVolume convex_hull_volume(const std::vector<Vec3>& points);

}  // namespace graspkit
