#pragma once

#include <array>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "graspkit/mesh.hpp"

namespace graspkit {

/// Per-point grasp probability over a sampled cloud.
struct AffordanceMap {
  std::vector<Vec3> points;
  Eigen::VectorXd prob;
  double sigma = 0.0;
};

/// A grasp contact location with its mixture weight.
struct WeightedContact {
  Vec3 position;
  double weight = 1.0;
};

using IndexPair = std::array<std::uint32_t, 2>;

struct PairLabelSet {
  std::vector<IndexPair> positive_pairs;
  std::vector<IndexPair> negative_pairs;
  std::size_t dropped = 0;  // pairs whose contacts collapsed onto one point
};

/// prob_i proportional to sum_k w_k exp(-|p_i - c_k|^2 / (2 sigma^2)), normalized.
/// Throws NoPositiveGrasps without a positively weighted contact, DomainError
/// for sigma <= 0.
AffordanceMap build_affordance(const std::vector<Vec3>& points, const std::vector<WeightedContact>& contacts,
                               double sigma);

/// Default bandwidth: 5% of the bounding-box diagonal of `points`.
double default_sigma(const std::vector<Vec3>& points, double fraction = 0.05);

/// Index of the point nearest to `q` (lowest index on ties).
std::uint32_t nearest_point(const std::vector<Vec3>& points, const Vec3& q);

/// Snaps each contact to its nearest point; drops pairs that collapse and
/// negatives that duplicate a positive.
PairLabelSet snap_pairs(const std::vector<Vec3>& points,
                        const std::vector<std::pair<Vec3, Vec3>>& positives,
                        const std::vector<std::pair<Vec3, Vec3>>& negatives);

/// Piecewise-linear blue -> cyan -> green -> yellow -> red ramp over [0, 1].
std::array<std::uint8_t, 3> affordance_color(double value);

/// ASCII PLY point cloud with per-vertex RGB; colors use prob / max(prob).
void write_colored_ply(const std::filesystem::path& path, const std::vector<Vec3>& points,
                       const Eigen::VectorXd& prob);

}  // namespace graspkit
