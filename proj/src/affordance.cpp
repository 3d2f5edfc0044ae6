#include "graspkit/affordance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "graspkit/errors.hpp"

namespace graspkit {

AffordanceMap build_affordance(const std::vector<Vec3>& points, const std::vector<WeightedContact>& contacts,
                               double sigma) {
  if (!(sigma > 0.0)) throw DomainError("affordance bandwidth must be > 0");
  double total_weight = 0.0;
  for (const auto& c : contacts) {
    if (c.weight < 0.0) throw DomainError("negative contact weight");
    total_weight += c.weight;
  }
  if (contacts.empty() || !(total_weight > 0.0))
    throw NoPositiveGrasps("affordance needs at least one positively weighted contact");

  AffordanceMap map;
  map.points = points;
  map.sigma = sigma;
  map.prob = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(points.size()));
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double acc = 0.0;
    for (const auto& c : contacts) acc += c.weight * std::exp(-(points[i] - c.position).squaredNorm() * inv);
    map.prob(static_cast<Eigen::Index>(i)) = acc;
  }
  const double sum = map.prob.sum();
  if (!(sum > 0.0))
    throw NoPositiveGrasps("affordance mass underflowed; contacts are far from every point");
  map.prob /= sum;
  return map;
}

double default_sigma(const std::vector<Vec3>& points, double fraction) {
  Eigen::AlignedBox3d box;
  for (const auto& p : points) box.extend(p);
  return fraction * box.diagonal().norm();
}

std::uint32_t nearest_point(const std::vector<Vec3>& points, const Vec3& q) {
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = (points[i] - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(i);
    }
  }
  return best;
}

PairLabelSet snap_pairs(const std::vector<Vec3>& points,
                        const std::vector<std::pair<Vec3, Vec3>>& positives,
                        const std::vector<std::pair<Vec3, Vec3>>& negatives) {
  PairLabelSet out;
  std::set<std::pair<std::uint32_t, std::uint32_t>> positive_keys;
  auto key = [](const IndexPair& p) { return std::minmax(p[0], p[1]); };
  for (const auto& [a, b] : positives) {
    IndexPair p = {nearest_point(points, a), nearest_point(points, b)};
    if (p[0] == p[1]) {
      ++out.dropped;
      continue;
    }
    positive_keys.insert(key(p));
    out.positive_pairs.push_back(p);
  }
  for (const auto& [a, b] : negatives) {
    IndexPair p = {nearest_point(points, a), nearest_point(points, b)};
    if (p[0] == p[1] || positive_keys.contains(key(p))) {
      ++out.dropped;
      continue;
    }
    out.negative_pairs.push_back(p);
  }
  return out;
}

std::array<std::uint8_t, 3> affordance_color(double value) {
  static const std::array<std::array<double, 3>, 5> stops = {{
      {0.0, 0.0, 1.0}, {0.0, 1.0, 1.0}, {0.0, 1.0, 0.0}, {1.0, 1.0, 0.0}, {1.0, 0.0, 0.0}}};
  const double v = std::clamp(std::isfinite(value) ? value : 0.0, 0.0, 1.0) * 4.0;
  const auto k = std::min(static_cast<std::size_t>(v), std::size_t{3});
  const double f = v - static_cast<double>(k);
  std::array<std::uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<std::uint8_t>(std::lround(255.0 * ((1.0 - f) * stops[k][c] + f * stops[k + 1][c])));
  return rgb;
}

void write_colored_ply(const std::filesystem::path& path, const std::vector<Vec3>& points,
                       const Eigen::VectorXd& prob) {
  if (static_cast<std::size_t>(prob.size()) != points.size())
    throw ShapeMismatch("prob and points differ in length");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  const double peak = prob.size() > 0 ? prob.maxCoeff() : 0.0;
  out.precision(9);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto rgb = affordance_color(peak > 0.0 ? prob(static_cast<Eigen::Index>(i)) / peak : 0.0);
    out << points[i].x() << ' ' << points[i].y() << ' ' << points[i].z() << ' ' << int(rgb[0]) << ' '
        << int(rgb[1]) << ' ' << int(rgb[2]) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace graspkit
