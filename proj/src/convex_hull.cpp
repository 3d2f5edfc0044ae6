#include "graspkit/convex_hull.hpp"

#include <array>
#include <cmath>
#include <set>

namespace graspkit {

namespace {

struct HullFace {
  std::array<std::size_t, 3> v;
  Vec3 normal;
  double offset;
  bool alive = true;
};

HullFace make_face(const std::vector<Vec3>& p, std::size_t a, std::size_t b, std::size_t c,
                   const Vec3& interior) {
  HullFace f{{a, b, c}, (p[b] - p[a]).cross(p[c] - p[a]), 0.0};
  if (f.normal.dot(interior - p[a]) > 0.0) {
    std::swap(f.v[1], f.v[2]);
    f.normal = -f.normal;
  }
  f.normal.normalize();
  f.offset = f.normal.dot(p[f.v[0]]);
  return f;
}

}  // namespace

HullVolume convex_hull_volume(const std::vector<Vec3>& p) {
  HullVolume out;
  if (p.size() < 4) return out;
  Eigen::AlignedBox3d box;
  for (const auto& q : p) box.extend(q);
  const double eps = 1e-12 * std::max(1.0, box.diagonal().norm());

  // Seed tetrahedron from extreme, well-separated points.
  std::size_t i0 = 0, i1 = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i].x() < p[i0].x()) i0 = i;
  double best = -1.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (double d = (p[i] - p[i0]).norm(); d > best) best = d, i1 = i;
  if (best <= eps) return out;
  std::size_t i2 = 0;
  best = -1.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (double d = (p[i1] - p[i0]).cross(p[i] - p[i0]).norm(); d > best) best = d, i2 = i;
  if (best <= eps) return out;
  const Vec3 n012 = (p[i1] - p[i0]).cross(p[i2] - p[i0]).normalized();
  std::size_t i3 = 0;
  best = -1.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (double d = std::abs(n012.dot(p[i] - p[i0])); d > best) best = d, i3 = i;
  if (best <= eps) return out;

  const Vec3 interior = (p[i0] + p[i1] + p[i2] + p[i3]) / 4.0;
  std::vector<HullFace> faces = {make_face(p, i0, i1, i2, interior), make_face(p, i0, i1, i3, interior),
                                 make_face(p, i0, i2, i3, interior), make_face(p, i1, i2, i3, interior)};

  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == i0 || i == i1 || i == i2 || i == i3) continue;
    std::vector<std::size_t> visible;
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (faces[f].alive && faces[f].normal.dot(p[i]) - faces[f].offset > eps) visible.push_back(f);
    if (visible.empty()) continue;
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (auto f : visible)
      for (int k = 0; k < 3; ++k) edges.insert({faces[f].v[k], faces[f].v[(k + 1) % 3]});
    for (auto f : visible) faces[f].alive = false;
    for (const auto& [a, b] : edges)
      if (!edges.contains({b, a})) faces.push_back(make_face(p, a, b, i, interior));
  }

  for (const auto& f : faces) {
    if (!f.alive) continue;
    const Vec3& a = p[f.v[0]];
    const Vec3& b = p[f.v[1]];
    const Vec3& c = p[f.v[2]];
    const double v = (a - interior).dot((b - interior).cross(c - interior)) / 6.0;
    out.volume += v;
    out.centroid += v * (interior + a + b + c) / 4.0;
  }
  if (out.volume > 0.0) out.centroid /= out.volume;
  return out;
}

}  // namespace graspkit
