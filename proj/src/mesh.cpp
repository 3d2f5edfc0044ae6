#include "graspkit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Geometry>

#include "graspkit/errors.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

namespace {

constexpr double kRayTol = 1e-9;

double signed_volume(const PartMesh& mesh, const std::vector<std::size_t>& faces) {
  double v = 0.0;
  for (auto f : faces) {
    const auto& tri = mesh.faces[f];
    v += mesh.vertices[tri[0]].dot(mesh.vertices[tri[1]].cross(mesh.vertices[tri[2]]));
  }
  return v / 6.0;
}

// Watertight ray/triangle test (Woop, Benthin, Wald 2013). Returns t or NaN.
double intersect(const Vec3& o, const Vec3& d, const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  int kz = 0;
  d.cwiseAbs().maxCoeff(&kz);
  int kx = (kz + 1) % 3;
  int ky = (kx + 1) % 3;
  if (d[kz] < 0.0) std::swap(kx, ky);
  const double sx = d[kx] / d[kz];
  const double sy = d[ky] / d[kz];
  const double sz = 1.0 / d[kz];

  const Vec3 a = p0 - o, b = p1 - o, c = p2 - o;
  const double ax = a[kx] - sx * a[kz], ay = a[ky] - sy * a[kz];
  const double bx = b[kx] - sx * b[kz], by = b[ky] - sy * b[kz];
  const double cx = c[kx] - sx * c[kz], cy = c[ky] - sy * c[kz];

  const double u = cx * by - cy * bx;
  const double v = ax * cy - ay * cx;
  const double w = bx * ay - by * ax;
  if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return std::nan("");
  const double det = u + v + w;
  if (det == 0.0) return std::nan("");
  const double t = (u * sz * a[kz] + v * sz * b[kz] + w * sz * c[kz]) / det;
  return t;
}

}  // namespace

Vec3 PartMesh::face_normal(std::size_t f) const {
  const auto& tri = faces[f];
  const Vec3 n = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
  return n.normalized();
}

double PartMesh::face_area(std::size_t f) const {
  const auto& tri = faces[f];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

double PartMesh::total_area() const {
  double a = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) a += face_area(f);
  return a;
}

Eigen::AlignedBox3d PartMesh::bounds() const {
  Eigen::AlignedBox3d box;
  for (const auto& v : vertices) box.extend(v);
  return box;
}

std::vector<PartId> PartMesh::part_ids() const {
  std::vector<PartId> ids;
  for (const auto& [id, name] : part_names) ids.push_back(id);
  return ids;
}

std::vector<std::size_t> PartMesh::faces_of_part(PartId part) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < faces.size(); ++f)
    if (face_part[f] == part) out.push_back(f);
  return out;
}

bool is_edge_manifold(const std::vector<Face>& faces) {
  if (faces.empty()) return false;
  // directed edge -> count
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& tri : faces)
    for (int k = 0; k < 3; ++k) ++directed[{tri[k], tri[(k + 1) % 3]}];
  for (const auto& [edge, count] : directed) {
    if (count != 1) return false;
    auto twin = directed.find({edge.second, edge.first});
    if (twin == directed.end() || twin->second != 1) return false;
  }
  return true;
}

bool part_is_closed(const PartMesh& mesh, PartId part) {
  std::vector<Face> sub;
  for (auto f : mesh.faces_of_part(part)) sub.push_back(mesh.faces[f]);
  return is_edge_manifold(sub);
}

PartMesh make_part_mesh(std::vector<Vec3> vertices, std::vector<Face> faces,
                        std::vector<PartId> face_part, std::map<PartId, std::string> part_names) {
  if (face_part.size() != faces.size())
    throw LabelError("face_part has " + std::to_string(face_part.size()) + " labels for " +
                     std::to_string(faces.size()) + " faces");
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (auto idx : faces[f])
      if (idx >= vertices.size())
        throw ParseError("face " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                         " of " + std::to_string(vertices.size()));
    if (!part_names.contains(face_part[f]))
      throw LabelError("face " + std::to_string(f) + " has unknown part " +
                       std::to_string(face_part[f]));
  }

  PartMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.faces = std::move(faces);
  mesh.face_part = std::move(face_part);
  mesh.part_names = std::move(part_names);

  // Closed parts with inward winding get flipped so face normals point out.
  for (PartId part : mesh.part_ids()) {
    auto fs = mesh.faces_of_part(part);
    if (fs.empty() || !part_is_closed(mesh, part)) continue;
    if (signed_volume(mesh, fs) < 0.0) {
      for (auto f : fs) std::swap(mesh.faces[f][1], mesh.faces[f][2]);
      mesh.reoriented_parts.push_back(part);
    }
  }
  mesh.watertight = is_edge_manifold(mesh.faces);
  if (!mesh.watertight) {
    // A union of closed parts is still fine for parity tests.
    bool all_closed = !mesh.part_names.empty();
    for (PartId part : mesh.part_ids()) all_closed = all_closed && part_is_closed(mesh, part);
    mesh.watertight = all_closed;
  }
  return mesh;
}

std::vector<SurfaceSample> sample_surface(const PartMesh& mesh, std::size_t n, std::uint64_t seed) {
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw DegenerateMesh("mesh has zero surface area");

  Rng rng(seed);
  std::vector<SurfaceSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double target = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;
    const auto f = static_cast<std::size_t>(it - cumulative.begin());
    const double s = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const auto& tri = mesh.faces[f];
    SurfaceSample sample;
    sample.position = (1.0 - s) * mesh.vertices[tri[0]] + s * (1.0 - r2) * mesh.vertices[tri[1]] +
                      s * r2 * mesh.vertices[tri[2]];
    sample.normal = mesh.face_normal(f);
    sample.part = mesh.face_part[f];
    sample.face = static_cast<std::uint32_t>(f);
    out.push_back(sample);
  }
  return out;
}

std::vector<RayHit> cast_ray(const PartMesh& mesh, const Vec3& origin, const Vec3& direction) {
  std::vector<RayHit> hits;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    const double t = intersect(origin, direction, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                               mesh.vertices[tri[2]]);
    if (std::isnan(t) || t < -kRayTol) continue;
    RayHit hit;
    hit.t = t;
    hit.point = origin + t * direction;
    hit.face = static_cast<std::uint32_t>(f);
    hit.entering = direction.dot(mesh.face_normal(f)) < 0.0;
    hits.push_back(hit);
  }
  std::sort(hits.begin(), hits.end(), [](const RayHit& a, const RayHit& b) {
    return a.t != b.t ? a.t < b.t : a.face < b.face;
  });

  // Drop duplicates from shared edges/vertices: within a run of coincident t,
  // keep the first hit of each entering state.
  std::vector<RayHit> unique;
  std::size_t run_start = 0;
  for (const auto& hit : hits) {
    if (!unique.empty() && hit.t - unique[run_start].t > kRayTol) run_start = unique.size();
    bool dup = false;
    for (std::size_t k = run_start; k < unique.size(); ++k)
      dup = dup || (unique[k].entering == hit.entering &&
                    std::abs(unique[k].t - hit.t) <= kRayTol);
    if (!dup) unique.push_back(hit);
  }
  return unique;
}

namespace {

int depth_along(const PartMesh& mesh, const Vec3& p, const Vec3& dir) {
  int depth = 0;
  for (const auto& hit : cast_ray(mesh, p, dir)) depth += hit.entering ? -1 : 1;
  return depth;
}

}  // namespace

bool contains(const PartMesh& mesh, const Vec3& point) {
  // Irrational-ish directions keep the rays off axis-aligned edges.
  static const std::array<Vec3, 5> dirs = {
      Vec3(0.5773502691896258, 0.5773502691896258, 0.5773502691896258),
      Vec3(-0.2672612419124244, 0.5345224838248488, 0.8017837257372732),
      Vec3(0.8017837257372732, -0.2672612419124244, 0.5345224838248488),
      Vec3(0.5345224838248488, 0.8017837257372732, -0.2672612419124244),
      Vec3(-0.4472135954999579, -0.7745966692414834, 0.4472135954999579),
  };
  if (mesh.watertight) return depth_along(mesh, point, (dirs[0] + Vec3(1e-3, 2e-3, -3e-3)).normalized()) > 0;
  int votes = 0;
  for (const auto& d : dirs) votes += depth_along(mesh, point, d.normalized()) > 0 ? 1 : 0;
  return votes >= 3;
}

Eigen::Vector3d barycentric(const PartMesh& mesh, std::size_t f, const Vec3& p) {
  const auto& tri = mesh.faces[f];
  const Vec3 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
  const Vec3 v0 = b - a, v1 = c - a, v2 = p - a;
  const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
  const double d20 = v2.dot(v0), d21 = v2.dot(v1);
  const double denom = d00 * d11 - d01 * d01;
  const double v = (d11 * d20 - d01 * d21) / denom;
  const double w = (d00 * d21 - d01 * d20) / denom;
  return {1.0 - v - w, v, w};
}

}  // namespace graspkit
