#include "graspkit/fixtures.hpp"

#include <cmath>
#include <numbers>

#include "graspkit/errors.hpp"

namespace graspkit {

void MeshBuilder::name_part(PartId part, const std::string& name) {
  auto [it, inserted] = names_.emplace(part, name);
  if (!inserted && it->second != name) throw LabelError("part " + std::to_string(part) + " named twice");
}

MeshBuilder& MeshBuilder::add_box(PartId part, const std::string& name, const Vec3& center, const Vec3& size) {
  name_part(part, name);
  const auto base = static_cast<std::uint32_t>(vertices_.size());
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner((i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5);
    vertices_.push_back(center + corner.cwiseProduct(size));
  }
  static constexpr std::array<Face, 12> kFaces = {{{0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5},
                                                   {0, 1, 5}, {0, 5, 4}, {2, 6, 7}, {2, 7, 3},
                                                   {0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}}};
  for (const auto& f : kFaces) {
    faces_.push_back({base + f[0], base + f[1], base + f[2]});
    face_part_.push_back(part);
  }
  return *this;
}

MeshBuilder& MeshBuilder::add_cylinder(PartId part, const std::string& name, const Vec3& base, const Vec3& axis,
                                       double radius, double height, int segments) {
  if (segments < 3) throw DomainError("cylinder needs at least 3 segments");
  name_part(part, name);
  const Vec3 a = axis.normalized();
  const Vec3 helper = std::abs(a.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = (helper - helper.dot(a) * a).normalized();
  const Vec3 v = a.cross(u);

  const auto first = static_cast<std::uint32_t>(vertices_.size());
  const auto n = static_cast<std::uint32_t>(segments);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / n;
    vertices_.push_back(base + radius * (std::cos(theta) * u + std::sin(theta) * v));
  }
  for (std::uint32_t i = 0; i < n; ++i) vertices_.push_back(vertices_[first + i] + height * a);
  const std::uint32_t bottom = first + 2 * n, top = bottom + 1;
  vertices_.push_back(base);
  vertices_.push_back(base + height * a);

  auto add = [&](std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    faces_.push_back({x, y, z});
    face_part_.push_back(part);
  };
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    const std::uint32_t b0 = first + i, b1 = first + j, t0 = first + n + i, t1 = first + n + j;
    add(b0, b1, t1);
    add(b0, t1, t0);
    add(top, t0, t1);
    add(bottom, b1, b0);
  }
  return *this;
}

MeshBuilder& MeshBuilder::add_sphere(PartId part, const std::string& name, const Vec3& center, double radius,
                                     int subdivisions) {
  name_part(part, name);
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                             {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  for (auto& x : verts) x.normalize();
  std::vector<Face> tris = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                            {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                            {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                            {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(verts.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    for (const auto& t : tris) {
      const auto ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  const auto base = static_cast<std::uint32_t>(vertices_.size());
  for (const auto& x : verts) vertices_.push_back(center + radius * x);
  for (const auto& t : tris) {
    faces_.push_back({base + t[0], base + t[1], base + t[2]});
    face_part_.push_back(part);
  }
  return *this;
}

PartMesh MeshBuilder::build() const { return make_part_mesh(vertices_, faces_, face_part_, names_); }

PartMesh unit_cube_fixture() { return MeshBuilder().add_box(0, "body", Vec3::Zero(), Vec3::Ones()).build(); }

PartMesh sphere_fixture(double radius) {
  return MeshBuilder().add_sphere(0, "shell", Vec3::Zero(), radius).build();
}

PartMesh hammer_fixture() {
  return MeshBuilder()
      .add_box(0, "head", {0, 0, 0.2125}, {0.1, 0.04, 0.025})
      .add_box(1, "handle", {0, 0, 0.1}, {0.025, 0.02, 0.2})
      .build();
}

PartMesh mug_fixture() {
  return MeshBuilder()
      .add_cylinder(0, "body", Vec3::Zero(), Vec3::UnitZ(), 0.04, 0.1)
      .add_box(1, "handle", {0.0465, 0, 0.05}, {0.017, 0.012, 0.06})
      .build();
}

PartMesh knife_fixture() {
  return MeshBuilder()
      .add_box(0, "handle", {0.06, 0, 0}, {0.12, 0.025, 0.02})
      .add_box(1, "blade", {0.17, 0, 0}, {0.1, 0.002, 0.03})
      .build();
}

PartMesh lamp_fixture() {
  return MeshBuilder()
      .add_cylinder(0, "base", Vec3::Zero(), Vec3::UnitZ(), 0.07, 0.02)
      .add_cylinder(1, "pole", {0, 0, 0.02}, Vec3::UnitZ(), 0.01, 0.25, 16)
      .add_cylinder(2, "shade", {0, 0, 0.27}, Vec3::UnitZ(), 0.045, 0.06)
      .build();
}

PartMesh faucet_fixture() {
  return MeshBuilder()
      .add_box(0, "switch", {0, 0, 0.165}, {0.02, 0.04, 0.03})
      .add_box(1, "frame", {0, 0, 0.075}, {0.04, 0.04, 0.15})
      .add_box(2, "spout", {0.08, 0, 0.13}, {0.12, 0.025, 0.025})
      .build();
}

PartMesh clock_fixture() {
  return MeshBuilder()
      .add_box(0, "base", {0, 0, 0.025}, {0.14, 0.07, 0.05})
      .add_box(1, "body", {0, 0, 0.1}, {0.1, 0.05, 0.1})
      .build();
}

std::vector<std::pair<std::string, PartMesh>> desk_fixtures() {
  return {{"mug", mug_fixture()},
          {"hammer", hammer_fixture()},
          {"knife", knife_fixture()},
          {"lamp", lamp_fixture()},
          {"faucet", faucet_fixture()}};
}

}  // namespace graspkit
