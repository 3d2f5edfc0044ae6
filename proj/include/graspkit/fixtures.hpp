#pragma once

#include <string>
#include <utility>
#include <vector>

#include "graspkit/mesh.hpp"

namespace graspkit {

/// Assembles closed primitive shells into a part-labeled mesh. Each primitive
/// is its own closed part shell; parts may touch or overlap.
class MeshBuilder {
 public:
  MeshBuilder& add_box(PartId part, const std::string& name, const Vec3& center, const Vec3& size);
  /// Capped cylinder from `base` along unit `axis`.
  MeshBuilder& add_cylinder(PartId part, const std::string& name, const Vec3& base, const Vec3& axis,
                            double radius, double height, int segments = 32);
  /// Subdivided icosahedron projected onto the sphere.
  MeshBuilder& add_sphere(PartId part, const std::string& name, const Vec3& center, double radius,
                          int subdivisions = 3);
  PartMesh build() const;

 private:
  void name_part(PartId part, const std::string& name);

  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<PartId> face_part_;
  std::map<PartId, std::string> names_;
};

PartMesh unit_cube_fixture();                       // side 1 m, centered at the origin
PartMesh sphere_fixture(double radius = 0.1);       // single part "shell"
PartMesh hammer_fixture();                          // head and handle, 1e-4 m^3 each
PartMesh mug_fixture();                             // body and handle
PartMesh knife_fixture();                           // handle and blade
PartMesh lamp_fixture();                            // base, pole, shade
PartMesh faucet_fixture();                          // switch, frame, spout
PartMesh clock_fixture();                           // base and body

/// The five meshes of the desk corpus, keyed by object id.
std::vector<std::pair<std::string, PartMesh>> desk_fixtures();

}  // namespace graspkit
