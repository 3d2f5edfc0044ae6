#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace graspkit {

using Vec3 = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;
using PartId = int;

/// Triangle mesh with one part label per face.
///
/// Build through make_part_mesh() or load_mesh(); both validate labels and
/// compute the watertight flag. Treat as immutable afterwards.
struct PartMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<PartId> face_part;
  std::map<PartId, std::string> part_names;

  /// Every undirected edge is shared by exactly two faces with opposite winding.
  bool watertight = false;
  /// Parts whose face winding was reversed at load so normals point outward.
  std::vector<PartId> reoriented_parts;

  std::size_t num_faces() const { return faces.size(); }
  Vec3 face_normal(std::size_t f) const;
  double face_area(std::size_t f) const;
  double total_area() const;
  Eigen::AlignedBox3d bounds() const;
  std::vector<PartId> part_ids() const;
  std::vector<std::size_t> faces_of_part(PartId part) const;
};

struct SurfaceSample {
  Vec3 position;
  Vec3 normal;  // outward, unit length
  PartId part = 0;
  std::uint32_t face = 0;
};

struct RayHit {
  Vec3 point;
  double t = 0.0;
  std::uint32_t face = 0;
  bool entering = false;
};

/// Validates labels and orientation. Throws ParseError for out-of-range
/// indices and LabelError for faces without a named part.
PartMesh make_part_mesh(std::vector<Vec3> vertices, std::vector<Face> faces,
                        std::vector<PartId> face_part, std::map<PartId, std::string> part_names);

/// Reads an OBJ or PLY (ASCII or binary) mesh plus a part-annotation sidecar:
///
///   {"parts": [{"id": 0, "name": "base", "faces": [start, end]},
///              {"id": 1, "name": "pole", "groups": ["pole_g"]}]}
///
/// `faces` ranges are inclusive and index faces in file order; `groups`
/// match OBJ `g`/`o` names. Polygons are fan-triangulated and inherit the
/// label of their source face.
PartMesh load_mesh(const std::filesystem::path& mesh_path,
                   const std::filesystem::path& part_annotation);

/// Writes an OBJ (one `g part_<id>` group per part) and a matching sidecar.
void save_mesh(const PartMesh& mesh, const std::filesystem::path& obj_path,
               const std::filesystem::path& annotation_path);

/// True when each undirected edge of `faces` appears twice with opposite winding.
bool is_edge_manifold(const std::vector<Face>& faces);
/// Same test restricted to the faces of one part.
bool part_is_closed(const PartMesh& mesh, PartId part);

/// Area-weighted sampling with a fixed counter-based RNG; reproducible for a seed.
std::vector<SurfaceSample> sample_surface(const PartMesh& mesh, std::size_t n,
                                          std::uint64_t seed);

/// All intersections with t >= -1e-9, ordered by t then face index.
/// Coincident hits (|dt| <= 1e-9, same entering flag) are reported once.
std::vector<RayHit> cast_ray(const PartMesh& mesh, const Vec3& origin, const Vec3& direction);

/// Inside test. Watertight meshes use one parity ray; others a majority of
/// five jittered rays.
bool contains(const PartMesh& mesh, const Vec3& point);

/// Barycentric coordinates of `p` projected onto face `f`.
Eigen::Vector3d barycentric(const PartMesh& mesh, std::size_t f, const Vec3& p);

}  // namespace graspkit
