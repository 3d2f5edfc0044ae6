#include <cmath>
#include <fstream>
#include <map>

#include <gtest/gtest.h>

#include "graspkit/errors.hpp"
#include "graspkit/fixtures.hpp"
#include "graspkit/mesh.hpp"
#include "graspkit/rng.hpp"
#include "test_util.hpp"

using namespace graspkit;
using graspkit::test::TempDir;

namespace {

const char* kCubeObj = R"(# unit cube
v -0.5 -0.5 -0.5
v  0.5 -0.5 -0.5
v  0.5  0.5 -0.5
v -0.5  0.5 -0.5
v -0.5 -0.5  0.5
v  0.5 -0.5  0.5
v  0.5  0.5  0.5
v -0.5  0.5  0.5
f 1 4 3
f 1 3 2
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
)";

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

// Inclusive Moller-Trumbore; the oracle for edge-graze deduplication.
struct RawHit {
  double t;
  bool entering;
};

std::vector<RawHit> brute_hits(const PartMesh& m, const Vec3& o, const Vec3& d) {
  std::vector<RawHit> hits;
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    const Vec3& a = m.vertices[m.faces[f][0]];
    const Vec3& b = m.vertices[m.faces[f][1]];
    const Vec3& c = m.vertices[m.faces[f][2]];
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 pv = d.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < 1e-15) continue;
    const Vec3 tv = o - a;
    const double u = tv.dot(pv) / det;
    const Vec3 qv = tv.cross(e1);
    const double v = d.dot(qv) / det;
    const double t = e2.dot(qv) / det;
    const double eps = 1e-12;
    if (u < -eps || v < -eps || u + v > 1 + eps || t < -1e-9) continue;
    hits.push_back({t, d.dot(m.face_normal(f)) < 0});
  }
  std::sort(hits.begin(), hits.end(), [](auto& x, auto& y) { return x.t < y.t; });
  std::vector<RawHit> dedup;
  for (const auto& h : hits)
    if (dedup.empty() || std::abs(h.t - dedup.back().t) > 1e-9 || h.entering != dedup.back().entering)
      dedup.push_back(h);
  return dedup;
}

}  // namespace

TEST(LoadMesh, UnitCubeSinglePart) {
  TempDir dir;
  write(dir / "cube.obj", kCubeObj);
  write(dir / "cube.json", R"({"parts": [{"id": 0, "name": "body", "faces": [0, 11]}]})");
  const auto m = load_mesh(dir / "cube.obj", dir / "cube.json");
  EXPECT_EQ(m.vertices.size(), 8u);
  ASSERT_EQ(m.faces.size(), 12u);
  for (auto p : m.face_part) EXPECT_EQ(p, 0);
  EXPECT_EQ(m.part_names.at(0), "body");
  EXPECT_TRUE(m.watertight);
  EXPECT_NEAR(m.total_area(), 6.0, 1e-12);
  // Vertex order is preserved from the file.
  EXPECT_EQ(m.vertices[6], Vec3(0.5, 0.5, 0.5));
}

TEST(LoadMesh, MissingFacesIsLabelError) {
  TempDir dir;
  write(dir / "cube.obj", kCubeObj);
  write(dir / "cube.json", R"({"parts": [{"id": 0, "name": "body", "faces": [0, 9]}]})");
  EXPECT_THROW(load_mesh(dir / "cube.obj", dir / "cube.json"), LabelError);
}

TEST(LoadMesh, MalformedFilesAreParseErrors) {
  TempDir dir;
  write(dir / "bad.obj", "v 0 0 0\nv 1 0 0\nf 1 2 9\n");
  write(dir / "a.json", R"({"parts": [{"id": 0, "name": "x", "faces": [0, 0]}]})");
  EXPECT_THROW(load_mesh(dir / "bad.obj", dir / "a.json"), ParseError);
  write(dir / "cube.obj", kCubeObj);
  write(dir / "broken.json", "{not json");
  EXPECT_THROW(load_mesh(dir / "cube.obj", dir / "broken.json"), ParseError);
  EXPECT_THROW(load_mesh(dir / "missing.obj", dir / "a.json"), IoError);
}

TEST(LoadMesh, TwoPartLampByGroups) {
  TempDir dir;
  const auto lamp = MeshBuilder()
                        .add_box(0, "base", {0, 0, 0.01}, {0.1, 0.1, 0.02})
                        .add_cylinder(1, "pole", {0, 0, 0.02}, Vec3::UnitZ(), 0.01, 0.2, 12)
                        .build();
  save_mesh(lamp, dir / "lamp.obj", dir / "lamp.json");
  const auto back = load_mesh(dir / "lamp.obj", dir / "lamp.json");
  EXPECT_EQ(back.part_names.size(), 2u);
  std::map<PartId, int> counts, expected;
  for (auto p : back.face_part) ++counts[p];
  for (auto p : lamp.face_part) ++expected[p];
  EXPECT_EQ(counts, expected);
  EXPECT_EQ(counts[0], 12);
  EXPECT_EQ(back.faces, lamp.faces);
}

TEST(LoadMesh, AsciiAndBinaryPly) {
  TempDir dir;
  const std::string header_common =
      "element vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
      "element face 4\nproperty list uchar int vertex_indices\nend_header\n";
  write(dir / "tet.ply", "ply\nformat ascii 1.0\n" + header_common +
                             "0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n");
  write(dir / "tet.json", R"({"parts": [{"id": 0, "name": "tet", "faces": [0, 3]}]})");
  const auto ascii = load_mesh(dir / "tet.ply", dir / "tet.json");
  EXPECT_EQ(ascii.faces.size(), 4u);
  EXPECT_TRUE(ascii.watertight);

  std::ofstream bin(dir / "tetb.ply", std::ios::binary);
  bin << "ply\nformat binary_little_endian 1.0\n" << header_common;
  const float v[12] = {0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1};
  bin.write(reinterpret_cast<const char*>(v), sizeof v);
  const int f[4][3] = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  for (const auto& tri : f) {
    const unsigned char n = 3;
    bin.write(reinterpret_cast<const char*>(&n), 1);
    bin.write(reinterpret_cast<const char*>(tri), sizeof tri);
  }
  bin.close();
  const auto binary = load_mesh(dir / "tetb.ply", dir / "tet.json");
  EXPECT_EQ(binary.faces, ascii.faces);
  EXPECT_EQ(binary.vertices, ascii.vertices);
}

TEST(MakePartMesh, RejectsBadIndicesAndLabels) {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  EXPECT_THROW(make_part_mesh(v, {{0, 1, 5}}, {0}, {{0, "a"}}), ParseError);
  EXPECT_THROW(make_part_mesh(v, {{0, 1, 2}}, {3}, {{0, "a"}}), LabelError);
  const auto open = make_part_mesh(v, {{0, 1, 2}}, {0}, {{0, "a"}});
  EXPECT_FALSE(open.watertight);
}

TEST(SampleSurface, FaceCountsWithinBinomialBound) {
  const auto cube = unit_cube_fixture();
  const double n = 2048, p = 1.0 / 6.0;
  const double bound = 5.0 * std::sqrt(n * p * (1 - p));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto samples = sample_surface(cube, 2048, seed == 1 ? 7 : seed);
    ASSERT_EQ(samples.size(), 2048u);
    std::map<std::pair<int, int>, int> per_side;  // (axis, sign)
    for (const auto& s : samples) {
      Eigen::Index axis;
      s.normal.cwiseAbs().maxCoeff(&axis);
      ++per_side[{static_cast<int>(axis), s.normal(axis) > 0 ? 1 : -1}];
    }
    ASSERT_EQ(per_side.size(), 6u);
    for (const auto& [side, count] : per_side) EXPECT_NEAR(count, n * p, bound);
  }
}

TEST(SampleSurface, SamplesLieOnTheirFaces) {
  const auto mesh = faucet_fixture();
  for (const auto& s : sample_surface(mesh, 500, 3)) {
    EXPECT_NEAR(s.normal.norm(), 1.0, 1e-9);
    const auto bc = barycentric(mesh, s.face, s.position);
    EXPECT_NEAR(bc.sum(), 1.0, 1e-9);
    EXPECT_GE(bc.minCoeff(), -1e-9);
    EXPECT_LE(bc.maxCoeff(), 1.0 + 1e-9);
    EXPECT_EQ(s.part, mesh.face_part[s.face]);
    EXPECT_NEAR(s.normal.dot(mesh.face_normal(s.face)), 1.0, 1e-12);
  }
}

TEST(SampleSurface, SingleSampleAndDeterminism) {
  const auto cube = unit_cube_fixture();
  const auto one = sample_surface(cube, 1, 3);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NEAR(one[0].position.cwiseAbs().maxCoeff(), 0.5, 1e-12);

  const auto a = sample_surface(cube, 300, 99);
  const auto b = sample_surface(cube, 300, 99);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].position, b[i].position);
    EXPECT_EQ(a[i].face, b[i].face);
  }
}

TEST(SampleSurface, ZeroAreaIsDegenerate) {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  const auto flat = make_part_mesh(v, {{0, 1, 2}}, {0}, {{0, "line"}});
  EXPECT_THROW(sample_surface(flat, 10, 1), DegenerateMesh);
}

TEST(CastRay, CubeAlongX) {
  const auto cube = unit_cube_fixture();
  const auto hits = cast_ray(cube, {-2, 0, 0}, {1, 0, 0});
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_NEAR(hits[0].point.x(), -0.5, 1e-12);
  EXPECT_TRUE(hits[0].entering);
  EXPECT_NEAR(hits[1].point.x(), 0.5, 1e-12);
  EXPECT_FALSE(hits[1].entering);
}

TEST(CastRay, FromInsideSingleExit) {
  const auto cube = unit_cube_fixture();
  const auto hits = cast_ray(cube, {0, 0, 0}, {0, 0, 1});
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_NEAR(hits[0].point.z(), 0.5, 1e-12);
  EXPECT_FALSE(hits[0].entering);
  EXPECT_TRUE(cast_ray(cube, {2, 2, 2}, {1, 0, 0}).empty());
}

TEST(CastRay, EdgeGrazeReportedOnce) {
  const auto cube = unit_cube_fixture();
  struct Case {
    Vec3 o, d;
  };
  const std::vector<Case> cases = {
      {{-1, -1, 0}, Vec3(1, 1, 0).normalized()},    // through two cube edges
      {{-1, -1, -1}, Vec3(1, 1, 1).normalized()},   // through two corners
      {{-2, 0, 0}, {1, 0, 0}},                       // through face-diagonal edges
      {{0.2, -2, 0.2}, {0, 1, 0}},                   // diagonal of the y faces
  };
  for (const auto& c : cases) {
    const auto hits = cast_ray(cube, c.o, c.d);
    const auto oracle = brute_hits(cube, c.o, c.d);
    ASSERT_EQ(hits.size(), oracle.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      EXPECT_NEAR(hits[i].t, oracle[i].t, 1e-9);
      EXPECT_EQ(hits[i].entering, oracle[i].entering);
    }
    EXPECT_EQ(hits.size(), 2u);
  }
}

TEST(CastRay, ParityAndOrderingOnRandomRays) {
  const auto mesh = lamp_fixture();
  Rng rng(17);
  for (int i = 0; i < 300; ++i) {
    Vec3 d(rng.normal(), rng.normal(), rng.normal());
    d.normalize();
    const Vec3 target(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.0, 0.3));
    const Vec3 origin = target - 2.0 * d;
    const auto hits = cast_ray(mesh, origin, d);
    // Each closed part shell is crossed an even number of times.
    std::map<PartId, int> per_part;
    for (const auto& h : hits) ++per_part[mesh.face_part[h.face]];
    for (const auto& [part, count] : per_part) EXPECT_EQ(count % 2, 0) << "part " << part;
    for (std::size_t k = 1; k < hits.size(); ++k) EXPECT_LE(hits[k - 1].t, hits[k].t);
  }
}

TEST(Contains, WatertightAndOpen) {
  const auto cube = unit_cube_fixture();
  EXPECT_TRUE(contains(cube, {0.1, 0.2, -0.3}));
  EXPECT_FALSE(contains(cube, {0.6, 0, 0}));
  // Drop one triangle: the jittered majority vote still answers.
  auto faces = cube.faces;
  faces.pop_back();
  std::vector<PartId> labels(faces.size(), 0);
  const auto open = make_part_mesh(cube.vertices, faces, labels, {{0, "body"}});
  EXPECT_FALSE(open.watertight);
  EXPECT_TRUE(contains(open, {0.1, 0.1, 0.1}));
  EXPECT_FALSE(contains(open, {2, 0, 0}));
}

TEST(Fixtures, ShellsAreClosed) {
  for (const auto& [name, mesh] : desk_fixtures()) {
    for (auto part : mesh.part_ids()) EXPECT_TRUE(part_is_closed(mesh, part)) << name << " part " << part;
  }
  EXPECT_TRUE(part_is_closed(clock_fixture(), 0));
  EXPECT_TRUE(sphere_fixture().watertight);
}
