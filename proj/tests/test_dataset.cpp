#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "graspkit/dataset.hpp"
#include "graspkit/errors.hpp"
#include "graspkit/fixtures.hpp"
#include "grasp_suite.hpp"
#include "test_util.hpp"

using namespace graspkit;
using nlohmann::json;

namespace {

std::vector<ObjectMesh> desk_objects() {
  std::vector<ObjectMesh> out;
  for (auto& [id, mesh] : desk_fixtures()) out.push_back({id, id, std::make_shared<const PartMesh>(std::move(mesh))});
  return out;
}

// A 5 cm cube: graspable within the default 10 cm gripper opening.
GeneratedInstance cube_seed1() {
  const Config cfg;
  auto cube = std::make_shared<const PartMesh>(
      MeshBuilder().add_box(0, "body", {0, 0, 0.025}, {0.05, 0.05, 0.05}).build());
  return generate_instance(cube, "cube", "cube", "cube-0000", 1, cfg);
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Key/type skeleton of a JSON value: objects keep their keys, arrays
// collapse to the skeleton of their first element, scalars to a type name.
json skeleton(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = skeleton(v);
    return out;
  }
  if (j.is_array()) return json::array({j.empty() ? json("empty") : skeleton(j.front())});
  if (j.is_boolean()) return "bool";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  return "null";
}

}  // namespace

TEST(Generate, CubeSeedOne) {
  const auto g = cube_seed1();
  const auto& r = g.record;
  EXPECT_EQ(r.points.size(), 2048u);
  EXPECT_NEAR(r.prob.sum(), 1.0, 1e-9);
  EXPECT_GE(r.positive_pairs.size(), 1u);
  EXPECT_FALSE(r.summary.empty());
  EXPECT_EQ(r.config_hash, config_hash(Config{}));
  EXPECT_EQ(r.positive_grasps.size(), r.positive_pairs.size());
  EXPECT_TRUE(verify_record(r).empty());
}

TEST(Generate, Deterministic) {
  const auto a = cube_seed1(), b = cube_seed1();
  EXPECT_TRUE(a.record == b.record);
  EXPECT_EQ(encode_blob(a.record), encode_blob(b.record));
  EXPECT_EQ(index_entry(a.record).dump(), index_entry(b.record).dump());
}

TEST(Generate, AffordanceMatchesIndependentDoubleLoop) {
  Config cfg;
  cfg.instances_per_object = 2;
  cfg.seed = 3;
  for (bool quality : {false, true}) {
    cfg.quality_weighting = quality;
    const auto res = generate_dataset(desk_objects(), cfg);
    ASSERT_EQ(res.records.size(), 10u);
    for (const auto& r : res.records) {
      std::map<PartId, double> prior;
      for (const auto& p : r.parts) prior[p.id] = p.grasp_prior;
      std::vector<long double> mass(r.points.size(), 0.0L);
      long double total = 0;
      for (std::size_t i = 0; i < r.points.size(); ++i) {
        for (std::size_t k = 0; k < r.positive_pairs.size(); ++k) {
          const auto& g = r.positive_grasps[k];
          for (int e = 0; e < 2; ++e) {
            long double w = prior.at(g.part[e]);
            if (quality) w /= 1.0L + g.min_force / (static_cast<long double>(r.mass) * r.label.gravity);
            const Vec3& c = r.points[r.positive_pairs[k][e]];
            long double d2 = 0;
            for (int a = 0; a < 3; ++a) d2 += std::pow(static_cast<long double>(r.points[i](a)) - c(a), 2);
            mass[i] += w * std::exp(-d2 / (2.0L * r.sigma * r.sigma));
          }
        }
        total += mass[i];
      }
      double worst = 0;
      for (std::size_t i = 0; i < r.points.size(); ++i)
        worst = std::max(worst, std::abs(r.prob(i) - static_cast<double>(mass[i] / total)));
      EXPECT_LE(worst, 1e-12) << r.instance_id;
      EXPECT_NEAR(r.prob.sum(), 1.0, 1e-9);
      EXPECT_GE(r.prob.minCoeff(), 0.0);
    }
  }
}

TEST(Generate, StoredPositivesReverifyFromRecord) {
  Config cfg;
  cfg.seed = 11;
  const auto res = generate_dataset(desk_objects(), cfg);
  ASSERT_EQ(res.records.size(), 50u);
  EXPECT_TRUE(res.failures.empty());
  std::size_t checked = 0;
  for (const auto& r : res.records) {
    EXPECT_TRUE(verify_record(r).empty()) << r.instance_id;
    // Independent recheck from the record's part table with the dense-cone
    // NNLS oracle; its 64-edge cones contain the 8-edge ones.
    std::map<PartId, const PartRecord*> parts;
    for (const auto& p : r.parts) parts[p.id] = &p;
    for (const auto& g : r.positive_grasps) {
      const auto& a = *parts.at(g.part[0]);
      const auto& b = *parts.at(g.part[1]);
      const test::ContactCase c{g.position[0], g.position[1], g.normal[0], g.normal[1], r.com, r.mass,
                                a.material.friction, b.material.friction, a.force_cap, b.force_cap};
      EXPECT_TRUE(test::oracle_feasible(c, r.label.gravity)) << r.instance_id;
      ++checked;
    }
  }
  EXPECT_GT(checked, 50u);
}

TEST(Generate, WorkerCountDoesNotChangeOutput) {
  Config cfg;
  cfg.seed = 2;
  cfg.instances_per_object = 3;
  cfg.workers = 1;
  const auto one = generate_dataset(desk_objects(), cfg);
  cfg.workers = 3;
  const auto three = generate_dataset(desk_objects(), cfg);
  ASSERT_EQ(one.records.size(), three.records.size());
  for (std::size_t i = 0; i < one.records.size(); ++i) {
    EXPECT_EQ(encode_blob(one.records[i]), encode_blob(three.records[i]));
    EXPECT_EQ(index_entry(one.records[i]), index_entry(three.records[i]));
  }
}

TEST(Persistence, RoundTripTenRecords) {
  Config cfg;
  cfg.instances_per_object = 2;
  const auto res = generate_dataset(desk_objects(), cfg);
  test::TempDir dir;
  write_records(dir.path(), res.records);
  const auto back = read_records(dir.path());
  ASSERT_EQ(back.size(), res.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_TRUE(back[i] == res.records[i]) << back[i].instance_id;
    EXPECT_TRUE(verify_record(back[i]).empty());
  }
  // Writing what was read reproduces the files byte for byte.
  test::TempDir again;
  std::filesystem::create_directories(again.path());
  write_records(again.path(), back);
  EXPECT_EQ(slurp(dir / "index.jsonl"), slurp(again / "index.jsonl"));
  for (const auto& r : back)
    EXPECT_EQ(slurp(dir.path() / "blobs" / (r.instance_id + ".bin")),
              slurp(again.path() / "blobs" / (r.instance_id + ".bin")));
}

TEST(Persistence, DamagedBlobsAreRejected) {
  const auto rec = cube_seed1().record;
  const auto bytes = encode_blob(rec);
  for (std::size_t cut : {std::size_t{0}, std::size_t{7}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
    DatasetRecord r;
    std::vector<std::uint8_t> shorter(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_ANY_THROW(decode_blob(shorter, r));
    try {
      decode_blob(shorter, r);
    } catch (const IoError&) {
    } catch (const SchemaVersionMismatch&) {
    } catch (...) {
      ADD_FAILURE() << "unexpected exception type at cut " << cut;
    }
  }
  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x40;
  DatasetRecord r;
  EXPECT_THROW(decode_blob(flipped, r), IoError);

  auto wrong_magic = bytes;
  wrong_magic[0] = 'X';
  EXPECT_THROW(decode_blob(wrong_magic, r), SchemaVersionMismatch);

  test::TempDir dir;
  write_records(dir.path(), {rec});
  {
    std::ofstream out(dir.path() / "blobs" / "cube-0000.bin", std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), 100);
  }
  EXPECT_THROW(read_records(dir.path()), IoError);
}

TEST(Persistence, SchemaVersionChecked) {
  auto rec = cube_seed1().record;
  test::TempDir dir;
  write_records(dir.path(), {rec});
  auto entry = read_index(dir.path()).at(0);
  entry["schema_version"] = 2;
  EXPECT_THROW(read_record(dir.path(), entry), SchemaVersionMismatch);
}

TEST(Persistence, CubeIndexLineMatchesGoldenSchema) {
  const auto entry = index_entry(cube_seed1().record);
  const auto golden_path = std::filesystem::path(GRASPKIT_TEST_DATA) / "cube_index_schema.json";
  if (std::getenv("GRASPKIT_REGEN_GOLDEN")) {
    std::ofstream(golden_path) << skeleton(entry).dump(2) << '\n';
    GTEST_SKIP() << "golden file regenerated";
  }
  std::ifstream in(golden_path);
  ASSERT_TRUE(in) << golden_path;
  const auto golden = json::parse(in);
  EXPECT_EQ(skeleton(entry), golden) << skeleton(entry).dump(2);
}

TEST(Split, SizesDisjointAndHardInTest) {
  std::vector<DatasetRecord> recs(100);
  for (int i = 0; i < 100; ++i) {
    recs[i].instance_id = "r" + std::to_string(i);
    recs[i].hard.is_hard = i % 7 == 0;
  }
  const auto s = split_dataset(recs, {0.8, 0.1, 0.1}, 4);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.val.size(), 10u);
  EXPECT_EQ(s.test.size(), 10u);
  std::set<std::string> all;
  for (const auto* part : {&s.train, &s.val, &s.test}) all.insert(part->begin(), part->end());
  EXPECT_EQ(all.size(), 100u);
  const std::set<std::string> test(s.test.begin(), s.test.end());
  for (const auto& h : s.hard) {
    EXPECT_TRUE(test.count(h));
    EXPECT_EQ(std::stoi(h.substr(1)) % 7, 0);
  }
  for (const auto& t : s.test)
    if (std::stoi(t.substr(1)) % 7 == 0) EXPECT_NE(std::find(s.hard.begin(), s.hard.end(), t), s.hard.end());

  const auto again = split_dataset(recs, {0.8, 0.1, 0.1}, 4);
  EXPECT_EQ(again.train, s.train);
  EXPECT_NE(split_dataset(recs, {0.8, 0.1, 0.1}, 5).train, s.train);
}

TEST(Split, RandomSizesArePartitions) {
  for (int n : {0, 1, 7, 33, 250}) {
    std::vector<DatasetRecord> recs(n);
    for (int i = 0; i < n; ++i) recs[i].instance_id = std::to_string(i);
    const auto s = split_dataset(recs, {0.8968, 0.0516, 0.0516}, n);
    EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), static_cast<std::size_t>(n));
    std::set<std::string> all;
    for (const auto* part : {&s.train, &s.val, &s.test}) all.insert(part->begin(), part->end());
    EXPECT_EQ(all.size(), static_cast<std::size_t>(n));
  }
  EXPECT_THROW(split_dataset({}, {0.5, 0.2, 0.2}, 0), DomainError);
}

TEST(Verify, DetectsTampering) {
  const auto rec = cube_seed1().record;
  auto bad_prob = rec;
  bad_prob.prob(0) += 1e-6;
  EXPECT_FALSE(verify_record(bad_prob).empty());
  auto bad_pair = rec;
  bad_pair.positive_pairs[0][0] = 5000;
  EXPECT_FALSE(verify_record(bad_pair).empty());
  auto overlap = rec;
  overlap.negative_pairs.push_back(rec.positive_pairs[0]);
  EXPECT_FALSE(verify_record(overlap).empty());
  auto weak = rec;
  for (auto& p : weak.parts) p.force_cap = 0.01;
  EXPECT_FALSE(verify_record(weak).empty());
  // Caps low enough that gravity cannot be held.
  auto feeble = rec;
  feeble.contact.force_scale = 1e-3;
  for (auto& p : feeble.parts) p.force_cap = feeble.contact.cap_for(p.material.fragility);
  const auto problems = verify_record(feeble);
  EXPECT_NE(std::find_if(problems.begin(), problems.end(),
                         [](const std::string& m) { return m.find("not force closure") != std::string::npos; }),
            problems.end());
}
