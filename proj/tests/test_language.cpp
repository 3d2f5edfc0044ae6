#include <map>
#include <set>
#include <memory>
#include <string>

#include <gtest/gtest.h>

#include "graspkit/errors.hpp"
#include "graspkit/fixtures.hpp"
#include "graspkit/language.hpp"
#include "graspkit/rng.hpp"

using namespace graspkit;

namespace {

InstanceSpec make_instance(const std::string& object, PartMesh mesh, const std::map<PartId, Material>& mats,
                           const std::map<PartId, double>& priors = {}, std::uint64_t seed = 1) {
  InstanceSpec s;
  s.object_id = object;
  s.seed = seed;
  for (const auto& [id, m] : mats) {
    const auto it = priors.find(id);
    s.assignments.push_back({id, m, it == priors.end() ? 0.7 : it->second});
  }
  s.mesh = std::make_shared<PartMesh>(std::move(mesh));
  return s;
}

const Material& mat(const char* name) { return find_material(builtin_materials(), name); }

Material custom(const std::string& name, double density, double friction,
                Fragility f = Fragility::Normal, bool uncommon = false) {
  return {name, density, friction, f, uncommon};
}

PartMesh two_boxes(const std::string& a, const std::string& b) {
  return MeshBuilder()
      .add_box(0, a, {0, 0, 0}, {0.1, 0.1, 0.1})
      .add_box(1, b, {0, 0, 0.1}, {0.1, 0.1, 0.1})
      .build();
}

bool emphasizes(const LanguageSummary& s, PartId p, Claim c) {
  for (const auto& e : s.emphasized)
    if (e.part == p && e.claim == c) return true;
  return false;
}

}  // namespace

TEST(Summary, FaucetNamesDensestAndGrippiestParts) {
  const auto faucet = faucet_fixture();
  // Parts: 0 switch, 1 frame, 2 spout.
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto inst = make_instance("faucet", faucet,
                                    {{0, mat("plastic")}, {1, mat("brass")}, {2, mat("fiberglass")}}, {}, seed);
    const auto s = summarize_instance(inst);
    EXPECT_TRUE(emphasizes(s, 1, Claim::HighestDensity)) << s.text;
    EXPECT_TRUE(emphasizes(s, 2, Claim::HighestFriction)) << s.text;
    EXPECT_NE(s.text.find("brass with the highest density"), std::string::npos) << s.text;
    EXPECT_NE(s.text.find("fiberglass with the highest friction"), std::string::npos) << s.text;
    EXPECT_EQ(check_summary(s, inst), "");
  }
}

TEST(Summary, SinglePartHasNoSuperlatives) {
  const auto inst =
      make_instance("block", MeshBuilder().add_box(0, "body", {0, 0, 0}, {0.1, 0.1, 0.1}).build(),
                    {{0, mat("wood")}});
  const auto s = summarize_instance(inst);
  EXPECT_NE(s.text.find("block"), std::string::npos);
  EXPECT_NE(s.text.find("wood"), std::string::npos);
  EXPECT_EQ(s.text.find("highest"), std::string::npos);
  EXPECT_EQ(s.text.find("lowest"), std::string::npos);
  EXPECT_EQ(check_summary(s, inst), "");
}

TEST(Summary, DensityClauseGatedByRatio) {
  const auto mesh = two_boxes("top", "bottom");
  const auto close = make_instance("box", mesh, {{0, custom("alpha", 1400, 0.5)}, {1, custom("beta", 1450, 0.5)}});
  const auto s = summarize_instance(close);
  EXPECT_EQ(s.text.find("density"), std::string::npos) << s.text;
  EXPECT_EQ(check_summary(s, close), "");

  const auto far = make_instance("box", mesh, {{0, custom("alpha", 1000, 0.5)}, {1, custom("beta", 1300, 0.5)}});
  const auto t = summarize_instance(far);
  EXPECT_TRUE(emphasizes(t, 1, Claim::HighestDensity)) << t.text;
}

TEST(Summary, FrictionGateIsAbsolute) {
  const auto mesh = two_boxes("top", "bottom");
  const auto close = make_instance("box", mesh, {{0, custom("alpha", 1000, 0.50)}, {1, custom("beta", 1000, 0.58)}});
  EXPECT_EQ(summarize_instance(close).text.find("friction"), std::string::npos);
  const auto far = make_instance("box", mesh, {{0, custom("alpha", 1000, 0.50)}, {1, custom("beta", 1000, 0.65)}});
  EXPECT_TRUE(emphasizes(summarize_instance(far), 1, Claim::HighestFriction));
}

TEST(Summary, PureAndGuided) {
  const auto inst = make_instance("knife", knife_fixture(), {{0, mat("wood")}, {1, mat("steel")}},
                                  {{0, 1.0}, {1, 0.05}}, 4);
  const auto a = summarize_instance(inst);
  const auto b = summarize_instance(inst);
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.emphasized, b.emphasized);
  EXPECT_TRUE(emphasizes(a, 1, Claim::Avoid)) << a.text;
  EXPECT_TRUE(emphasizes(a, 0, Claim::Prefer)) << a.text;
  EXPECT_EQ(check_summary(a, inst), "");
}

TEST(Summary, PatternVariesWithSeedButClaimsDoNot) {
  std::set<std::string> texts;
  std::vector<Emphasis> first;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = make_instance("mug", mug_fixture(), {{0, mat("glass")}, {1, mat("rubber")}}, {}, seed);
    const auto s = summarize_instance(inst);
    texts.insert(s.text);
    if (seed == 0) first = s.emphasized;
    EXPECT_EQ(s.emphasized, first);
  }
  EXPECT_GT(texts.size(), 1u);
}

TEST(Summary, EmptyInstanceThrows) {
  InstanceSpec s;
  EXPECT_THROW(summarize_instance(s), EmptyInstance);
}

TEST(CheckSummary, RejectsFalseClaims) {
  const auto faucet = faucet_fixture();
  const auto inst = make_instance("faucet", faucet, {{0, mat("plastic")}, {1, mat("brass")}, {2, mat("fiberglass")}});
  auto s = summarize_instance(inst);
  ASSERT_EQ(check_summary(s, inst), "");

  auto wrong_part = s;
  for (auto& e : wrong_part.emphasized)
    if (e.claim == Claim::HighestDensity) e.part = 0;
  EXPECT_NE(check_summary(wrong_part, inst), "");

  auto dropped = s;
  std::erase_if(dropped.emphasized, [](const Emphasis& e) { return e.claim == Claim::HighestFriction; });
  EXPECT_NE(check_summary(dropped, inst), "");

  auto foreign = s;
  foreign.text += " The spout is granite.";
  EXPECT_NE(check_summary(foreign, inst), "");

  auto empty = s;
  empty.text.clear();
  EXPECT_NE(check_summary(empty, inst), "");
}

TEST(HardSet, FragileUncommonGuidedLampIsHard) {
  // Parts: 0 base, 1 pole, 2 shade.
  const auto inst = make_instance("lamp", lamp_fixture(),
                                  {{0, mat("titanium")}, {1, mat("glass")}, {2, mat("glass")}}, {{0, 1.0}});
  const auto s = summarize_instance(inst);
  EXPECT_TRUE(emphasizes(s, 0, Claim::Prefer)) << s.text;
  const auto v = classify_hard(s, inst, builtin_materials());
  EXPECT_TRUE(v.criteria_hit[kUncommonMaterial]);
  EXPECT_TRUE(v.criteria_hit[kFragile]);
  EXPECT_TRUE(v.criteria_hit[kSpecificGuidance]);
  EXPECT_GE(v.score, 3);
  EXPECT_TRUE(v.is_hard);
}

TEST(HardSet, PlasticBoxIsEasy) {
  const auto inst = make_instance("box", two_boxes("lid", "tray"), {{0, mat("plastic")}, {1, mat("plastic")}});
  const auto v = classify_hard(summarize_instance(inst), inst, builtin_materials());
  EXPECT_EQ(v.score, 0);
  EXPECT_FALSE(v.is_hard);
}

TEST(HardSet, ThresholdDefinesVerdict) {
  const auto inst = make_instance("mug", mug_fixture(), {{0, mat("copper")}, {1, mat("rubber")}});
  const auto s = summarize_instance(inst);
  for (int threshold = 0; threshold <= 5; ++threshold) {
    HardSetConfig cfg;
    cfg.threshold = threshold;
    const auto v = classify_hard(s, inst, builtin_materials(), cfg);
    EXPECT_EQ(v.score, 2);  // heavy copper, grippy rubber
    EXPECT_EQ(v.is_hard, v.score >= threshold);
  }
}

TEST(HardSet, AddingFragilePartNeverLowersScore) {
  const auto& table = builtin_materials();
  Rng rng(21);
  const auto two_parts = two_boxes("lid", "tray");
  const auto three_parts = MeshBuilder()
                               .add_box(0, "lid", {0, 0, 0}, {0.1, 0.1, 0.1})
                               .add_box(1, "tray", {0, 0, 0.1}, {0.1, 0.1, 0.1})
                               .add_box(2, "knob", {0, 0, 0.2}, {0.05, 0.05, 0.05})
                               .build();
  for (int t = 0; t < 200; ++t) {
    std::map<PartId, Material> two = {{0, table[rng.below(table.size())]}, {1, table[rng.below(table.size())]}};
    const auto before = make_instance("box", two_parts, two);
    auto three = two;
    three[2] = mat(rng.below(2) ? "glass" : "porcelain");
    const auto after = make_instance("box", three_parts, three);
    const int s0 = classify_hard(summarize_instance(before), before, table).score;
    const int s1 = classify_hard(summarize_instance(after), after, table).score;
    EXPECT_GE(s1, s0);
  }
}

TEST(HardSet, FractionOnTenThousandDeskInstances) {
  // Hard flags depend only on materials, priors and the summary, so the
  // statistic is taken over material draws for the five desk meshes.
  const auto& table = builtin_materials();
  const auto desk = desk_fixtures();
  int hard = 0, total = 0;
  for (const auto& [id, mesh] : desk) {
    auto shared = std::make_shared<PartMesh>(mesh);
    for (std::uint64_t k = 0; k < 2000; ++k) {
      InstanceSpec s;
      s.object_id = id;
      s.mesh = shared;
      s.seed = derive_seed(k, id);
      s.assignments = assign_materials(mesh, s.seed, table);
      const auto summary = summarize_instance(s);
      EXPECT_EQ(check_summary(summary, s), "");
      hard += classify_hard(summary, s, table).is_hard;
      ++total;
    }
  }
  const double frac = static_cast<double>(hard) / total;
  EXPECT_GE(frac, 0.01);
  EXPECT_LE(frac, 0.10);
  RecordProperty("hard_fraction", std::to_string(frac));
}
