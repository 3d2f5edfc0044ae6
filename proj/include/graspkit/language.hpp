#pragma once

#include <array>
#include <string>
#include <vector>

#include "graspkit/materials.hpp"

namespace graspkit {

/// A property a summary asserts about one part.
enum class Claim {
  Material,
  HighestDensity,
  LowestDensity,
  HighestFriction,
  LowestFriction,
  Fragile,
  Avoid,
  Prefer,
};

std::string_view to_string(Claim c);

struct Emphasis {
  PartId part = 0;
  Claim claim = Claim::Material;

  friend bool operator==(const Emphasis&, const Emphasis&) = default;
};

struct LanguageSummary {
  std::string text;
  std::vector<Emphasis> emphasized;
};

struct LanguageConfig {
  double density_ratio = 1.25;  // densest/second densest must exceed this
  double friction_gap = 0.1;    // absolute friction gap to call a part out
  double avoid_prior = 0.1;     // parts below this prior get an "avoid" clause
  double prefer_prior = 0.5;    // minimum prior for a part to be recommended
};

/// Template-based description of an instance. Pattern choice is seeded by
/// the instance seed; the set of claims does not depend on it.
LanguageSummary summarize_instance(const InstanceSpec& instance, const LanguageConfig& config = {});

/// Re-derives every superlative, fragility and guidance claim from the
/// instance's property table. Returns an empty string when consistent,
/// otherwise a description of the first problem found.
std::string check_summary(const LanguageSummary& summary, const InstanceSpec& instance,
                          const LanguageConfig& config = {});

enum HardCriterion { kUncommonMaterial, kHighFriction, kHeavyDensity, kFragile, kSpecificGuidance };

struct HardSetVerdict {
  bool is_hard = false;
  int score = 0;
  std::array<bool, 5> criteria_hit{};
};

struct HardSetConfig {
  int threshold = 3;
  /// A part counts as high friction above friction_factor * median table friction.
  double friction_factor = 1.8;
  /// A part counts as heavy above density_factor * median table density.
  double density_factor = 3.6;
};

/// Scores the five counter-intuitiveness criteria. Each is an existence test
/// over parts, so adding a part never lowers the score.
HardSetVerdict classify_hard(const LanguageSummary& summary, const InstanceSpec& instance,
                             const MaterialTable& table, const HardSetConfig& config = {});

}  // namespace graspkit
