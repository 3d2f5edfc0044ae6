#include "graspkit/language.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <map>
#include <sstream>

#include "graspkit/errors.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

std::string_view to_string(Claim c) {
  switch (c) {
    case Claim::Material: return "material";
    case Claim::HighestDensity: return "highest_density";
    case Claim::LowestDensity: return "lowest_density";
    case Claim::HighestFriction: return "highest_friction";
    case Claim::LowestFriction: return "lowest_friction";
    case Claim::Fragile: return "fragile";
    case Claim::Avoid: return "avoid";
    case Claim::Prefer: return "prefer";
  }
  return "material";
}

namespace {

struct PartRow {
  PartId id;
  std::string name;  // display name, unique within the instance
  const PartAssignment* assignment;
};

std::vector<PartRow> part_rows(const InstanceSpec& instance) {
  if (!instance.mesh) throw EmptyInstance("instance has no mesh");
  std::map<std::string, int> counts;
  for (const auto& [id, name] : instance.mesh->part_names) ++counts[name];
  std::map<std::string, int> seen;
  std::vector<PartRow> rows;
  for (const auto& [id, name] : instance.mesh->part_names) {
    std::string display = name;
    std::replace(display.begin(), display.end(), '_', ' ');
    if (counts[name] > 1) display += " " + std::to_string(++seen[name]);
    rows.push_back({id, display, &assignment_for(instance.assignments, id)});
  }
  if (rows.empty()) throw EmptyInstance("instance has no parts");
  return rows;
}

std::string object_name(const InstanceSpec& instance) {
  std::string s = instance.object_id.empty() ? "object" : instance.object_id;
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

std::string count_word(std::size_t n) {
  static const char* words[] = {"zero", "one", "two", "three", "four", "five",
                                "six",  "seven", "eight", "nine", "ten"};
  return n <= 10 ? words[n] : std::to_string(n);
}

std::string join_list(const std::vector<std::string>& items) {
  if (items.size() == 1) return items[0];
  if (items.size() == 2) return items[0] + " and " + items[1];
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    if (i + 1 == items.size()) out += "and ";
    out += items[i];
  }
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

// Index of the unique extreme row if it beats the runner-up by `beats`.
template <typename Key, typename Beats>
std::optional<std::size_t> standout(const std::vector<PartRow>& rows, Key key, Beats beats) {
  if (rows.size() < 2) return std::nullopt;
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(rows[a]) > key(rows[b]); });
  if (beats(key(rows[order[0]]), key(rows[order[1]]))) return order[0];
  return std::nullopt;
}

}  // namespace

LanguageSummary summarize_instance(const InstanceSpec& instance, const LanguageConfig& config) {
  const auto rows = part_rows(instance);
  Rng rng(derive_seed(instance.seed, "language"));
  const auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng.below(n)); };

  LanguageSummary out;
  std::map<PartId, std::vector<std::string>> superlatives;

  const auto density = [](const PartRow& r) { return r.assignment->material.density; };
  const auto neg_density = [](const PartRow& r) { return -r.assignment->material.density; };
  const auto friction = [](const PartRow& r) { return r.assignment->material.friction; };
  const auto neg_friction = [](const PartRow& r) { return -r.assignment->material.friction; };
  const double ratio = config.density_ratio, gap = config.friction_gap;

  if (auto i = standout(rows, density, [&](double a, double b) { return a > ratio * b; })) {
    out.emphasized.push_back({rows[*i].id, Claim::HighestDensity});
    superlatives[rows[*i].id].push_back("the highest density");
  } else if (auto j = standout(rows, neg_density, [&](double a, double b) { return -b > -a * ratio; })) {
    out.emphasized.push_back({rows[*j].id, Claim::LowestDensity});
    superlatives[rows[*j].id].push_back("the lowest density");
  }
  if (auto i = standout(rows, friction, [&](double a, double b) { return a - b > gap; })) {
    out.emphasized.push_back({rows[*i].id, Claim::HighestFriction});
    superlatives[rows[*i].id].push_back("the highest friction");
  }
  if (rows.size() >= 3)
    if (auto i = standout(rows, neg_friction, [&](double a, double b) { return a - b > gap; })) {
      out.emphasized.push_back({rows[*i].id, Claim::LowestFriction});
      superlatives[rows[*i].id].push_back("the lowest friction");
    }

  std::ostringstream text;
  const std::string obj = object_name(instance);
  if (rows.size() == 1) {
    const auto& r = rows[0];
    static const char* single[] = {"The {o} is made of {m}.", "This {o} is made entirely of {m}.",
                                   "The {o} is a single {m} piece."};
    std::string s = single[pick(3)];
    s.replace(s.find("{o}"), 3, obj);
    s.replace(s.find("{m}"), 3, r.assignment->material.name);
    text << s;
    out.emphasized.push_back({r.id, Claim::Material});
  } else {
    std::vector<std::string> names;
    for (const auto& r : rows) names.push_back(r.name);
    static const char* intro[] = {"The {o} has {n} parts: {l}.", "This {o} consists of {n} parts: {l}."};
    std::string s = intro[pick(2)];
    s.replace(s.find("{o}"), 3, obj);
    s.replace(s.find("{n}"), 3, count_word(rows.size()));
    s.replace(s.find("{l}"), 3, join_list(names));
    text << s;
    static const char* clause[] = {"The {p} is made of {m}", "The {p}'s material is {m}",
                                   "The {p} is {m}"};
    for (const auto& r : rows) {
      std::string c = clause[pick(3)];
      c.replace(c.find("{p}"), 3, r.name);
      c.replace(c.find("{m}"), 3, r.assignment->material.name);
      if (auto it = superlatives.find(r.id); it != superlatives.end()) {
        c += " with ";
        for (std::size_t k = 0; k < it->second.size(); ++k) c += (k ? " and " : "") + it->second[k];
      }
      text << ' ' << c << '.';
      out.emphasized.push_back({r.id, Claim::Material});
    }
  }

  bool any_fragile = false;
  for (const auto& r : rows) {
    if (r.assignment->material.fragility != Fragility::Fragile) continue;
    any_fragile = true;
    static const char* fragile[] = {"The {p} is fragile and needs a gentle grip.",
                                    "Handle the {p} with care because it is fragile."};
    std::string s = fragile[pick(2)];
    s.replace(s.find("{p}"), 3, rows.size() == 1 ? obj : r.name);
    text << ' ' << s;
    out.emphasized.push_back({r.id, Claim::Fragile});
  }

  bool any_avoid = false;
  for (const auto& r : rows) {
    if (!(r.assignment->grasp_prior < config.avoid_prior)) continue;
    any_avoid = true;
    static const char* avoid[] = {"Avoid grasping the {p}.", "Do not grasp the {p}."};
    std::string s = avoid[pick(2)];
    s.replace(s.find("{p}"), 3, rows.size() == 1 ? obj : r.name);
    text << ' ' << s;
    out.emphasized.push_back({r.id, Claim::Avoid});
  }

  const PartRow* preferred = nullptr;
  if ((any_fragile || any_avoid) && rows.size() > 1) {
    for (const auto& r : rows) {
      const auto& a = *r.assignment;
      if (a.material.fragility == Fragility::Fragile || a.grasp_prior < config.prefer_prior) continue;
      if (!preferred) {
        preferred = &r;
        continue;
      }
      const auto& b = *preferred->assignment;
      if (a.grasp_prior > b.grasp_prior ||
          (a.grasp_prior == b.grasp_prior && a.material.fragility == Fragility::Tough &&
           b.material.fragility != Fragility::Tough))
        preferred = &r;
    }
  }
  if (preferred) {
    static const char* prefer[] = {"It is best to grasp the {p}.", "Grasp it by the {p}."};
    std::string s = prefer[pick(2)];
    s.replace(s.find("{p}"), 3, preferred->name);
    text << ' ' << s;
    out.emphasized.push_back({preferred->id, Claim::Prefer});
  } else if (!any_avoid) {
    static const char* generic[] = {"It can be grasped on any part with ordinary care.",
                                    "Any part is suitable for grasping."};
    text << ' ' << generic[pick(2)];
  }

  out.text = text.str();
  return out;
}

std::string check_summary(const LanguageSummary& summary, const InstanceSpec& instance,
                          const LanguageConfig& config) {
  const auto rows = part_rows(instance);
  std::map<PartId, const PartRow*> by_id;
  for (const auto& r : rows) by_id[r.id] = &r;
  auto has = [&](PartId id, Claim c) {
    return std::find(summary.emphasized.begin(), summary.emphasized.end(), Emphasis{id, c}) !=
           summary.emphasized.end();
  };
  const auto& text = summary.text;
  if (text.empty()) return "empty text";

  // Pairwise definitions of each superlative.
  auto dominates = [&](const PartRow& p, auto pred) {
    if (rows.size() < 2) return false;
    for (const auto& q : rows)
      if (q.id != p.id && !pred(*p.assignment, *q.assignment)) return false;
    return true;
  };
  auto densest = [&](const PartAssignment& a, const PartAssignment& b) {
    return a.material.density > config.density_ratio * b.material.density;
  };
  auto lightest = [&](const PartAssignment& a, const PartAssignment& b) {
    return b.material.density > config.density_ratio * a.material.density;
  };
  auto grippiest = [&](const PartAssignment& a, const PartAssignment& b) {
    return a.material.friction - b.material.friction > config.friction_gap;
  };
  auto slipperiest = [&](const PartAssignment& a, const PartAssignment& b) {
    return b.material.friction - a.material.friction > config.friction_gap;
  };

  std::size_t superlative_claims = 0;
  bool any_densest = false;
  for (const auto& e : summary.emphasized) {
    auto it = by_id.find(e.part);
    if (it == by_id.end()) return "claim about unknown part " + std::to_string(e.part);
    const PartRow& p = *it->second;
    const std::string name = rows.size() == 1 ? object_name(instance) : p.name;
    switch (e.claim) {
      case Claim::HighestDensity:
        if (!dominates(p, densest)) return p.name + " is not clearly the densest part";
        ++superlative_claims;
        break;
      case Claim::LowestDensity:
        if (!dominates(p, lightest)) return p.name + " is not clearly the lightest part";
        ++superlative_claims;
        break;
      case Claim::HighestFriction:
        if (!dominates(p, grippiest)) return p.name + " is not clearly the highest-friction part";
        ++superlative_claims;
        break;
      case Claim::LowestFriction:
        if (!dominates(p, slipperiest)) return p.name + " is not clearly the lowest-friction part";
        ++superlative_claims;
        break;
      case Claim::Fragile:
        if (p.assignment->material.fragility != Fragility::Fragile) return p.name + " is not fragile";
        break;
      case Claim::Avoid:
        if (!(p.assignment->grasp_prior < config.avoid_prior)) return p.name + " should not be avoided";
        break;
      case Claim::Prefer:
        if (p.assignment->material.fragility == Fragility::Fragile ||
            p.assignment->grasp_prior < config.prefer_prior)
          return p.name + " is not a sound grasp recommendation";
        break;
      case Claim::Material:
        if (text.find(p.assignment->material.name) == std::string::npos)
          return "material of " + p.name + " not named";
        break;
    }
    if (text.find(name) == std::string::npos) return "part " + name + " not named in text";
  }

  for (const auto& p : rows) {
    any_densest = any_densest || dominates(p, densest);
    if (dominates(p, densest) && !has(p.id, Claim::HighestDensity)) return "densest part not reported";
    if (dominates(p, grippiest) && !has(p.id, Claim::HighestFriction))
      return "highest-friction part not reported";
    if (p.assignment->material.fragility == Fragility::Fragile && !has(p.id, Claim::Fragile))
      return "fragile part " + p.name + " not reported";
    if (p.assignment->grasp_prior < config.avoid_prior && !has(p.id, Claim::Avoid))
      return "low-prior part " + p.name + " not flagged";
  }
  if (!any_densest)
    for (const auto& p : rows)
      if (dominates(p, lightest) && !has(p.id, Claim::LowestDensity)) return "lightest part not reported";

  std::size_t phrases = 0;
  for (std::string_view word : {"highest", "lowest"})
    for (auto pos = text.find(word); pos != std::string::npos; pos = text.find(word, pos + 1)) ++phrases;
  if (phrases != superlative_claims) return "text superlatives do not match the claim list";

  std::set<std::string> present;
  for (const auto& r : rows) present.insert(r.assignment->material.name);
  for (const auto& m : builtin_materials()) {
    if (present.contains(m.name)) continue;
    // Whole-word search so "plastic" does not match inside another token.
    for (auto pos = text.find(m.name); pos != std::string::npos; pos = text.find(m.name, pos + 1)) {
      const bool left = pos == 0 || !std::isalpha(static_cast<unsigned char>(text[pos - 1]));
      const auto end = pos + m.name.size();
      const bool right = end >= text.size() || !std::isalpha(static_cast<unsigned char>(text[end]));
      if (left && right) return "mentions absent material " + m.name;
    }
  }
  return {};
}

HardSetVerdict classify_hard(const LanguageSummary& summary, const InstanceSpec& instance,
                             const MaterialTable& table, const HardSetConfig& config) {
  auto median = [&](auto field) {
    std::vector<double> v;
    for (const auto& m : table) v.push_back(field(m));
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double friction_line = config.friction_factor * median([](const Material& m) { return m.friction; });
  const double density_line = config.density_factor * median([](const Material& m) { return m.density; });

  HardSetVerdict v;
  for (const auto& a : instance.assignments) {
    v.criteria_hit[kUncommonMaterial] |= a.material.uncommon;
    v.criteria_hit[kHighFriction] |= a.material.friction > friction_line;
    v.criteria_hit[kHeavyDensity] |= a.material.density > density_line;
    v.criteria_hit[kFragile] |= a.material.fragility == Fragility::Fragile;
  }
  for (const auto& e : summary.emphasized)
    v.criteria_hit[kSpecificGuidance] |= e.claim == Claim::Avoid || e.claim == Claim::Prefer;
  v.score = static_cast<int>(std::count(v.criteria_hit.begin(), v.criteria_hit.end(), true));
  v.is_hard = v.score >= config.threshold;
  return v;
}

}  // namespace graspkit
