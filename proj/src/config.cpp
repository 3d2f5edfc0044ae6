#include "graspkit/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "graspkit/errors.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

using nlohmann::json;

namespace {

std::string_view ray_mode_name(RayMode m) { return m == RayMode::ComVertical ? "com_vertical" : "bounding_ball"; }

RayMode ray_mode_from(const std::string& s) {
  if (s == "com_vertical") return RayMode::ComVertical;
  if (s == "bounding_ball") return RayMode::BoundingBall;
  throw ConfigError("unknown candidates.ray_mode '" + s + "'");
}

std::string_view open_shell_name(OpenShellPolicy p) {
  return p == OpenShellPolicy::Strict ? "strict" : "convex_hull";
}

OpenShellPolicy open_shell_from(const std::string& s) {
  if (s == "strict") return OpenShellPolicy::Strict;
  if (s == "convex_hull") return OpenShellPolicy::ConvexHullFallback;
  throw ConfigError("unknown open_shell '" + s + "'");
}

// Sub-objects whose keys are user data rather than schema.
bool free_form(const std::string& path) { return path == "priors.keywords"; }

void check_known(const json& user, const json& base, const std::string& path) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string sub = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + sub + "'");
    if (value.is_object() && base[key].is_object() && !free_form(sub)) check_known(value, base[key], sub);
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

// Character-level reader for the TOML subset.
class TomlReader {
 public:
  explicit TomlReader(const std::string& text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_space(true);
      if (eof()) break;
      if (peek() == '[') {
        const bool array_table = s_.compare(pos_, 2, "[[") == 0;
        pos_ += array_table ? 2 : 1;
        const auto path = parse_key();
        expect(array_table ? "]]" : "]");
        json* node = &root;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) node = &descend(*node, path[i]);
        if (array_table) {
          json& arr = (*node)[path.back()];
          if (arr.is_null()) arr = json::array();
          if (!arr.is_array()) fail("'" + path.back() + "' is not an array of tables");
          arr.push_back(json::object());
          table = &arr.back();
        } else {
          json& t = descend(*node, path.back());
          table = &t;
        }
      } else {
        const auto path = parse_key();
        skip_space(false);
        expect("=");
        json value = parse_value();
        json* node = table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) node = &descend(*node, path[i]);
        if (node->contains(path.back())) fail("duplicate key '" + path.back() + "'");
        (*node)[path.back()] = std::move(value);
      }
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) line += s_[i] == '\n';
    throw ConfigError("TOML line " + std::to_string(line) + ": " + what);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  void skip_space(bool newlines) {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n')) {
        ++pos_;
      } else if (c == '#') {
        while (!eof() && peek() != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_space(false);
    if (!eof() && peek() != '\n') fail("unexpected trailing characters");
  }

  void expect(std::string_view token) {
    skip_space(false);
    if (s_.compare(pos_, token.size(), token) != 0) fail("expected '" + std::string(token) + "'");
    pos_ += token.size();
  }

  json& descend(json& node, const std::string& key) {
    json& child = node[key];
    if (child.is_null()) child = json::object();
    if (child.is_array() && !child.empty() && child.back().is_object()) return child.back();
    if (!child.is_object()) fail("'" + key + "' is not a table");
    return child;
  }

  std::vector<std::string> parse_key() {
    std::vector<std::string> parts;
    while (true) {
      skip_space(false);
      if (peek() == '"') {
        parts.push_back(parse_string());
      } else {
        const auto start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
        if (pos_ == start) fail("expected a key");
        parts.push_back(s_.substr(start, pos_ - start));
      }
      skip_space(false);
      if (peek() != '.') break;
      ++pos_;
    }
    return parts;
  }

  std::string parse_string() {
    const char quote = peek();
    ++pos_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == quote) break;
      if (c == '\\' && quote == '"') {
        if (eof()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  json parse_value() {
    skip_space(false);
    const char c = peek();
    if (c == '"' || c == '\'') return parse_string();
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      while (true) {
        skip_space(true);
        if (peek() == ']') {
          ++pos_;
          return arr;
        }
        arr.push_back(parse_value());
        skip_space(true);
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
    }
    if (c == '{') {
      ++pos_;
      json obj = json::object();
      skip_space(false);
      if (peek() == '}') {
        ++pos_;
        return obj;
      }
      while (true) {
        const auto key = parse_key();
        expect("=");
        json* node = &obj;
        for (std::size_t i = 0; i + 1 < key.size(); ++i) node = &descend(*node, key[i]);
        (*node)[key.back()] = parse_value();
        skip_space(false);
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect("}");
        return obj;
      }
    }
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    return parse_number();
  }

  json parse_number() {
    const auto start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_'))
      ++pos_;
    std::string token;
    for (auto i = start; i < pos_; ++i)
      if (s_[i] != '_') token += s_[i];
    if (token.empty()) fail("expected a value");
    const bool is_float = token.find_first_of(".eE") != std::string::npos || token == "inf" || token == "nan";
    if (!is_float) {
      std::int64_t v = 0;
      const auto body = token[0] == '+' ? std::string_view(token).substr(1) : std::string_view(token);
      auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
      if (ec == std::errc() && p == body.data() + body.size()) return v;
      std::uint64_t u = 0;
      auto [pu, ecu] = std::from_chars(body.data(), body.data() + body.size(), u);
      if (ecu == std::errc() && pu == body.data() + body.size()) return u;
      fail("bad integer '" + token + "'");
    }
    char* end = nullptr;
    const double d = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) fail("bad number '" + token + "'");
    return d;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json to_json(const Config& c) {
  json disturbances = json::array();
  for (const auto& d : c.label.disturbances) disturbances.push_back(std::vector<double>(d.data(), d.data() + 6));
  json meshes = json::array();
  for (const auto& m : c.meshes) meshes.push_back({{"object_id", m.object_id}, {"mesh", m.mesh}, {"parts", m.parts}});
  return {
      {"seed", c.seed},
      {"num_points", c.num_points},
      {"instances_per_object", c.instances_per_object},
      {"max_retries", c.max_retries},
      {"sigma_fraction", c.sigma_fraction},
      {"quality_weighting", c.quality_weighting},
      {"workers", c.workers},
      {"split", c.split},
      {"auc_threshold", c.auc_threshold},
      {"materials", to_json(c.materials)},
      {"priors", to_json(c.priors)},
      {"contact",
       {{"fragile_cap", c.contact.fragile_cap},
        {"normal_cap", c.contact.normal_cap},
        {"tough_cap", c.contact.tough_cap},
        {"force_scale", c.contact.force_scale},
        {"cone_edges", c.contact.cone_edges}}},
      {"candidates",
       {{"n_rays", c.candidates.n_rays},
        {"max_width", c.candidates.max_width},
        {"antipodal_margin", c.candidates.antipodal_margin},
        {"ray_mode", ray_mode_name(c.candidates.ray_mode)}}},
      {"label",
       {{"gravity", c.label.gravity},
        {"prior_threshold", c.label.prior_threshold},
        {"negative_ratio", c.label.negative_ratio},
        {"same_surface_angle_deg", c.label.same_surface_angle_deg},
        {"disturbances", disturbances}}},
      {"language",
       {{"density_ratio", c.language.density_ratio},
        {"friction_gap", c.language.friction_gap},
        {"avoid_prior", c.language.avoid_prior},
        {"prefer_prior", c.language.prefer_prior}}},
      {"hard",
       {{"threshold", c.hard.threshold},
        {"friction_factor", c.hard.friction_factor},
        {"density_factor", c.hard.density_factor}}},
      {"open_shell", open_shell_name(c.open_shell)},
      {"gripper", {{"max_width", c.gripper.max_width}, {"max_force", c.gripper.max_force}}},
      {"loss",
       {{"delta_p", c.loss.delta_p},
        {"delta_n", c.loss.delta_n},
        {"lambda", c.loss.lambda},
        {"l1_global", c.loss.l1_global}}},
      {"train",
       {{"instances", c.train.instances},
        {"steps", c.train.steps},
        {"lr", c.train.lr},
        {"points_per_instance", c.train.points_per_instance},
        {"max_pairs", c.train.max_pairs}}},
      {"meshes", meshes},
  };
}

Config config_from_json(const json& user) {
  if (!user.is_object()) throw ConfigError("config must be a table/object");
  const json base = to_json(Config{});
  check_known(user, base, "");
  json j = base;
  j.merge_patch(user);

  Config c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.num_points = j.at("num_points").get<std::size_t>();
    c.instances_per_object = j.at("instances_per_object").get<int>();
    c.max_retries = j.at("max_retries").get<int>();
    c.sigma_fraction = j.at("sigma_fraction").get<double>();
    c.quality_weighting = j.at("quality_weighting").get<bool>();
    c.workers = j.at("workers").get<int>();
    c.split = j.at("split").get<std::array<double, 3>>();
    c.auc_threshold = j.at("auc_threshold").get<double>();
    c.materials = material_table_from_json(j.at("materials"));
    c.priors = prior_policy_from_json(j.at("priors"));

    const auto& ct = j.at("contact");
    c.contact.fragile_cap = ct.at("fragile_cap").get<double>();
    c.contact.normal_cap = ct.at("normal_cap").get<double>();
    c.contact.tough_cap = ct.at("tough_cap").get<double>();
    c.contact.force_scale = ct.at("force_scale").get<double>();
    c.contact.cone_edges = ct.at("cone_edges").get<int>();

    const auto& cd = j.at("candidates");
    c.candidates.n_rays = cd.at("n_rays").get<int>();
    c.candidates.max_width = cd.at("max_width").get<double>();
    c.candidates.antipodal_margin = cd.at("antipodal_margin").get<double>();
    c.candidates.ray_mode = ray_mode_from(cd.at("ray_mode").get<std::string>());

    const auto& lb = j.at("label");
    c.label.gravity = lb.at("gravity").get<double>();
    c.label.prior_threshold = lb.at("prior_threshold").get<double>();
    c.label.negative_ratio = lb.at("negative_ratio").get<double>();
    c.label.same_surface_angle_deg = lb.at("same_surface_angle_deg").get<double>();
    c.label.disturbances.clear();
    for (const auto& d : lb.at("disturbances")) {
      const auto v = d.get<std::vector<double>>();
      require(v.size() == 6, "label.disturbances entries must have 6 components");
      c.label.disturbances.push_back(Wrench<double>(v.data()));
    }

    const auto& lg = j.at("language");
    c.language.density_ratio = lg.at("density_ratio").get<double>();
    c.language.friction_gap = lg.at("friction_gap").get<double>();
    c.language.avoid_prior = lg.at("avoid_prior").get<double>();
    c.language.prefer_prior = lg.at("prefer_prior").get<double>();

    const auto& hd = j.at("hard");
    c.hard.threshold = hd.at("threshold").get<int>();
    c.hard.friction_factor = hd.at("friction_factor").get<double>();
    c.hard.density_factor = hd.at("density_factor").get<double>();

    c.open_shell = open_shell_from(j.at("open_shell").get<std::string>());
    c.gripper.max_width = j.at("gripper").at("max_width").get<double>();
    c.gripper.max_force = j.at("gripper").at("max_force").get<double>();

    const auto& ls = j.at("loss");
    c.loss.delta_p = ls.at("delta_p").get<double>();
    c.loss.delta_n = ls.at("delta_n").get<double>();
    c.loss.lambda = ls.at("lambda").get<double>();
    c.loss.l1_global = ls.at("l1_global").get<bool>();

    const auto& tr = j.at("train");
    c.train.instances = tr.at("instances").get<int>();
    c.train.steps = tr.at("steps").get<int>();
    c.train.lr = tr.at("lr").get<double>();
    c.train.points_per_instance = tr.at("points_per_instance").get<int>();
    c.train.max_pairs = tr.at("max_pairs").get<int>();

    for (const auto& m : j.at("meshes"))
      c.meshes.push_back({m.at("object_id").get<std::string>(), m.at("mesh").get<std::string>(),
                          m.at("parts").get<std::string>()});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  require(c.num_points >= 1, "num_points must be >= 1");
  require(c.instances_per_object >= 1, "instances_per_object must be >= 1");
  require(c.max_retries >= 0, "max_retries must be >= 0");
  require(c.sigma_fraction > 0.0, "sigma_fraction must be > 0");
  require(c.workers >= 1, "workers must be >= 1");
  require(c.split[0] >= 0 && c.split[1] >= 0 && c.split[2] >= 0 &&
              std::abs(c.split[0] + c.split[1] + c.split[2] - 1.0) <= 1e-9,
          "split fractions must be nonnegative and sum to 1");
  require(c.contact.fragile_cap > 0 && c.contact.fragile_cap < c.contact.normal_cap &&
              c.contact.normal_cap < c.contact.tough_cap,
          "contact caps must satisfy 0 < fragile < normal < tough");
  require(c.contact.force_scale > 0, "contact.force_scale must be > 0");
  require(c.contact.cone_edges >= 4, "contact.cone_edges must be >= 4");
  require(c.candidates.n_rays >= 1, "candidates.n_rays must be >= 1");
  require(c.candidates.max_width > 0, "candidates.max_width must be > 0");
  require(c.label.gravity > 0, "label.gravity must be > 0");
  require(c.label.negative_ratio >= 0, "label.negative_ratio must be >= 0");
  require(c.gripper.max_width > 0 && c.gripper.max_force > 0, "gripper limits must be > 0");
  require(c.train.instances >= 1 && c.train.steps >= 0 && c.train.points_per_instance >= 2,
          "train settings out of range");
  try {
    c.loss.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("loss: ") + e.what());
  }
  return c;
}

json parse_toml(const std::string& text) { return TomlReader(text).parse(); }

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  if (path.extension() == ".toml") {
    j = parse_toml(ss.str());
  } else {
    try {
      j = json::parse(ss.str());
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config JSON: ") + e.what());
    }
  }
  Config c = config_from_json(j);
  const auto dir = path.parent_path();
  for (auto& m : c.meshes) {
    if (std::filesystem::path(m.mesh).is_relative()) m.mesh = (dir / m.mesh).lexically_normal().string();
    if (std::filesystem::path(m.parts).is_relative()) m.parts = (dir / m.parts).lexically_normal().string();
  }
  return c;
}

Config apply_overrides(const Config& config, const std::vector<std::string>& overrides) {
  json j = to_json(config);
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + ov + "' is not key=value");
    const std::string key = ov.substr(0, eq), raw = ov.substr(eq + 1);

    std::vector<std::string> path;
    std::stringstream ks(key);
    for (std::string part; std::getline(ks, part, '.');) path.push_back(part);

    json* node = &j;
    std::string walked;
    for (std::size_t i = 0; i < path.size(); ++i) {
      const auto& p = path[i];
      const bool last = i + 1 == path.size();
      if (node->is_array()) {
        std::size_t idx = 0;
        auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), idx);
        if (ec != std::errc() || ptr != p.data() + p.size() || idx >= node->size())
          throw ConfigError("unknown config key '" + key + "'");
        node = &(*node)[idx];
      } else if (node->is_object() && (node->contains(p) || (last && free_form(walked)))) {
        node = &(*node)[p];
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
      walked = walked.empty() ? p : walked + "." + p;
    }
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    *node = value;
  }
  return config_from_json(j);
}

std::string config_hash(const Config& config) {
  json j = to_json(config);
  j.erase("workers");
  j.erase("meshes");
  return hex64(fnv1a64(j.dump()));
}

}  // namespace graspkit
