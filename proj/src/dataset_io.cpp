#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "graspkit/dataset.hpp"
#include "graspkit/errors.hpp"
#include "graspkit/rng.hpp"

// Blob layout, all little-endian:
//   char[8]  "GKBLOB01"
//   u32      schema version
//   u32      n_points, n_positive, n_negative
//   f32      points[n_points][3]
//   f32      normals[n_points][3]
//   i32      part[n_points]
//   f64      prob[n_points]
//   u32      positive[n_positive][2], negative[n_negative][2]
//   per positive grasp: f64 p1[3], p2[3], n1[3], n2[3], min_force; i32 part1, part2
//   u64      FNV-1a of every preceding byte

namespace graspkit {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "blob IO assumes a little-endian host");

constexpr char kBlobMagic[8] = {'G', 'K', 'B', 'L', 'O', 'B', '0', '1'};
constexpr std::size_t kHeaderBytes = 8 + 4 * 4;
constexpr std::size_t kGraspBytes = 13 * 8 + 2 * 4;

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_vec_f32(const Vec3& v) {
    for (int k = 0; k < 3; ++k) put(static_cast<float>(v(k)));
  }
  void put_vec_f64(const Vec3& v) {
    for (int k = 0; k < 3; ++k) put(v(k));
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw IoError("blob truncated");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  Vec3 get_vec_f32() {
    const float x = get<float>(), y = get<float>(), z = get<float>();
    return Vec3(x, y, z);
  }
  Vec3 get_vec_f64() {
    const double x = get<double>(), y = get<double>(), z = get<double>();
    return Vec3(x, y, z);
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::uint64_t checksum(const std::uint8_t* data, std::size_t n) {
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(data), n));
}

Claim claim_from_string(const std::string& s) {
  for (auto c : {Claim::Material, Claim::HighestDensity, Claim::LowestDensity, Claim::HighestFriction,
                 Claim::LowestFriction, Claim::Fragile, Claim::Avoid, Claim::Prefer})
    if (to_string(c) == s) return c;
  throw SchemaVersionMismatch("unknown claim '" + s + "'");
}

std::string blob_name(const std::string& instance_id) { return "blobs/" + instance_id + ".bin"; }

}  // namespace

std::vector<std::uint8_t> encode_blob(const DatasetRecord& r) {
  const std::size_t n = r.points.size();
  if (r.normals.size() != n || r.point_part.size() != n || static_cast<std::size_t>(r.prob.size()) != n ||
      r.positive_grasps.size() != r.positive_pairs.size())
    throw ShapeMismatch("record arrays are inconsistent: " + r.instance_id);
  Writer w;
  w.bytes.insert(w.bytes.end(), kBlobMagic, kBlobMagic + 8);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(r.schema_version));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(n));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(r.positive_pairs.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(r.negative_pairs.size()));
  for (const auto& p : r.points) w.put_vec_f32(p);
  for (const auto& v : r.normals) w.put_vec_f32(v);
  for (auto part : r.point_part) w.put<std::int32_t>(part);
  for (Eigen::Index i = 0; i < r.prob.size(); ++i) w.put<double>(r.prob(i));
  for (const auto& p : r.positive_pairs) w.put(p[0]), w.put(p[1]);
  for (const auto& p : r.negative_pairs) w.put(p[0]), w.put(p[1]);
  for (const auto& g : r.positive_grasps) {
    w.put_vec_f64(g.position[0]);
    w.put_vec_f64(g.position[1]);
    w.put_vec_f64(g.normal[0]);
    w.put_vec_f64(g.normal[1]);
    w.put(g.min_force);
    w.put<std::int32_t>(g.part[0]);
    w.put<std::int32_t>(g.part[1]);
  }
  w.put<std::uint64_t>(checksum(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

void decode_blob(const std::vector<std::uint8_t>& bytes, DatasetRecord& r) {
  if (bytes.size() < kHeaderBytes + 8) throw IoError("blob truncated");
  if (std::memcmp(bytes.data(), kBlobMagic, 8) != 0) throw SchemaVersionMismatch("not a record blob");
  Reader in(bytes);
  for (int i = 0; i < 8; ++i) in.get<char>();
  const auto version = in.get<std::uint32_t>();
  if (version != static_cast<std::uint32_t>(kSchemaVersion))
    throw SchemaVersionMismatch("blob schema version " + std::to_string(version));
  const std::size_t n = in.get<std::uint32_t>();
  const std::size_t n_pos = in.get<std::uint32_t>();
  const std::size_t n_neg = in.get<std::uint32_t>();
  const std::size_t expected =
      kHeaderBytes + n * (3 * 4 + 3 * 4 + 4 + 8) + (n_pos + n_neg) * 8 + n_pos * kGraspBytes + 8;
  if (bytes.size() != expected)
    throw IoError("blob size " + std::to_string(bytes.size()) + " != expected " + std::to_string(expected));
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  if (stored != checksum(bytes.data(), bytes.size() - 8)) throw IoError("blob checksum mismatch");

  r.points.resize(n);
  r.normals.resize(n);
  r.point_part.resize(n);
  r.prob.resize(static_cast<Eigen::Index>(n));
  for (auto& p : r.points) p = in.get_vec_f32();
  for (auto& v : r.normals) v = in.get_vec_f32();
  for (auto& part : r.point_part) part = in.get<std::int32_t>();
  for (Eigen::Index i = 0; i < r.prob.size(); ++i) r.prob(i) = in.get<double>();
  r.positive_pairs.resize(n_pos);
  r.negative_pairs.resize(n_neg);
  for (auto& p : r.positive_pairs) p = {in.get<std::uint32_t>(), in.get<std::uint32_t>()};
  for (auto& p : r.negative_pairs) p = {in.get<std::uint32_t>(), in.get<std::uint32_t>()};
  r.positive_grasps.resize(n_pos);
  for (auto& g : r.positive_grasps) {
    g.position[0] = in.get_vec_f64();
    g.position[1] = in.get_vec_f64();
    g.normal[0] = in.get_vec_f64();
    g.normal[1] = in.get_vec_f64();
    g.min_force = in.get<double>();
    g.part[0] = in.get<std::int32_t>();
    g.part[1] = in.get<std::int32_t>();
  }
}

json index_entry(const DatasetRecord& r) {
  json parts = json::array();
  for (const auto& p : r.parts)
    parts.push_back({{"id", p.id},
                     {"name", p.name},
                     {"material", p.material.name},
                     {"density", p.material.density},
                     {"friction", p.material.friction},
                     {"fragility", std::string(to_string(p.material.fragility))},
                     {"uncommon", p.material.uncommon},
                     {"grasp_prior", p.grasp_prior},
                     {"force_cap", p.force_cap},
                     {"volume", p.volume},
                     {"mass", p.mass},
                     {"hull_fallback", p.hull_fallback}});
  json disturbances = json::array();
  for (const auto& d : r.label.disturbances) disturbances.push_back(std::vector<double>(d.data(), d.data() + 6));
  json emphasized = json::array();
  for (const auto& e : r.emphasized) emphasized.push_back({{"part", e.part}, {"claim", std::string(to_string(e.claim))}});
  json transform = json::array();
  for (int i = 0; i < 4; ++i) transform.push_back({r.transform(i, 0), r.transform(i, 1), r.transform(i, 2), r.transform(i, 3)});
  std::vector<int> criteria(r.hard.criteria_hit.begin(), r.hard.criteria_hit.end());

  return {
      {"schema_version", r.schema_version},
      {"instance_id", r.instance_id},
      {"object_id", r.object_id},
      {"mesh_ref", r.mesh_ref},
      {"seed", r.seed},
      {"material_seed", r.material_seed},
      {"attempt", r.attempt},
      {"num_points", r.points.size()},
      {"sigma", r.sigma},
      {"mass", r.mass},
      {"com", {r.com.x(), r.com.y(), r.com.z()}},
      {"parts", parts},
      {"contact",
       {{"fragile_cap", r.contact.fragile_cap},
        {"normal_cap", r.contact.normal_cap},
        {"tough_cap", r.contact.tough_cap},
        {"force_scale", r.contact.force_scale},
        {"cone_edges", r.contact.cone_edges}}},
      {"label",
       {{"gravity", r.label.gravity},
        {"prior_threshold", r.label.prior_threshold},
        {"negative_ratio", r.label.negative_ratio},
        {"same_surface_angle_deg", r.label.same_surface_angle_deg},
        {"disturbances", disturbances}}},
      {"quality_weighting", r.quality_weighting},
      {"language",
       {{"density_ratio", r.language.density_ratio},
        {"friction_gap", r.language.friction_gap},
        {"avoid_prior", r.language.avoid_prior},
        {"prefer_prior", r.language.prefer_prior}}},
      {"summary", r.summary},
      {"emphasized", emphasized},
      {"hard", {{"is_hard", r.hard.is_hard}, {"score", r.hard.score}, {"criteria", criteria}}},
      {"positive_pairs", r.positive_pairs.size()},
      {"negative_pairs", r.negative_pairs.size()},
      {"material_table_hash", r.material_table_hash},
      {"config_hash", r.config_hash},
      {"transform", transform},
      {"flags",
       {{"watertight", r.watertight},
        {"reoriented_parts", r.reoriented_parts},
        {"candidates", r.candidate_count},
        {"same_surface_added", r.same_surface_added},
        {"dropped_pairs", r.dropped_pairs}}},
      {"blob", blob_name(r.instance_id)},
  };
}

void write_records(const std::filesystem::path& dir, const std::vector<DatasetRecord>& records) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "blobs", ec);
  if (ec) throw IoError("cannot create " + (dir / "blobs").string() + ": " + ec.message());
  std::ofstream index(dir / "index.jsonl", std::ios::binary);
  if (!index) throw IoError("cannot write " + (dir / "index.jsonl").string());
  for (const auto& r : records) {
    const auto blob = encode_blob(r);
    std::ofstream out(dir / blob_name(r.instance_id), std::ios::binary);
    if (!out) throw IoError("cannot write blob for " + r.instance_id);
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("failed writing blob for " + r.instance_id);
    index << index_entry(r).dump() << '\n';
  }
  if (!index) throw IoError("failed writing index");
}

std::vector<json> read_index(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.jsonl", std::ios::binary);
  if (!in) throw IoError("cannot read " + (dir / "index.jsonl").string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw IoError("index line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

DatasetRecord read_record(const std::filesystem::path& dir, const json& e) {
  DatasetRecord r;
  try {
    r.schema_version = e.at("schema_version").get<int>();
    if (r.schema_version != kSchemaVersion)
      throw SchemaVersionMismatch("index schema version " + std::to_string(r.schema_version));
    r.instance_id = e.at("instance_id").get<std::string>();
    r.object_id = e.at("object_id").get<std::string>();
    r.mesh_ref = e.at("mesh_ref").get<std::string>();
    r.seed = e.at("seed").get<std::uint64_t>();
    r.material_seed = e.at("material_seed").get<std::uint64_t>();
    r.attempt = e.at("attempt").get<int>();
    r.sigma = e.at("sigma").get<double>();
    r.mass = e.at("mass").get<double>();
    const auto com = e.at("com").get<std::vector<double>>();
    if (com.size() != 3) throw SchemaVersionMismatch("com must have 3 components");
    r.com = Vec3(com[0], com[1], com[2]);
    for (const auto& p : e.at("parts")) {
      PartRecord pr;
      pr.id = p.at("id").get<PartId>();
      pr.name = p.at("name").get<std::string>();
      pr.material.name = p.at("material").get<std::string>();
      pr.material.density = p.at("density").get<double>();
      pr.material.friction = p.at("friction").get<double>();
      pr.material.fragility = fragility_from_string(p.at("fragility").get<std::string>());
      pr.material.uncommon = p.at("uncommon").get<bool>();
      pr.grasp_prior = p.at("grasp_prior").get<double>();
      pr.force_cap = p.at("force_cap").get<double>();
      pr.volume = p.at("volume").get<double>();
      pr.mass = p.at("mass").get<double>();
      pr.hull_fallback = p.at("hull_fallback").get<bool>();
      r.parts.push_back(pr);
    }
    const auto& c = e.at("contact");
    r.contact.fragile_cap = c.at("fragile_cap").get<double>();
    r.contact.normal_cap = c.at("normal_cap").get<double>();
    r.contact.tough_cap = c.at("tough_cap").get<double>();
    r.contact.force_scale = c.at("force_scale").get<double>();
    r.contact.cone_edges = c.at("cone_edges").get<int>();
    const auto& l = e.at("label");
    r.label.gravity = l.at("gravity").get<double>();
    r.label.prior_threshold = l.at("prior_threshold").get<double>();
    r.label.negative_ratio = l.at("negative_ratio").get<double>();
    r.label.same_surface_angle_deg = l.at("same_surface_angle_deg").get<double>();
    for (const auto& d : l.at("disturbances")) {
      const auto v = d.get<std::vector<double>>();
      if (v.size() != 6) throw SchemaVersionMismatch("disturbance must have 6 components");
      r.label.disturbances.push_back(Wrench<double>(v.data()));
    }
    r.quality_weighting = e.at("quality_weighting").get<bool>();
    const auto& lg = e.at("language");
    r.language.density_ratio = lg.at("density_ratio").get<double>();
    r.language.friction_gap = lg.at("friction_gap").get<double>();
    r.language.avoid_prior = lg.at("avoid_prior").get<double>();
    r.language.prefer_prior = lg.at("prefer_prior").get<double>();
    r.summary = e.at("summary").get<std::string>();
    for (const auto& em : e.at("emphasized"))
      r.emphasized.push_back({em.at("part").get<PartId>(), claim_from_string(em.at("claim").get<std::string>())});
    const auto& h = e.at("hard");
    r.hard.is_hard = h.at("is_hard").get<bool>();
    r.hard.score = h.at("score").get<int>();
    const auto criteria = h.at("criteria").get<std::vector<int>>();
    if (criteria.size() != r.hard.criteria_hit.size()) throw SchemaVersionMismatch("hard criteria must have 5 flags");
    for (std::size_t i = 0; i < criteria.size(); ++i) r.hard.criteria_hit[i] = criteria[i] != 0;
    r.material_table_hash = e.at("material_table_hash").get<std::string>();
    r.config_hash = e.at("config_hash").get<std::string>();
    const auto& t = e.at("transform");
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) r.transform(i, j) = t.at(i).at(j).get<double>();
    const auto& f = e.at("flags");
    r.watertight = f.at("watertight").get<bool>();
    r.reoriented_parts = f.at("reoriented_parts").get<std::vector<PartId>>();
    r.candidate_count = f.at("candidates").get<std::size_t>();
    r.same_surface_added = f.at("same_surface_added").get<std::size_t>();
    r.dropped_pairs = f.at("dropped_pairs").get<std::size_t>();

    const auto blob_path = dir / e.at("blob").get<std::string>();
    std::ifstream in(blob_path, std::ios::binary);
    if (!in) throw IoError("cannot read " + blob_path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    decode_blob(bytes, r);
    if (r.points.size() != e.at("num_points").get<std::size_t>() ||
        r.positive_pairs.size() != e.at("positive_pairs").get<std::size_t>() ||
        r.negative_pairs.size() != e.at("negative_pairs").get<std::size_t>())
      throw IoError("blob counts disagree with the index");
  } catch (const json::exception& ex) {
    throw SchemaVersionMismatch(std::string("malformed index entry: ") + ex.what());
  }
  return r;
}

std::vector<DatasetRecord> read_records(const std::filesystem::path& dir) {
  std::vector<DatasetRecord> out;
  for (const auto& e : read_index(dir)) {
    try {
      out.push_back(read_record(dir, e));
    } catch (const Error& ex) {
      const std::string id = e.is_object() && e.contains("instance_id") && e["instance_id"].is_string()
                                 ? e["instance_id"].get<std::string>()
                                 : std::string("?");
      if (dynamic_cast<const SchemaVersionMismatch*>(&ex)) throw SchemaVersionMismatch(id + ": " + ex.what());
      throw IoError(id + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace graspkit
