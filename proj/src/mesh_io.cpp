#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "graspkit/errors.hpp"
#include "graspkit/mesh.hpp"

namespace graspkit {

namespace {

// A face as written in the file, before triangulation.
struct RawMesh {
  std::vector<Vec3> vertices;
  std::vector<std::vector<std::uint32_t>> polygons;
  std::vector<std::string> polygon_group;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

RawMesh read_obj(std::istream& in) {
  RawMesh raw;
  std::string line, group;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z()))
        throw ParseError("obj line " + std::to_string(lineno) + ": bad vertex");
      raw.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<std::uint32_t> poly;
      std::string tok;
      while (ss >> tok) {
        long idx = 0;
        try {
          idx = std::stol(tok.substr(0, tok.find('/')));
        } catch (const std::exception&) {
          throw ParseError("obj line " + std::to_string(lineno) + ": bad face index '" + tok + "'");
        }
        if (idx < 0) idx += static_cast<long>(raw.vertices.size()) + 1;
        if (idx < 1) throw ParseError("obj line " + std::to_string(lineno) + ": index out of range");
        poly.push_back(static_cast<std::uint32_t>(idx - 1));
      }
      if (poly.size() < 3)
        throw ParseError("obj line " + std::to_string(lineno) + ": face with < 3 vertices");
      raw.polygons.push_back(std::move(poly));
      raw.polygon_group.push_back(group);
    } else if (tag == "g" || tag == "o") {
      std::getline(ss >> std::ws, group);
    }
  }
  if (raw.vertices.empty() || raw.polygons.empty()) throw ParseError("obj has no geometry");
  return raw;
}

enum class PlyFormat { Ascii, BinaryLE, BinaryBE };

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw ParseError("ply: unknown property type '" + t + "'");
}

double ply_read_binary(std::istream& in, const std::string& t, PlyFormat fmt) {
  const std::size_t n = ply_type_size(t);
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n)))
    throw ParseError("ply: truncated binary payload");
  const bool need_swap = (fmt == PlyFormat::BinaryLE) != (std::endian::native == std::endian::little);
  if (need_swap) std::reverse(buf, buf + n);
  if (t == "char" || t == "int8") return static_cast<std::int8_t>(buf[0]);
  if (t == "uchar" || t == "uint8") return buf[0];
  auto as = [&]<typename T>(T) {
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return static_cast<double>(v);
  };
  if (t == "short" || t == "int16") return as(std::int16_t{});
  if (t == "ushort" || t == "uint16") return as(std::uint16_t{});
  if (t == "int" || t == "int32") return as(std::int32_t{});
  if (t == "uint" || t == "uint32") return as(std::uint32_t{});
  if (t == "float" || t == "float32") return as(float{});
  return as(double{});
}

RawMesh read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw ParseError("ply: missing magic");
  PlyFormat fmt = PlyFormat::Ascii;
  std::vector<PlyElement> elements;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "format") {
      std::string f;
      ss >> f;
      if (f == "ascii") fmt = PlyFormat::Ascii;
      else if (f == "binary_little_endian") fmt = PlyFormat::BinaryLE;
      else if (f == "binary_big_endian") fmt = PlyFormat::BinaryBE;
      else throw ParseError("ply: unknown format " + f);
    } else if (tag == "element") {
      PlyElement e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (tag == "property") {
      if (elements.empty()) throw ParseError("ply: property before element");
      PlyProperty p;
      std::string t;
      ss >> t;
      if (t == "list") {
        p.is_list = true;
        ss >> p.count_type >> p.type >> p.name;
      } else {
        p.type = t;
        ss >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (tag == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw ParseError("ply: missing end_header");

  RawMesh raw;
  for (const auto& e : elements) {
    for (std::size_t i = 0; i < e.count; ++i) {
      std::vector<double> scalars;
      std::vector<std::uint32_t> list;
      std::istringstream row;
      if (fmt == PlyFormat::Ascii) {
        if (!std::getline(in, line)) throw ParseError("ply: truncated ascii payload");
        row.str(line);
      }
      for (const auto& p : e.props) {
        auto next = [&](const std::string& t) {
          if (fmt != PlyFormat::Ascii) return ply_read_binary(in, t, fmt);
          double v;
          if (!(row >> v)) throw ParseError("ply: bad ascii value in element " + e.name);
          return v;
        };
        if (p.is_list) {
          const auto count = static_cast<std::size_t>(next(p.count_type));
          for (std::size_t k = 0; k < count; ++k) {
            const double v = next(p.type);
            if (p.name == "vertex_indices" || p.name == "vertex_index")
              list.push_back(static_cast<std::uint32_t>(v));
          }
        } else {
          scalars.push_back(next(p.type));
        }
      }
      if (e.name == "vertex") {
        Vec3 v = Vec3::Zero();
        std::size_t s = 0;
        for (const auto& p : e.props) {
          if (p.is_list) continue;
          if (p.name == "x") v.x() = scalars[s];
          if (p.name == "y") v.y() = scalars[s];
          if (p.name == "z") v.z() = scalars[s];
          ++s;
        }
        raw.vertices.push_back(v);
      } else if (e.name == "face") {
        if (list.size() < 3) throw ParseError("ply: face with < 3 vertices");
        raw.polygons.push_back(std::move(list));
        raw.polygon_group.emplace_back();
      }
    }
  }
  if (raw.vertices.empty() || raw.polygons.empty()) throw ParseError("ply has no geometry");
  return raw;
}

}  // namespace

PartMesh load_mesh(const std::filesystem::path& mesh_path,
                   const std::filesystem::path& part_annotation) {
  std::ifstream in(mesh_path, std::ios::binary);
  if (!in) throw IoError("cannot open mesh " + mesh_path.string());
  const auto ext = lower(mesh_path.extension().string());
  RawMesh raw;
  if (ext == ".obj") raw = read_obj(in);
  else if (ext == ".ply") raw = read_ply(in);
  else throw ParseError("unsupported mesh format '" + ext + "'");

  std::ifstream ain(part_annotation);
  if (!ain) throw IoError("cannot open part annotation " + part_annotation.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ain);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("part annotation: " + std::string(e.what()));
  }
  if (!doc.contains("parts") || !doc["parts"].is_array())
    throw ParseError("part annotation: missing 'parts' array");

  const std::size_t npoly = raw.polygons.size();
  std::vector<PartId> poly_part(npoly, -1);
  std::map<PartId, std::string> names;
  try {
    for (const auto& p : doc["parts"]) {
      const PartId id = p.at("id").get<int>();
      if (names.contains(id)) throw LabelError("duplicate part id " + std::to_string(id));
      names[id] = p.at("name").get<std::string>();
      auto assign = [&](std::size_t f) {
        if (poly_part[f] != -1 && poly_part[f] != id)
          throw LabelError("face " + std::to_string(f) + " labeled by two parts");
        poly_part[f] = id;
      };
      if (p.contains("faces")) {
        const auto range = p["faces"].get<std::vector<long>>();
        if (range.size() != 2 || range[0] < 0 || range[1] < range[0] ||
            static_cast<std::size_t>(range[1]) >= npoly)
          throw LabelError("part " + names[id] + ": bad face range");
        for (long f = range[0]; f <= range[1]; ++f) assign(static_cast<std::size_t>(f));
      }
      if (p.contains("groups")) {
        for (const auto& g : p["groups"].get<std::vector<std::string>>())
          for (std::size_t f = 0; f < npoly; ++f)
            if (raw.polygon_group[f] == g) assign(f);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("part annotation: " + std::string(e.what()));
  }
  for (std::size_t f = 0; f < npoly; ++f)
    if (poly_part[f] == -1) throw LabelError("face " + std::to_string(f) + " has no part label");

  std::vector<Face> faces;
  std::vector<PartId> labels;
  for (std::size_t f = 0; f < npoly; ++f) {
    const auto& poly = raw.polygons[f];
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
      faces.push_back({poly[0], poly[k], poly[k + 1]});
      labels.push_back(poly_part[f]);
    }
  }
  return make_part_mesh(std::move(raw.vertices), std::move(faces), std::move(labels),
                        std::move(names));
}

void save_mesh(const PartMesh& mesh, const std::filesystem::path& obj_path,
               const std::filesystem::path& annotation_path) {
  // Faces are written grouped by part so each part is one contiguous range.
  std::ofstream out(obj_path);
  if (!out) throw IoError("cannot write " + obj_path.string());
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  nlohmann::json parts = nlohmann::json::array();
  std::size_t written = 0;
  for (PartId part : mesh.part_ids()) {
    const auto fs = mesh.faces_of_part(part);
    if (fs.empty()) continue;
    out << "g part_" << part << '\n';
    for (auto f : fs) {
      const auto& tri = mesh.faces[f];
      out << "f " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
    }
    parts.push_back({{"id", part},
                     {"name", mesh.part_names.at(part)},
                     {"faces", {written, written + fs.size() - 1}}});
    written += fs.size();
  }
  if (!out) throw IoError("failed writing " + obj_path.string());
  std::ofstream aout(annotation_path);
  if (!aout) throw IoError("cannot write " + annotation_path.string());
  aout << nlohmann::json{{"parts", parts}}.dump(2) << '\n';
}

}  // namespace graspkit
