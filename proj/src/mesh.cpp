#include "nvs/mesh.h"

#include "nvs/error.h"

#include <Eigen/Geometry>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>

namespace nvs {

namespace {

std::string lower_extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

[[noreturn]] void parse_error(const std::string& what, std::size_t line) {
  throw Error(ErrorCode::ParseError, what + " (line " + std::to_string(line) + ")");
}

void finish(TriangleMesh& mesh, bool have_normals) {
  drop_degenerate_faces(mesh);
  if (mesh.faces.empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no faces");
  if (have_normals && mesh.vertex_normals.size() == mesh.vertices.size()) {
    for (Vec3& n : mesh.vertex_normals) {
      if (!(n.norm() > 0.0)) {
        have_normals = false;
        break;
      }
      n.normalize();
    }
    if (have_normals) return;
  }
  mesh.vertex_normals = compute_vertex_normals(mesh);
}

// Resolves an OBJ index (1-based, negative = relative to the end).
std::uint32_t resolve_obj_index(long idx, std::size_t count, std::size_t line) {
  long resolved = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
  if (idx == 0 || resolved < 0 || resolved >= static_cast<long>(count)) {
    parse_error("face index " + std::to_string(idx) + " out of range", line);
  }
  return static_cast<std::uint32_t>(resolved);
}

TriangleMesh load_obj(std::istream& in) {
  TriangleMesh mesh;
  std::vector<Vec3> normals;
  // Per-vertex normals are only trusted when every corner pairs vertex i with
  // normal i, which is what most exporters write for smooth meshes.
  bool normals_aligned = true;
  bool any_normal_ref = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) parse_error("malformed vertex record", line_no);
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "vn") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) parse_error("malformed normal record", line_no);
      normals.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<std::uint32_t> poly;
      std::string tok;
      while (ls >> tok) {
        // v, v/vt, v//vn or v/vt/vn
        std::vector<std::string> parts;
        std::size_t b = 0;
        for (std::size_t e; (e = tok.find('/', b)) != std::string::npos; b = e + 1) {
          parts.push_back(tok.substr(b, e - b));
        }
        parts.push_back(tok.substr(b));
        auto parse_index = [&](const std::string& s) {
          long v = 0;
          auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
          if (ec != std::errc() || ptr != s.data() + s.size()) {
            parse_error("malformed face token '" + tok + "'", line_no);
          }
          return v;
        };
        poly.push_back(resolve_obj_index(parse_index(parts[0]), mesh.vertices.size(), line_no));
        if (parts.size() == 3 && !parts[2].empty()) {
          any_normal_ref = true;
          if (resolve_obj_index(parse_index(parts[2]), normals.size(), line_no) != poly.back()) {
            normals_aligned = false;
          }
        } else {
          normals_aligned = false;
        }
      }
      if (poly.size() < 3) parse_error("face with fewer than 3 vertices", line_no);
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        mesh.faces.push_back({poly[0], poly[i], poly[i + 1]});
      }
    }
  }
  const bool use_normals = any_normal_ref && normals_aligned && normals.size() == mesh.vertices.size();
  if (use_normals) mesh.vertex_normals = std::move(normals);
  finish(mesh, use_normals);
  return mesh;
}

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

std::optional<PlyType> ply_type(const std::string& s) {
  if (s == "char" || s == "int8") return PlyType::I8;
  if (s == "uchar" || s == "uint8") return PlyType::U8;
  if (s == "short" || s == "int16") return PlyType::I16;
  if (s == "ushort" || s == "uint16") return PlyType::U16;
  if (s == "int" || s == "int32") return PlyType::I32;
  if (s == "uint" || s == "uint32") return PlyType::U32;
  if (s == "float" || s == "float32") return PlyType::F32;
  if (s == "double" || s == "float64") return PlyType::F64;
  return std::nullopt;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::F32;
  bool is_list = false;
  PlyType count_type = PlyType::U8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

template <typename T>
T read_le(std::istream& in, std::size_t& offset) {
  std::array<char, sizeof(T)> buf{};
  if (!in.read(buf.data(), sizeof(T))) {
    throw Error(ErrorCode::ParseError, "unexpected end of binary PLY data (byte " +
                                           std::to_string(offset) + ")");
  }
  offset += sizeof(T);
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

double read_binary_value(std::istream& in, PlyType t, std::size_t& offset) {
  switch (t) {
    case PlyType::I8: return read_le<std::int8_t>(in, offset);
    case PlyType::U8: return read_le<std::uint8_t>(in, offset);
    case PlyType::I16: return read_le<std::int16_t>(in, offset);
    case PlyType::U16: return read_le<std::uint16_t>(in, offset);
    case PlyType::I32: return read_le<std::int32_t>(in, offset);
    case PlyType::U32: return read_le<std::uint32_t>(in, offset);
    case PlyType::F32: return read_le<float>(in, offset);
    case PlyType::F64: return read_le<double>(in, offset);
  }
  return 0.0;
}

TriangleMesh load_ply(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line() || line != "ply") parse_error("missing 'ply' magic", line_no);
  bool binary = false;
  std::vector<PlyElement> elements;
  bool header_done = false;
  while (next_line()) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        parse_error("unsupported PLY format '" + fmt + "'", line_no);
      }
    } else if (kw == "element") {
      PlyElement e;
      if (!(ls >> e.name >> e.count)) parse_error("malformed element line", line_no);
      elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (elements.empty()) parse_error("property before element", line_no);
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string ct, vt;
        ls >> ct >> vt >> p.name;
        auto c = ply_type(ct);
        auto v = ply_type(vt);
        if (!c || !v) parse_error("unknown PLY list type", line_no);
        p.is_list = true;
        p.count_type = *c;
        p.type = *v;
      } else {
        auto v = ply_type(t);
        if (!v) parse_error("unknown PLY property type '" + t + "'", line_no);
        p.type = *v;
        ls >> p.name;
      }
      elements.back().properties.push_back(std::move(p));
    } else if (kw == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) parse_error("missing end_header", line_no);

  TriangleMesh mesh;
  bool have_normals = false;
  for (const PlyElement& e : elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ilist = -1;
    for (int k = 0; k < static_cast<int>(e.properties.size()); ++k) {
      const auto& n = e.properties[k].name;
      if (n == "x") ix = k;
      if (n == "y") iy = k;
      if (n == "z") iz = k;
      if (n == "nx") inx = k;
      if (n == "ny") iny = k;
      if (n == "nz") inz = k;
      if (e.properties[k].is_list && (n == "vertex_indices" || n == "vertex_index")) ilist = k;
    }
    if (is_vertex) {
      if (ix < 0 || iy < 0 || iz < 0) parse_error("vertex element lacks x/y/z", line_no);
      have_normals = inx >= 0 && iny >= 0 && inz >= 0;
    }
    if (is_face && ilist < 0) parse_error("face element lacks vertex_indices", line_no);

    std::vector<double> scalars(e.properties.size(), 0.0);
    std::vector<long> list;
    for (std::size_t r = 0; r < e.count; ++r) {
      std::istringstream ls;
      if (!binary) {
        if (!next_line()) parse_error("unexpected end of PLY data", line_no);
        ls.str(line);
      }
      for (int k = 0; k < static_cast<int>(e.properties.size()); ++k) {
        const PlyProperty& p = e.properties[k];
        if (p.is_list) {
          double cnt = 0;
          if (binary) {
            cnt = read_binary_value(in, p.count_type, offset);
          } else if (!(ls >> cnt)) {
            parse_error("malformed list property", line_no);
          }
          if (cnt < 0 || cnt > 1 << 20) parse_error("bad list length", line_no);
          list.assign(static_cast<std::size_t>(cnt), 0);
          for (auto& v : list) {
            double d = 0;
            if (binary) {
              d = read_binary_value(in, p.type, offset);
            } else if (!(ls >> d)) {
              parse_error("malformed list entry", line_no);
            }
            v = static_cast<long>(d);
          }
        } else {
          if (binary) {
            scalars[k] = read_binary_value(in, p.type, offset);
          } else if (!(ls >> scalars[k])) {
            parse_error("malformed property value", line_no);
          }
        }
      }
      if (is_vertex) {
        mesh.vertices.emplace_back(scalars[ix], scalars[iy], scalars[iz]);
        if (have_normals) mesh.vertex_normals.emplace_back(scalars[inx], scalars[iny], scalars[inz]);
      } else if (is_face) {
        if (list.size() < 3) parse_error("face with fewer than 3 vertices", line_no);
        for (long v : list) {
          if (v < 0 || v >= static_cast<long>(mesh.vertices.size())) {
            const std::string where = binary ? "byte " + std::to_string(offset) : "line " + std::to_string(line_no);
            throw Error(ErrorCode::ParseError,
                        "face index " + std::to_string(v) + " out of range (" + where + ")");
          }
        }
        for (std::size_t i = 1; i + 1 < list.size(); ++i) {
          mesh.faces.push_back({static_cast<std::uint32_t>(list[0]), static_cast<std::uint32_t>(list[i]),
                                static_cast<std::uint32_t>(list[i + 1])});
        }
      }
    }
  }
  finish(mesh, have_normals);
  return mesh;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> buf{};
  std::memcpy(buf.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  out.write(buf.data(), sizeof(T));
}

}  // namespace

TriangleMesh load_mesh(std::istream& in, MeshFormat format) {
  switch (format) {
    case MeshFormat::Obj: return load_obj(in);
    case MeshFormat::PlyAscii:
    case MeshFormat::PlyBinary: return load_ply(in);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown mesh format");
}

MeshFormat mesh_format_for_path(const std::string& path) {
  const std::string ext = lower_extension(path);
  if (ext == "obj") return MeshFormat::Obj;
  if (ext == "ply") return MeshFormat::PlyBinary;
  throw Error(ErrorCode::InvalidArgument, "unsupported mesh extension: " + path);
}

TriangleMesh load_mesh(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open mesh " + path);
  return load_mesh(in, mesh_format_for_path(path));
}

void save_mesh(const TriangleMesh& mesh, std::ostream& out, MeshFormat format) {
  const bool normals = mesh.vertex_normals.size() == mesh.vertices.size();
  if (format == MeshFormat::Obj) {
    out << std::setprecision(10);
    for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    if (normals) {
      for (const Vec3& n : mesh.vertex_normals) out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
    }
    for (const Face& f : mesh.faces) {
      out << 'f';
      for (auto i : f) {
        out << ' ' << (i + 1);
        if (normals) out << "//" << (i + 1);
      }
      out << '\n';
    }
    return;
  }
  const bool binary = format == MeshFormat::PlyBinary;
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
  out << "element face " << mesh.faces.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  if (binary) {
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      for (int k = 0; k < 3; ++k) write_le<double>(out, mesh.vertices[i][k]);
      if (normals) {
        for (int k = 0; k < 3; ++k) write_le<float>(out, static_cast<float>(mesh.vertex_normals[i][k]));
      }
    }
    for (const Face& f : mesh.faces) {
      write_le<std::uint8_t>(out, 3);
      for (auto i : f) write_le<std::int32_t>(out, static_cast<std::int32_t>(i));
    }
  } else {
    out << std::setprecision(17);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const Vec3& v = mesh.vertices[i];
      out << v.x() << ' ' << v.y() << ' ' << v.z();
      if (normals) {
        const Vec3& n = mesh.vertex_normals[i];
        out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
      }
      out << '\n';
    }
    for (const Face& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
}

void save_mesh(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write mesh " + path);
  save_mesh(mesh, out, mesh_format_for_path(path));
}

std::vector<Vec3> compute_vertex_normals(const TriangleMesh& mesh) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (const Face& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    // |cross| is twice the area, so summing raw cross products area-weights.
    const Vec3 n = (b - a).cross(c - a);
    for (auto i : f) normals[i] += n;
  }
  for (Vec3& n : normals) {
    const double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3(0.0, 0.0, 1.0);
  }
  return normals;
}

std::size_t drop_degenerate_faces(TriangleMesh& mesh) {
  const std::size_t before = mesh.faces.size();
  const std::size_t nv = mesh.vertices.size();
  std::erase_if(mesh.faces, [&](const Face& f) {
    if (f[0] >= nv || f[1] >= nv || f[2] >= nv) return true;
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) return true;
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    const double longest = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
    return !((b - a).cross(c - a).norm() > 1e-12 * longest);
  });
  return before - mesh.faces.size();
}

std::pair<Vec3, Vec3> bounding_box(const TriangleMesh& mesh) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

TriangleMesh transform_mesh(const TriangleMesh& mesh, const Similarity& sim) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = sim.apply(v);
  // Uniform positive scale leaves unit normals unchanged.
  return out;
}

std::pair<TriangleMesh, Similarity> normalize_to_unit_box(const TriangleMesh& mesh, double margin) {
  if (mesh.empty() || mesh.vertices.empty()) throw Error(ErrorCode::EmptyMesh, "cannot normalize an empty mesh");
  if (!(margin >= 0.0 && margin < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "normalize margin must be in [0, 0.5)");
  }
  const auto [lo, hi] = bounding_box(mesh);
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) throw Error(ErrorCode::InvalidArgument, "mesh has zero extent");
  Similarity sim;
  sim.scale = 2.0 * (1.0 - margin) / extent;
  sim.translation = -sim.scale * 0.5 * (lo + hi);
  return {transform_mesh(mesh, sim), sim};
}

TriangleMesh merge_meshes(const std::vector<TriangleMesh>& meshes) {
  TriangleMesh out;
  for (const TriangleMesh& m : meshes) {
    const auto base = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), m.vertices.begin(), m.vertices.end());
    std::vector<Vec3> n = m.vertex_normals.size() == m.vertices.size() ? m.vertex_normals
                                                                        : compute_vertex_normals(m);
    out.vertex_normals.insert(out.vertex_normals.end(), n.begin(), n.end());
    for (const Face& f : m.faces) out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  }
  return out;
}

}  // namespace nvs
