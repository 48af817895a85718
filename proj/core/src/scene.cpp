/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/scene.hpp"

#include "citytex/image_io.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace citytex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower_ext(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

int resolve_obj_index(long idx, std::size_t count, const char* what) {
  long resolved = idx;
  if (idx < 0) resolved = static_cast<long>(count) + idx + 1;
  if (resolved < 1 || resolved > static_cast<long>(count))
    throw Error::validation(fmt::format("obj {} index {} out of range", what, idx));
  return static_cast<int>(resolved - 1);
}

std::vector<unsigned char> base64_decode(const std::string& input) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<unsigned char> out;
  int buffer = 0, bits = 0;
  for (char c : input) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const int v = value(c);
    if (v < 0) throw Error::io("invalid base64 payload in glTF buffer");
    buffer = (buffer << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((buffer >> bits) & 0xFF));
    }
  }
  return out;
}

std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::io("cannot open file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void TexturedScene::validate() const {
  mesh.validate();
  if (texture.channels() != 3 || texture.width() < 1 || texture.height() < 1)
    throw Error::validation("scene texture must be a non-empty RGB image");
  if (semantics.width != texture.width() || semantics.height != texture.height())
    throw Error::validation(
        fmt::format("semantic texture {}x{} does not match texture {}x{}", semantics.width,
                    semantics.height, texture.width(), texture.height()));
  for (const Vec3& v : mesh.vertices) {
    if ((v.array() < aabb.min.array() - 1e-9).any() ||
        (v.array() > aabb.max.array() + 1e-9).any())
      throw Error::validation("scene aabb does not enclose all vertices");
  }
}

TriangleMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::io("cannot open OBJ: " + path);

  TriangleMesh mesh;
  std::vector<Vec2> texcoords;
  bool material_set = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      real x, y, z;
      if (!(ls >> x >> y >> z))
        throw Error::io(fmt::format("obj parse error at line {}: bad vertex", line_no));
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "vt") {
      real u, v;
      if (!(ls >> u >> v))
        throw Error::io(fmt::format("obj parse error at line {}: bad texcoord", line_no));
      texcoords.emplace_back(u, v);
    } else if (tag == "f") {
      std::vector<std::pair<int, int>> corners;  // (vertex, texcoord)
      std::string corner;
      while (ls >> corner) {
        const std::size_t slash = corner.find('/');
        if (slash == std::string::npos || slash + 1 >= corner.size() || corner[slash + 1] == '/')
          throw Error::validation(
              fmt::format("obj face at line {} has no texture coordinates (mesh must be UV-mapped)",
                          line_no));
        const long vi = std::strtol(corner.c_str(), nullptr, 10);
        const long ti = std::strtol(corner.c_str() + slash + 1, nullptr, 10);
        corners.emplace_back(resolve_obj_index(vi, mesh.vertices.size(), "vertex"),
                             resolve_obj_index(ti, texcoords.size(), "texcoord"));
      }
      if (corners.size() != 3)
        throw Error::validation(fmt::format(
            "obj face at line {} has {} corners; the mesh must be triangulated", line_no,
            corners.size()));
      mesh.faces.push_back({corners[0].first, corners[1].first, corners[2].first});
      mesh.uv.push_back({texcoords[corners[0].second], texcoords[corners[1].second],
                         texcoords[corners[2].second]});
    } else if (tag == "usemtl" && !material_set) {
      ls >> mesh.material_name;
      material_set = true;
    }
  }
  return mesh;
}

void write_obj(const TriangleMesh& mesh, const std::string& obj_path, const std::string& mtl_path,
               const std::string& texture_filename) {
  std::ofstream obj(obj_path);
  if (!obj) throw Error::io("cannot open OBJ for writing: " + obj_path);
  obj << "# citytex textured mesh\n";
  obj << "mtllib " << fs::path(mtl_path).filename().string() << "\n";
  for (const Vec3& v : mesh.vertices)
    obj << fmt::format("v {:.17g} {:.17g} {:.17g}\n", v.x(), v.y(), v.z());

  // Deduplicate texcoords by exact bit pattern to keep files compact.
  std::map<std::pair<std::uint64_t, std::uint64_t>, int> vt_index;
  std::vector<Vec2> vts;
  auto vt_id = [&](const Vec2& t) {
    std::uint64_t bu, bv;
    std::memcpy(&bu, &t.x(), 8);
    std::memcpy(&bv, &t.y(), 8);
    const auto key = std::make_pair(bu, bv);
    auto it = vt_index.find(key);
    if (it != vt_index.end()) return it->second;
    const int id = static_cast<int>(vts.size());
    vts.push_back(t);
    vt_index.emplace(key, id);
    return id;
  };
  std::vector<std::array<int, 3>> face_vt(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f)
    for (int k = 0; k < 3; ++k) face_vt[f][k] = vt_id(mesh.uv[f][k]);
  for (const Vec2& t : vts) obj << fmt::format("vt {:.17g} {:.17g}\n", t.x(), t.y());

  obj << "usemtl " << mesh.material_name << "\n";
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    obj << fmt::format("f {}/{} {}/{} {}/{}\n", mesh.faces[f][0] + 1, face_vt[f][0] + 1,
                       mesh.faces[f][1] + 1, face_vt[f][1] + 1, mesh.faces[f][2] + 1,
                       face_vt[f][2] + 1);
  }
  if (!obj) throw Error::io("failed writing OBJ: " + obj_path);

  std::ofstream mtl(mtl_path);
  if (!mtl) throw Error::io("cannot open MTL for writing: " + mtl_path);
  mtl << "newmtl " << mesh.material_name << "\n";
  mtl << "Kd 1 1 1\n";
  mtl << "map_Kd " << texture_filename << "\n";
}

namespace {

struct GltfBuffers {
  json doc;
  std::vector<std::vector<unsigned char>> buffers;
};

GltfBuffers load_gltf_document(const std::string& path) {
  GltfBuffers out;
  const std::string ext = lower_ext(path);
  if (ext == ".glb") {
    const std::vector<unsigned char> bytes = read_file_bytes(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "glTF", 4) != 0)
      throw Error::io("not a GLB container: " + path);
    std::size_t offset = 12;
    std::vector<unsigned char> bin;
    while (offset + 8 <= bytes.size()) {
      std::uint32_t chunk_len, chunk_type;
      std::memcpy(&chunk_len, bytes.data() + offset, 4);
      std::memcpy(&chunk_type, bytes.data() + offset + 4, 4);
      offset += 8;
      if (offset + chunk_len > bytes.size()) throw Error::io("truncated GLB chunk");
      if (chunk_type == 0x4E4F534A)  // JSON
        out.doc = json::parse(bytes.begin() + offset, bytes.begin() + offset + chunk_len);
      else if (chunk_type == 0x004E4942)  // BIN
        bin.assign(bytes.begin() + offset, bytes.begin() + offset + chunk_len);
      offset += chunk_len;
    }
    if (out.doc.is_null()) throw Error::io("GLB container has no JSON chunk");
    for (const auto& buf : out.doc.value("buffers", json::array())) {
      if (buf.contains("uri")) throw Error::io("external buffers in GLB are not supported");
      out.buffers.push_back(bin);
    }
  } else {
    std::ifstream in(path);
    if (!in) throw Error::io("cannot open glTF: " + path);
    out.doc = json::parse(in, nullptr, /*allow_exceptions=*/true);
    for (const auto& buf : out.doc.value("buffers", json::array())) {
      const std::string uri = buf.value("uri", "");
      if (uri.rfind("data:", 0) == 0) {
        const std::size_t comma = uri.find(',');
        if (comma == std::string::npos) throw Error::io("malformed data URI in glTF buffer");
        out.buffers.push_back(base64_decode(uri.substr(comma + 1)));
      } else if (!uri.empty()) {
        out.buffers.push_back(read_file_bytes((fs::path(path).parent_path() / uri).string()));
      } else {
        throw Error::io("glTF buffer without uri outside GLB");
      }
    }
  }
  return out;
}

struct AccessorReader {
  const GltfBuffers& g;

  // Reads accessor `idx` as tightly packed floats with `components` per
  // element. Integer index accessors go through read_indices instead.
  std::vector<float> read_floats(int idx, int components) const {
    const json& acc = g.doc.at("accessors").at(idx);
    if (acc.value("componentType", 0) != 5126)
      throw Error::io("glTF accessor must be float for vertex attributes");
    const int count = acc.at("count").get<int>();
    const json& view = g.doc.at("bufferViews").at(acc.at("bufferView").get<int>());
    const auto& buffer = g.buffers.at(view.value("buffer", 0));
    const std::size_t base = view.value("byteOffset", 0u) + acc.value("byteOffset", 0u);
    const std::size_t stride = view.value("byteStride", 0u) == 0
                                   ? components * sizeof(float)
                                   : view.value("byteStride", 0u);
    std::vector<float> out(static_cast<std::size_t>(count) * components);
    for (int i = 0; i < count; ++i) {
      const std::size_t src = base + i * stride;
      if (src + components * sizeof(float) > buffer.size())
        throw Error::io("glTF accessor reads past buffer end");
      std::memcpy(out.data() + static_cast<std::size_t>(i) * components, buffer.data() + src,
                  components * sizeof(float));
    }
    return out;
  }

  std::vector<int> read_indices(int idx) const {
    const json& acc = g.doc.at("accessors").at(idx);
    const int ct = acc.value("componentType", 0);
    const int count = acc.at("count").get<int>();
    const json& view = g.doc.at("bufferViews").at(acc.at("bufferView").get<int>());
    const auto& buffer = g.buffers.at(view.value("buffer", 0));
    const std::size_t base = view.value("byteOffset", 0u) + acc.value("byteOffset", 0u);
    std::vector<int> out(count);
    for (int i = 0; i < count; ++i) {
      if (ct == 5123) {  // unsigned short
        std::uint16_t v;
        std::memcpy(&v, buffer.data() + base + i * 2, 2);
        out[i] = v;
      } else if (ct == 5125) {  // unsigned int
        std::uint32_t v;
        std::memcpy(&v, buffer.data() + base + i * 4, 4);
        out[i] = static_cast<int>(v);
      } else if (ct == 5121) {  // unsigned byte
        out[i] = buffer[base + i];
      } else {
        throw Error::io("unsupported glTF index component type");
      }
    }
    return out;
  }
};

}  // namespace

TriangleMesh read_gltf(const std::string& path) {
  const GltfBuffers g = load_gltf_document(path);
  const AccessorReader reader{g};
  TriangleMesh mesh;

  if (!g.doc.contains("meshes") || g.doc["meshes"].empty())
    throw Error::validation("glTF file contains no meshes");

  for (const auto& prim : g.doc["meshes"][0].value("primitives", json::array())) {
    if (prim.value("mode", 4) != 4)
      throw Error::validation("glTF primitive is not a triangle list; the mesh must be triangulated");
    const json& attrs = prim.at("attributes");
    if (!attrs.contains("TEXCOORD_0"))
      throw Error::validation("glTF primitive has no texture coordinates (mesh must be UV-mapped)");

    const std::vector<float> pos = reader.read_floats(attrs.at("POSITION").get<int>(), 3);
    const std::vector<float> tex = reader.read_floats(attrs.at("TEXCOORD_0").get<int>(), 2);
    const int base_vertex = static_cast<int>(mesh.vertices.size());
    for (std::size_t i = 0; i + 2 < pos.size(); i += 3)
      mesh.vertices.emplace_back(pos[i], pos[i + 1], pos[i + 2]);

    std::vector<int> indices;
    if (prim.contains("indices")) {
      indices = reader.read_indices(prim.at("indices").get<int>());
    } else {
      indices.resize(pos.size() / 3);
      for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
    }
    if (indices.size() % 3 != 0) throw Error::validation("glTF index count is not a multiple of 3");

    for (std::size_t i = 0; i < indices.size(); i += 3) {
      std::array<int, 3> face;
      std::array<Vec2, 3> uv;
      for (int k = 0; k < 3; ++k) {
        const int vi = indices[i + k];
        face[k] = base_vertex + vi;
        // glTF uv origin is top-left; mesh convention is bottom-left.
        uv[k] = Vec2(tex[2 * vi], 1.0 - tex[2 * vi + 1]);
      }
      mesh.faces.push_back(face);
      mesh.uv.push_back(uv);
    }

    if (prim.contains("material")) {
      const int mi = prim["material"].get<int>();
      mesh.material_name = g.doc["materials"].at(mi).value("name", "default");
    }
  }
  return mesh;
}

TexturedScene load_scene(const std::string& mesh_path, const std::string& texture_path,
                         const std::optional<std::string>& semantics_path) {
  TexturedScene scene;
  const std::string ext = lower_ext(mesh_path);
  if (ext == ".obj")
    scene.mesh = read_obj(mesh_path);
  else if (ext == ".gltf" || ext == ".glb")
    scene.mesh = read_gltf(mesh_path);
  else
    throw Error::io("unsupported mesh format: " + mesh_path);

  scene.mesh.validate();
  scene.texture = read_png(texture_path);

  if (semantics_path) {
    scene.semantics = read_label_png(*semantics_path);
    if (scene.semantics.width != scene.texture.width() ||
        scene.semantics.height != scene.texture.height())
      throw Error::validation(fmt::format(
          "semantic texture {}x{} does not match texture {}x{}", scene.semantics.width,
          scene.semantics.height, scene.texture.width(), scene.texture.height()));
    const int n_classes = SemanticClassSet::urban().size();
    for (const std::int16_t label : scene.semantics.labels)
      if (label != LabelImage::kUnlabeled && (label < 0 || label >= n_classes))
        throw Error::validation(fmt::format("semantic label {} outside the class set", label));
  } else {
    scene.semantics = LabelImage(scene.texture.height(), scene.texture.width());
  }

  scene.aabb = scene.mesh.compute_aabb();
  scene.validate();
  return scene;
}

void write_semantic_manifest(const std::string& path, const SemanticClassSet& classes) {
  json doc;
  doc["format"] = "citytex-semantic-labels";
  doc["version"] = 1;
  doc["sentinel"] = 255;
  doc["labels"] = classes.labels();
  json hierarchy = json::object();
  for (int i = 0; i < classes.size(); ++i) {
    const auto p = classes.parent(i);
    if (p) hierarchy[classes.name(i)] = classes.name(*p);
  }
  doc["hierarchy"] = hierarchy;
  std::ofstream out(path);
  if (!out) throw Error::io("cannot write semantic manifest: " + path);
  out << doc.dump(2) << "\n";
}

void save_scene(const TexturedScene& scene, const std::string& directory,
                const std::string& basename, const SemanticClassSet& classes) {
  fs::create_directories(directory);
  const fs::path dir(directory);
  const std::string texture_name = basename + "_texture.png";
  write_obj(scene.mesh, (dir / (basename + ".obj")).string(),
            (dir / (basename + ".mtl")).string(), texture_name);
  write_png((dir / texture_name).string(), scene.texture);
  write_label_png((dir / (basename + "_semantics.png")).string(), scene.semantics);
  write_semantic_manifest((dir / (basename + "_semantics.json")).string(), classes);
}

}  // namespace citytex
