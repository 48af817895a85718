/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/fixture.hpp"
#include "citytex/image_io.hpp"
#include "citytex/scene.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <filesystem>
#include <fstream>

using namespace citytex;
namespace fs = std::filesystem;

namespace {

fs::path make_tmp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("citytex_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Unit cube with 12 triangles, one shared uv chart.
void write_unit_cube_obj(const fs::path& path) {
  std::ofstream obj(path);
  obj << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
      << "v 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n"
      << "vt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n";
  const int quads[6][4] = {{1, 4, 3, 2}, {5, 6, 7, 8}, {1, 2, 6, 5},
                           {2, 3, 7, 6}, {3, 4, 8, 7}, {4, 1, 5, 8}};
  for (const auto& q : quads) {
    obj << "f " << q[0] << "/1 " << q[1] << "/2 " << q[2] << "/3\n";
    obj << "f " << q[0] << "/1 " << q[2] << "/3 " << q[3] << "/4\n";
  }
}

}  // namespace

TEST_SUITE_BEGIN("scene");

TEST_CASE("unit cube obj loads with the expected bounding box") {
  const fs::path dir = make_tmp_dir("scene_cube");
  write_unit_cube_obj(dir / "cube.obj");
  write_png((dir / "tex.png").string(), oracle::random_image(3, 256, 256, 1));

  const TexturedScene scene = load_scene((dir / "cube.obj").string(), (dir / "tex.png").string());
  CHECK(scene.mesh.face_count() == 12);
  CHECK(scene.aabb.min.isApprox(Vec3(0, 0, 0)));
  CHECK(scene.aabb.max.isApprox(Vec3(1, 1, 1)));
  CHECK(scene.semantics.width == 256);
  for (const auto label : scene.semantics.labels) CHECK(label == LabelImage::kUnlabeled);
  fs::remove_all(dir);
}

TEST_CASE("face index beyond the vertex count is rejected") {
  const fs::path dir = make_tmp_dir("scene_badindex");
  std::ofstream(dir / "bad.obj") << "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 9/1\n";
  write_png((dir / "tex.png").string(), Image(3, 8, 8, 0.5));
  CHECK_THROWS_AS(load_scene((dir / "bad.obj").string(), (dir / "tex.png").string()), Error);
  fs::remove_all(dir);
}

TEST_CASE("faces without texture coordinates are rejected") {
  const fs::path dir = make_tmp_dir("scene_nouv");
  std::ofstream(dir / "nouv.obj") << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
  write_png((dir / "tex.png").string(), Image(3, 8, 8, 0.5));
  CHECK_THROWS_WITH_AS(load_scene((dir / "nouv.obj").string(), (dir / "tex.png").string()),
                       doctest::Contains("texture coordinates"), Error);
  fs::remove_all(dir);
}

TEST_CASE("non-triangulated faces are rejected") {
  const fs::path dir = make_tmp_dir("scene_quadface");
  std::ofstream(dir / "quad.obj")
      << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 4/1\n";
  write_png((dir / "tex.png").string(), Image(3, 8, 8, 0.5));
  CHECK_THROWS_WITH_AS(load_scene((dir / "quad.obj").string(), (dir / "tex.png").string()),
                       doctest::Contains("triangulated"), Error);
  fs::remove_all(dir);
}

TEST_CASE("semantic texture with mismatched dimensions is rejected") {
  const fs::path dir = make_tmp_dir("scene_semdim");
  write_unit_cube_obj(dir / "cube.obj");
  write_png((dir / "tex.png").string(), Image(3, 256, 256, 0.5));
  write_label_png((dir / "sem.png").string(), LabelImage(128, 128, 1));
  CHECK_THROWS_WITH_AS(load_scene((dir / "cube.obj").string(), (dir / "tex.png").string(),
                                  (dir / "sem.png").string()),
                       doctest::Contains("does not match"), Error);
  fs::remove_all(dir);
}

TEST_CASE("save then load reproduces vertices, faces and uv bit-exactly") {
  const fs::path dir = make_tmp_dir("scene_roundtrip");
  const CubeCity city = make_cube_city({2, 64, 512, 3});
  save_scene(city.scene, dir.string(), "rt", SemanticClassSet::urban());
  const TexturedScene back = load_scene((dir / "rt.obj").string(),
                                        (dir / "rt_texture.png").string(),
                                        (dir / "rt_semantics.png").string());

  REQUIRE(back.mesh.face_count() == city.scene.mesh.face_count());
  REQUIRE(back.mesh.vertices.size() == city.scene.mesh.vertices.size());
  for (std::size_t i = 0; i < back.mesh.vertices.size(); ++i)
    CHECK(back.mesh.vertices[i] == city.scene.mesh.vertices[i]);
  for (int f = 0; f < back.mesh.face_count(); ++f) {
    CHECK(back.mesh.faces[f] == city.scene.mesh.faces[f]);
    for (int k = 0; k < 3; ++k) CHECK(back.mesh.uv[f][k] == city.scene.mesh.uv[f][k]);
  }
  CHECK(back.semantics.labels == city.scene.semantics.labels);
  fs::remove_all(dir);
}

TEST_CASE("gltf reader handles embedded base64 buffers") {
  const fs::path dir = make_tmp_dir("scene_gltf");

  // One quad (two triangles), positions + uvs + u16 indices.
  const float positions[12] = {0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0};
  const float texcoords[8] = {0, 1, 1, 1, 1, 0, 0, 0};  // top-left origin
  const std::uint16_t indices[6] = {0, 1, 2, 0, 2, 3};
  std::string bin;
  bin.append(reinterpret_cast<const char*>(positions), sizeof(positions));
  bin.append(reinterpret_cast<const char*>(texcoords), sizeof(texcoords));
  bin.append(reinterpret_cast<const char*>(indices), sizeof(indices));

  static const char* b64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string encoded;
  for (std::size_t i = 0; i < bin.size(); i += 3) {
    std::uint32_t v = static_cast<unsigned char>(bin[i]) << 16;
    if (i + 1 < bin.size()) v |= static_cast<unsigned char>(bin[i + 1]) << 8;
    if (i + 2 < bin.size()) v |= static_cast<unsigned char>(bin[i + 2]);
    encoded += b64[(v >> 18) & 63];
    encoded += b64[(v >> 12) & 63];
    encoded += i + 1 < bin.size() ? b64[(v >> 6) & 63] : '=';
    encoded += i + 2 < bin.size() ? b64[v & 63] : '=';
  }

  std::ofstream(dir / "quad.gltf") << R"({
    "asset": {"version": "2.0"},
    "buffers": [{"byteLength": )"
                                   << bin.size() << R"(, "uri": "data:application/octet-stream;base64,)"
                                   << encoded << R"("}],
    "bufferViews": [
      {"buffer": 0, "byteOffset": 0, "byteLength": 48},
      {"buffer": 0, "byteOffset": 48, "byteLength": 32},
      {"buffer": 0, "byteOffset": 80, "byteLength": 12}
    ],
    "accessors": [
      {"bufferView": 0, "componentType": 5126, "count": 4, "type": "VEC3"},
      {"bufferView": 1, "componentType": 5126, "count": 4, "type": "VEC2"},
      {"bufferView": 2, "componentType": 5123, "count": 6, "type": "SCALAR"}
    ],
    "meshes": [{"primitives": [{"attributes": {"POSITION": 0, "TEXCOORD_0": 1}, "indices": 2}]}]
  })";
  write_png((dir / "tex.png").string(), Image(3, 16, 16, 0.25));

  const TexturedScene scene =
      load_scene((dir / "quad.gltf").string(), (dir / "tex.png").string());
  CHECK(scene.mesh.face_count() == 2);
  // glTF v runs top-down; mesh uv runs bottom-up.
  CHECK(scene.mesh.uv[0][0] == Vec2(0, 0));
  CHECK(scene.mesh.uv[1][2] == Vec2(0, 1));
  fs::remove_all(dir);
}

TEST_SUITE_END();
