// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "deepgi/common/binary_io.hpp"
#include "deepgi/common/error.hpp"
#include "deepgi/common/parallel.hpp"
#include "deepgi/render/dataset.hpp"
#include "deepgi/render/raster.hpp"
#include "deepgi/render/renderer.hpp"
#include "support/test_util.hpp"

using namespace deepgi;
using namespace deepgi::render;
using deepgi::testing::TempDir;

namespace {

Camera camera_at(Vec3 pos, Vec3 look, int res, Vec3 up = {0, 1, 0}) {
  Camera c;
  c.position = pos;
  c.look_at = look;
  c.up = up;
  c.resolution = res;
  return c;
}

Vec3 pixel(const Image& img, int x, int y) { return {img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)}; }

Scene empty_box() {
  Scene s;
  s.quads = cornell::box_walls();
  s.light = DirectionalLight{cornell::light_direction(90.0), cornell::kLightRadiance};
  return s;
}

Scene sphere_box(double light_deg = 90.0) {
  SceneObject o;
  o.kind = ObjectKind::sphere;
  o.position = cornell::kObjectPosition;
  return cornell::make_scene(light_deg, o);
}

constexpr const char* kCubeObj =
    "# unit cube\n"
    "v -1 -1 -1\nv 1 -1 -1\nv 1 1 -1\nv -1 1 -1\n"
    "v -1 -1 1\nv 1 -1 1\nv 1 1 1\nv -1 1 1\n"
    "f 1 2 3 4\nf 5 8 7 6\nf 1 5 6 2\nf 4 3 7 8\nf 1 4 8 5\nf 2/1/1 6/2/2 7/3/3 3/4/4\n";

}  // namespace

TEST_CASE("gbuffers: back wall of the empty box faces the camera") {
  const auto cam = cornell::make_camera(64);
  const auto g = raycast_gbuffers(empty_box(), cam);
  const Vec3 n = decode_normal(pixel(g.normal, 32, 32));
  CHECK(std::abs(n.x) < 1e-4);
  CHECK(std::abs(n.y) < 1e-4);
  CHECK(std::abs(n.z - 1.0) < 1e-4);
  CHECK(pixel(g.diffuse, 32, 32) == Vec3{0.75f, 0.75f, 0.75f});
}

TEST_CASE("gbuffers: depth is monotone along a floor-to-horizon scanline") {
  Scene s;
  // A large finite floor keeps distant hits inside the depth normalisation.
  s.quads.push_back({{0, -1, 0}, {0, 0, 40}, {40, 0, 0}, {0.5, 0.5, 0.5}, false});
  const auto cam = camera_at({0, 0, 3.2}, {0, -0.2, 0}, 48);
  const auto g = raycast_gbuffers(s, cam);
  int floor_pixels = 0;
  for (int y = 47; y > 0; --y) {
    const float below = g.depth.at(24, y), above = g.depth.at(24, y - 1);
    CHECK(above >= below);
    if (above < 1.0f) {
      CHECK(above > below);
      ++floor_pixels;
    }
  }
  CHECK(floor_pixels > 10);
  CHECK(g.depth.at(24, 0) == 1.0f);  // sky above the horizon
}

TEST_CASE("gbuffers: unit sphere hit distance matches the closed form") {
  Scene s;
  SceneObject o;
  o.size = 1.0;
  s.objects.push_back(o);
  for (Vec3 pos : {Vec3{0, 0, 3.2}, Vec3{0.7, 1.1, 2.9}}) {
    const auto cam = camera_at(pos, {0.1, -0.05, 0}, 65);
    for (auto [x, y] : {std::pair{32, 32}, std::pair{28, 36}}) {
      const Ray r = cam.primary_ray(x, y);
      // |o + t d|^2 = 1 with |d| = 1: t = -(o.d) - sqrt((o.d)^2 - |o|^2 + 1).
      const double od = r.origin.x * r.dir.x + r.origin.y * r.dir.y + r.origin.z * r.dir.z;
      const double oo = r.origin.x * r.origin.x + r.origin.y * r.origin.y + r.origin.z * r.origin.z;
      const double expected = -od - std::sqrt(od * od - oo + 1.0);
      Hit hit;
      REQUIRE(intersect(s, r, 1e-9, 1e30, hit));
      CHECK(std::abs(hit.t - expected) < 1e-5);
      const auto g = raycast_gbuffers(s, cam);
      CHECK(std::abs(g.depth.at(x, y) * depth_scale(s, cam) - expected) < 1e-5);
      CHECK(std::abs(length(hit.point) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("gbuffers: cube, cylinder and mesh distances") {
  const Ray down_z{{0, 0, 3.2}, {0, 0, -1}};
  auto hit_t = [&](const SceneObject& o) {
    Scene s;
    s.objects.push_back(o);
    Hit h;
    REQUIRE(intersect(s, down_z, 1e-9, 1e30, h));
    return h;
  };
  SceneObject cube;
  cube.kind = ObjectKind::cube;
  cube.size = 0.5;
  auto h = hit_t(cube);
  CHECK(h.t == doctest::Approx(2.7).epsilon(1e-12));
  CHECK(h.normal == Vec3{0, 0, 1});
  cube.rotation_degrees = {0, 45, 0};
  CHECK(hit_t(cube).t == doctest::Approx(3.2 - 0.5 * std::sqrt(2.0)).epsilon(1e-12));

  SceneObject cyl;
  cyl.kind = ObjectKind::cylinder;
  cyl.size = 0.4;
  CHECK(hit_t(cyl).t == doctest::Approx(2.8).epsilon(1e-12));
  cyl.rotation_degrees = {90, 0, 0};  // cap now faces +z
  h = hit_t(cyl);
  CHECK(h.t == doctest::Approx(2.8).epsilon(1e-12));
  CHECK(std::abs(h.normal.z - 1.0) < 1e-12);

  SceneObject mesh;
  mesh.kind = ObjectKind::mesh;
  mesh.size = 0.6;
  mesh.mesh = std::make_shared<TriangleMesh>(TriangleMesh::parse_obj(kCubeObj));
  h = hit_t(mesh);
  CHECK(h.t == doctest::Approx(3.2 - 0.6 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(std::abs(h.normal.z - 1.0) < 1e-12);
}

TEST_CASE("gbuffers: normals decode to unit vectors and background convention holds") {
  const auto cam = cornell::make_camera(32);
  SceneObject o;
  o.kind = ObjectKind::cylinder;
  o.size = 0.4;
  o.position = cornell::kObjectPosition;
  o.rotation_degrees = {20, 35, 10};
  const auto g = raycast_gbuffers(cornell::make_scene(60, o), cam);
  int background = 0;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const Vec3 e = pixel(g.normal, x, y);
      if (g.depth.at(x, y) == 1.0f) {
        ++background;
        CHECK(e == Vec3{});
        CHECK(pixel(g.diffuse, x, y) == Vec3{});
        continue;
      }
      CHECK(std::abs(length(decode_normal(e)) - 1.0) < 1e-3);
      CHECK((g.depth.at(x, y) > 0.0f && g.depth.at(x, y) < 1.0f));
    }
  }
  // The box fills the view except for corners past the open face.
  CHECK(background < 32 * 32 / 4);
}

TEST_CASE("gbuffers: normal encoding round trip") {
  SplitMix64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 n = normalize(Vec3{rng.normal(), rng.normal(), rng.normal()});
    const Vec3 e = encode_normal(n);
    const Vec3 f{static_cast<float>(e.x), static_cast<float>(e.y), static_cast<float>(e.z)};
    CHECK(length(decode_normal(f) - n) < 1e-3);
  }
}

TEST_CASE("direct: head-on unoccluded white wall gives 1/pi") {
  Scene s;
  s.quads.push_back({{0, 0, -1}, {1, 0, 0}, {0, 1, 0}, {1, 1, 1}, false});
  s.light = DirectionalLight{{0, 0, 1}, {1, 1, 1}};
  const auto img = render_direct(s, camera_at({0, 0, 3.2}, {0, 0, 0}, 16));
  for (int c = 0; c < 3; ++c) CHECK(std::abs(img.at(8, 8, c) - 1.0 / kPi) < 1e-6);
}

TEST_CASE("direct: pixel in an occluded region is exactly zero") {
  Scene s;
  s.quads.push_back({{0, -1, 0}, {0, 0, 1}, {1, 0, 0}, {0.75, 0.75, 0.75}, true});
  SceneObject o;
  o.size = 0.5;
  o.position = {0, -0.3, 0};
  s.objects.push_back(o);
  s.light = DirectionalLight{{0, 1, 0}, {5, 5, 5}};
  const auto cam = camera_at({0, 0, 3.2}, {0, -0.6, 0}, 64);
  const auto img = render_direct(s, cam);
  int shadowed = 0, lit = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      Hit h;
      if (!intersect(s, cam.primary_ray(x, y), 1e-9, 1e30, h) || std::abs(h.point.y + 1.0) > 1e-9) continue;
      const double r = std::hypot(h.point.x, h.point.z);
      if (r < 0.3) {  // under the sphere: the upward shadow ray must hit it
        ++shadowed;
        CHECK(pixel(img, x, y) == Vec3{});
      } else if (r > 0.6) {
        ++lit;
        CHECK(img.at(x, y, 0) == doctest::Approx(0.75 * 5 / kPi).epsilon(1e-6));
      }
    }
  }
  CHECK(shadowed > 5);
  CHECK(lit > 100);
}

TEST_CASE("direct: rotating the light changes the buffer") {
  const auto cam = cornell::make_camera(32);
  const auto a = render_direct(sphere_box(90.0), cam);
  const auto b = render_direct(sphere_box(90.0 + 120.0 / 9.0), cam);
  double l1 = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) l1 += std::abs(a.data[i] - b.data[i]);
  CHECK(l1 > 0.0);
}

TEST_CASE("path trace: diffuse plane under a uniform sky reflects albedo") {
  Scene s;
  s.quads.push_back({{0, -1, 0}, {0, 0, 1}, {1, 0, 0}, {0.5, 0.5, 0.5}, true});
  s.environment = {1, 1, 1};
  const auto cam = camera_at({0, 1, 0}, {0, -1, 0}, 8, {0, 0, -1});
  PathTraceOptions opt;
  opt.spp = 1024;
  opt.seed = 5;
  const auto img = path_trace(s, cam, opt);
  for (float v : img.data) CHECK(std::abs(v - 0.5) < 0.02 * 0.5);
}

TEST_CASE("path trace: one bounce reproduces the direct pass") {
  const auto cam = cornell::make_camera(32);
  const auto scene = sphere_box(70.0);
  PathTraceOptions opt;
  opt.spp = 8;
  opt.max_bounces = 1;
  const auto pt = path_trace(scene, cam, opt);
  const auto direct = render_direct(scene, cam);
  // Pixel-centre sampling makes the one-vertex estimator deterministic, so
  // the Monte-Carlo noise bound collapses to equality.
  double diff = 0.0;
  for (std::size_t i = 0; i < pt.data.size(); ++i) diff += std::abs(pt.data[i] - direct.data[i]);
  CHECK(diff / static_cast<double>(pt.data.size()) < 1e-7);
}

TEST_CASE("path trace: doubling spp halves per-pixel variance") {
  const auto cam = cornell::make_camera(8);
  const auto scene = sphere_box(100.0);
  auto mean_variance = [&](int spp) {
    constexpr int kRuns = 32;
    std::vector<double> sum(8 * 8 * 3, 0.0), sum2(8 * 8 * 3, 0.0);
    for (int r = 0; r < kRuns; ++r) {
      PathTraceOptions opt;
      opt.spp = spp;
      opt.seed = 1000 + static_cast<std::uint64_t>(r);
      const auto img = path_trace(scene, cam, opt);
      for (std::size_t i = 0; i < img.data.size(); ++i) sum[i] += img.data[i], sum2[i] += double(img.data[i]) * img.data[i];
    }
    double v = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
      const double m = sum[i] / kRuns;
      v += (sum2[i] / kRuns - m * m) * kRuns / (kRuns - 1);
    }
    return v / static_cast<double>(sum.size());
  };
  const double ratio = mean_variance(8) / mean_variance(16);
  CAPTURE(ratio);
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.5);
}

TEST_CASE("path trace: indirect light only adds energy") {
  const auto cam = cornell::make_camera(16);
  const auto scene = sphere_box(50.0);
  PathTraceOptions opt;
  opt.spp = 64;
  const auto gt = path_trace(scene, cam, opt);
  const auto direct = render_direct(scene, cam);
  double d = 0.0;
  for (std::size_t i = 0; i < gt.data.size(); ++i) d += gt.data[i] - direct.data[i];
  CHECK(d / static_cast<double>(gt.data.size()) >= -0.01);
  CHECK(d > 0.0);
}

TEST_CASE("path trace: result does not depend on thread count") {
  const auto cam = cornell::make_camera(16);
  PathTraceOptions opt;
  opt.spp = 4;
  opt.seed = 77;
  const int saved = worker_count();
  set_worker_count(1);
  const auto a = path_trace(sphere_box(), cam, opt);
  set_worker_count(4);
  const auto b = path_trace(sphere_box(), cam, opt);
  set_worker_count(saved);
  CHECK(a.data == b.data);
}

TEST_CASE("renderer: invalid inputs are rejected") {
  auto cam = cornell::make_camera(8);
  cam.look_at = cam.position;
  CHECK_THROWS_AS(raycast_gbuffers(sphere_box(), cam), ConfigError);
  cam = cornell::make_camera(8);
  PathTraceOptions opt;
  opt.spp = 0;
  CHECK_THROWS_AS(path_trace(sphere_box(), cam, opt), ConfigError);
  opt.spp = 1;
  opt.max_bounces = 0;
  CHECK_THROWS_AS(path_trace(sphere_box(), cam, opt), ConfigError);
  auto scene = sphere_box();
  scene.objects[0].size = 0.9;
  CHECK_THROWS_AS(render_direct(scene, cam), ConfigError);
  scene = sphere_box();
  scene.quads[0].albedo = {1.5, 0, 0};
  CHECK_THROWS_AS(render_direct(scene, cam), ConfigError);
}

TEST_CASE("mesh: OBJ parsing handles polygons, slashes and relative indices") {
  const auto cube = TriangleMesh::parse_obj(kCubeObj);
  CHECK(cube.triangle_count() == 12);
  const auto tri = TriangleMesh::parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
  CHECK(tri.triangle_count() == 1);
  CHECK_THROWS_AS(TriangleMesh::parse_obj("v 0 0 0\nf 1 2 3\n"), FormatError);
  CHECK_THROWS_AS(TriangleMesh::parse_obj("v 0 0 zero\n"), FormatError);
  CHECK_THROWS_AS(TriangleMesh::parse_obj("v 0 0 0\n"), FormatError);
}

TEST_CASE("mesh: BVH agrees with brute force") {
  // A tessellated sphere gives enough triangles for a multi-level tree.
  std::string obj;
  const int rings = 12, segs = 24;
  for (int i = 0; i <= rings; ++i) {
    for (int j = 0; j < segs; ++j) {
      const double th = kPi * i / rings, ph = 2 * kPi * j / segs;
      obj += "v " + std::to_string(std::sin(th) * std::cos(ph)) + " " + std::to_string(std::cos(th)) + " " +
             std::to_string(std::sin(th) * std::sin(ph)) + "\n";
    }
  }
  for (int i = 0; i < rings; ++i) {
    for (int j = 0; j < segs; ++j) {
      const int a = i * segs + j + 1, b = i * segs + (j + 1) % segs + 1;
      obj += "f " + std::to_string(a) + " " + std::to_string(b) + " " + std::to_string(b + segs) + " " +
             std::to_string(a + segs) + "\n";
    }
  }
  const auto mesh = TriangleMesh::parse_obj(obj);
  SplitMix64 rng(9);
  int hits = 0;
  for (int i = 0; i < 500; ++i) {
    const Vec3 o = normalize(Vec3{rng.normal(), rng.normal(), rng.normal()}) * 3.0;
    const Vec3 d = normalize(Vec3{rng.normal(), rng.normal(), rng.normal()} * 0.3 - o);
    const Ray r{o, d};
    double best = 1e30;
    for (const auto& t : mesh.triangles()) {
      const Vec3 e1 = t[1] - t[0], e2 = t[2] - t[0], p = cross(d, e2);
      const double det = dot(e1, p);
      if (std::abs(det) < 1e-14) continue;
      const Vec3 s = o - t[0];
      const double u = dot(s, p) / det, v = dot(d, cross(s, e1)) / det;
      if (u < 0 || v < 0 || u + v > 1) continue;
      const double tt = dot(e2, cross(s, e1)) / det;
      if (tt > 1e-9) best = std::min(best, tt);
    }
    MeshHit h;
    const bool found = mesh.intersect(r, 1e-9, 1e30, h);
    CHECK(found == (best < 1e30));
    if (found) {
      ++hits;
      CHECK(h.t == doctest::Approx(best).epsilon(1e-9));
    }
  }
  CHECK(hits > 100);
}

TEST_CASE("raster: round trip, truncation and bad magic") {
  TempDir dir("raster");
  Image img(5, 3, 3);
  SplitMix64 rng(1);
  for (auto& v : img.data) v = rng.normal();
  write_raster(dir.path() / "a.dib", img);
  const auto back = read_raster(dir.path() / "a.dib");
  CHECK(back.same_shape(img));
  CHECK(back.data == img.data);
  auto bytes = encode_raster(img);
  CHECK(bytes.size() == 16 + 5 * 3 * 3 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "DIB1");
  CHECK(bytes[4] == 5);  // little-endian width
  CHECK_THROWS_AS(decode_raster(std::span(bytes).first(bytes.size() - 1)), FormatError);
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_raster(bytes), FormatError);
}

TEST_CASE("dataset: 10 light x 12 object steps x 2 objects gives 240 frames") {
  TempDir dir("data");
  SweepConfig sweep;
  sweep.resolution = 4;
  sweep.spp = 1;
  sweep.max_bounces = 2;
  sweep.seed = 7;
  CHECK(sweep.frame_count() == 240);
  const auto m = generate_dataset(sweep, dir.path());
  CHECK(m.frames.size() == 240);
  const auto back = read_manifest(dir.path());
  CHECK(back.frames.size() == 240);
  CHECK(format_manifest(back) == format_manifest(m));
  std::set<std::pair<double, double>> coords;
  for (const auto& f : back.frames) coords.insert({f.light_deg, f.rotation_deg.y + 1000.0 * (f.kind == ObjectKind::cube)});
  CHECK(coords.size() == 240);
  CHECK(m.count(Split::train) + m.count(Split::val) + m.count(Split::test) == 240);
  CHECK(m.count(Split::val) == 24);
}

TEST_CASE("dataset: same seed regenerates bit-identical files") {
  TempDir a("data"), b("data");
  SweepConfig sweep;
  sweep.light_steps = 2;
  sweep.object_steps = 2;
  sweep.objects = {ObjectKind::cube};
  sweep.resolution = 16;
  sweep.spp = 4;
  sweep.seed = 11;
  const int saved = worker_count();
  set_worker_count(1);
  const auto ma = generate_dataset(sweep, a.path());
  set_worker_count(3);
  generate_dataset(sweep, b.path());
  set_worker_count(saved);
  for (const auto& f : ma.frames) {
    for (const auto& p : f.paths) CHECK(read_file_bytes(a.path() / p) == read_file_bytes(b.path() / p));
  }
  CHECK(read_file_bytes(a.path() / kManifestName) == read_file_bytes(b.path() / kManifestName));
  // Ground truth actually varies with the seed.
  sweep.seed = 12;
  TempDir c("data");
  generate_dataset(sweep, c.path());
  CHECK(read_file_bytes(a.path() / ma.frames[0].path(Buffer::gt)) !=
        read_file_bytes(c.path() / ma.frames[0].path(Buffer::gt)));
}

TEST_CASE("dataset: buffers have the documented shapes") {
  TempDir dir("data");
  SweepConfig sweep;
  sweep.light_steps = 1;
  sweep.object_steps = 1;
  sweep.objects = {ObjectKind::sphere};
  sweep.resolution = 8;
  sweep.spp = 2;
  const auto m = generate_dataset(sweep, dir.path());
  const auto& f = m.frames.at(0);
  CHECK(f.path(Buffer::gt) == "000000_gt.dib");
  CHECK(read_raster(dir.path() / f.path(Buffer::depth)).channels == 1);
  for (auto b : {Buffer::normal, Buffer::diffuse, Buffer::direct, Buffer::gt}) {
    const auto img = read_raster(dir.path() / f.path(b));
    CHECK(img.channels == 3);
    CHECK(img.width == 8);
  }
}

TEST_CASE("dataset: zero frames is an error and leaves no manifest") {
  TempDir dir("data");
  SweepConfig sweep;
  sweep.light_steps = 0;
  CHECK_THROWS_AS(generate_dataset(sweep, dir.path()), ConfigError);
  sweep.light_steps = 1;
  sweep.objects.clear();
  CHECK_THROWS_AS(generate_dataset(sweep, dir.path()), ConfigError);
  CHECK_FALSE(std::filesystem::exists(dir.path() / kManifestName));
  sweep.objects = {ObjectKind::mesh};
  CHECK_THROWS_AS(generate_dataset(sweep, dir.path()), ConfigError);
}

TEST_CASE("split: holding out [40, 60] of a 0-180 sweep at 10 degree steps") {
  SweepConfig sweep;
  sweep.light_min_deg = 0;
  sweep.light_max_deg = 180;
  sweep.light_steps = 19;
  DatasetManifest m;
  for (int i = 0; i < 19; ++i) {
    FrameRecord f;
    f.index = i;
    f.light_deg = sweep.light_angle(i);
    m.frames.push_back(f);
  }
  SplitConfig cfg;
  cfg.holdout = {{40.0, 60.0}};
  cfg.val_fraction = 0.2;
  const auto s = split_dataset(m, cfg);
  std::set<double> test;
  for (const auto& f : s.frames_in(Split::test)) test.insert(f.light_deg);
  CHECK(test == std::set<double>{40.0, 50.0, 60.0});
  CHECK(s.count(Split::val) == 3);  // round(0.2 * 16)
  CHECK(s.count(Split::train) + s.count(Split::val) + s.count(Split::test) == 19);
  CHECK(format_manifest(split_dataset(m, cfg)) == format_manifest(s));

  cfg.holdout.clear();
  const auto none = split_dataset(m, cfg);
  CHECK(none.count(Split::test) == 0);
  CHECK(none.count(Split::train) + none.count(Split::val) == 19);

  cfg.holdout = {{60.0, 40.0}};
  CHECK_THROWS_AS(split_dataset(m, cfg), ConfigError);
  cfg.holdout = {{-10.0, 200.0}};
  CHECK_THROWS_AS(split_dataset(m, cfg), ConfigError);
}

TEST_CASE("manifest: malformed text is rejected") {
  CHECK_THROWS_AS(parse_manifest("not a manifest"), FormatError);
  CHECK_THROWS_AS(parse_manifest("deepgi-manifest 2\n"), FormatError);
  const std::string good =
      "deepgi-manifest 1\nseed 1\nspp 2\nmax_bounces 3\nresolution 4\nscene_hash 00000000000000ff\nframes 1\n"
      "0 cube 30 0 0 0 test a b c d e\n";
  const auto m = parse_manifest(good);
  CHECK(m.scene_hash == 0xff);
  CHECK(m.frames.at(0).split == Split::test);
  CHECK(format_manifest(m) == good);
  CHECK_THROWS_AS(parse_manifest(good.substr(0, good.size() - 4)), FormatError);
  CHECK_THROWS_AS(parse_manifest(good + "extra\n"), FormatError);
}
