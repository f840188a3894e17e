// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/render/scene.hpp"

#include <cstdio>
#include <string>

#include "deepgi/common/error.hpp"

namespace deepgi::render {
namespace {

constexpr double kBoxHalf = 1.0;

// Bounding-sphere radius of an object relative to its `size`.
double object_extent(const SceneObject& o) {
  switch (o.kind) {
    case ObjectKind::cube:
      return o.size * std::sqrt(3.0);
    case ObjectKind::cylinder:
      return o.size * std::sqrt(2.0);
    default:
      return o.size;
  }
}

bool in_unit_range(const Vec3& v) {
  return v.x >= 0.0 && v.x <= 1.0 && v.y >= 0.0 && v.y <= 1.0 && v.z >= 0.0 && v.z <= 1.0;
}

void append(std::string& out, const char* label, const Vec3& v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s %.17g %.17g %.17g\n", label, v.x, v.y, v.z);
  out += buf;
}

}  // namespace

Mat3 Mat3::euler_degrees(const Vec3& angles) {
  const double ax = angles.x * kPi / 180.0, ay = angles.y * kPi / 180.0, az = angles.z * kPi / 180.0;
  Mat3 rx, ry, rz;
  rx.m[1][1] = std::cos(ax), rx.m[1][2] = -std::sin(ax), rx.m[2][1] = std::sin(ax), rx.m[2][2] = std::cos(ax);
  ry.m[0][0] = std::cos(ay), ry.m[0][2] = std::sin(ay), ry.m[2][0] = -std::sin(ay), ry.m[2][2] = std::cos(ay);
  rz.m[0][0] = std::cos(az), rz.m[0][1] = -std::sin(az), rz.m[1][0] = std::sin(az), rz.m[1][1] = std::cos(az);
  return rz * ry * rx;
}

std::string_view object_kind_name(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::sphere:
      return "sphere";
    case ObjectKind::cube:
      return "cube";
    case ObjectKind::cylinder:
      return "cylinder";
    case ObjectKind::mesh:
      return "mesh";
  }
  return "unknown";
}

ObjectKind parse_object_kind(std::string_view name) {
  for (auto k : {ObjectKind::sphere, ObjectKind::cube, ObjectKind::cylinder, ObjectKind::mesh}) {
    if (object_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown object kind '" + std::string(name) + "' (expected sphere, cube, cylinder or mesh)");
}

double Scene::bounding_radius() const {
  double r = 0.0;
  for (const auto& q : quads) {
    if (q.infinite) continue;
    for (double su : {-1.0, 1.0}) {
      for (double sv : {-1.0, 1.0}) r = std::max(r, length(q.centre + q.u * su + q.v * sv));
    }
  }
  for (const auto& o : objects) r = std::max(r, length(o.position) + object_extent(o));
  return r;
}

std::string Scene::describe() const {
  std::string out;
  for (const auto& q : quads) {
    out += q.infinite ? "plane\n" : "quad\n";
    append(out, " centre", q.centre);
    append(out, " u", q.u);
    append(out, " v", q.v);
    append(out, " albedo", q.albedo);
  }
  for (const auto& o : objects) {
    out += "object " + std::string(object_kind_name(o.kind)) + " size " + std::to_string(o.size) + "\n";
    append(out, " position", o.position);
    append(out, " rotation", o.rotation_degrees);
    append(out, " albedo", o.albedo);
    if (o.mesh) out += " triangles " + std::to_string(o.mesh->triangle_count()) + "\n";
  }
  if (light) {
    append(out, "light", light->direction);
    append(out, " radiance", light->radiance);
  }
  append(out, "environment", environment);
  return out;
}

void Scene::validate() const {
  bool boxed = false;
  for (const auto& q : quads) {
    if (!in_unit_range(q.albedo)) throw ConfigError("scene: wall albedo outside [0, 1]");
    if (length(cross(q.u, q.v)) == 0.0) throw ConfigError("scene: degenerate quad");
    boxed = boxed || !q.infinite;
  }
  for (const auto& o : objects) {
    if (!in_unit_range(o.albedo)) throw ConfigError("scene: object albedo outside [0, 1]");
    if (!(o.size > 0.0)) throw ConfigError("scene: object size must be positive");
    if (o.kind == ObjectKind::mesh && !o.mesh) throw ConfigError("scene: mesh object without a mesh");
    const double e = object_extent(o);
    if (boxed && (std::abs(o.position.x) + e > kBoxHalf || std::abs(o.position.y) + e > kBoxHalf ||
                  std::abs(o.position.z) + e > kBoxHalf)) {
      throw ConfigError("scene: " + std::string(object_kind_name(o.kind)) + " does not fit inside the box");
    }
  }
  if (light && std::abs(length(light->direction) - 1.0) > 1e-9) {
    throw ConfigError("scene: light direction must be unit length");
  }
}

Ray Camera::primary_ray(int x, int y) const {
  const Vec3 forward = normalize(look_at - position);
  const Vec3 right = normalize(cross(forward, up));
  const Vec3 true_up = cross(right, forward);
  const double half = std::tan(fov_degrees * kPi / 360.0);
  const double px = ((x + 0.5) / resolution * 2.0 - 1.0) * half;
  const double py = (1.0 - (y + 0.5) / resolution * 2.0) * half;
  return {position, normalize(forward + right * px + true_up * py)};
}

void Camera::validate() const {
  if (resolution < 1) throw ConfigError("camera: resolution must be >= 1");
  if (!(fov_degrees > 0.0 && fov_degrees < 180.0)) throw ConfigError("camera: fov must be in (0, 180)");
  const Vec3 view = look_at - position;
  if (!(length(view) > 1e-12)) throw ConfigError("camera: degenerate view vector (position equals look_at)");
  if (!(length(cross(view, up)) > 1e-12)) throw ConfigError("camera: up vector parallel to the view direction");
}

namespace cornell {

std::vector<Quad> box_walls() {
  const double h = kBoxHalf;
  return {
      {{0, -h, 0}, {0, 0, h}, {h, 0, 0}, kWhite, false},   // floor, normal +y
      {{0, h, 0}, {h, 0, 0}, {0, 0, h}, kWhite, false},    // ceiling, normal -y
      {{0, 0, -h}, {h, 0, 0}, {0, h, 0}, kWhite, false},   // back, normal +z
      {{-h, 0, 0}, {0, h, 0}, {0, 0, h}, kRed, false},     // left, normal +x
      {{h, 0, 0}, {0, 0, h}, {0, h, 0}, kGreen, false},    // right, normal -x
  };
}

Vec3 light_direction(double angle_degrees) {
  const double a = angle_degrees * kPi / 180.0;
  return normalize(Vec3{std::cos(a), kLightElevation, std::sin(a)});
}

Scene make_scene(double light_angle_degrees, const SceneObject& object) {
  Scene s;
  s.quads = box_walls();
  s.objects.push_back(object);
  s.light = DirectionalLight{light_direction(light_angle_degrees), kLightRadiance};
  return s;
}

Camera make_camera(int resolution) {
  Camera c;
  c.resolution = resolution;
  return c;
}

}  // namespace cornell

}  // namespace deepgi::render
