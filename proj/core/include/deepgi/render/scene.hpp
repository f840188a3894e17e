// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepgi/render/mesh.hpp"
#include "deepgi/render/vec3.hpp"

namespace deepgi::render {

/// Parallelogram centre +- u +- v. The surface normal is normalize(u x v);
/// `infinite` turns the quad into the whole plane.
struct Quad {
  Vec3 centre;
  Vec3 u, v;
  Vec3 albedo{0.75, 0.75, 0.75};
  bool infinite = false;
};

enum class ObjectKind { sphere, cube, cylinder, mesh };

std::string_view object_kind_name(ObjectKind kind);
ObjectKind parse_object_kind(std::string_view name);

/// A single solid placed in the scene. `size` is the radius (sphere,
/// cylinder, mesh bounding sphere) or half edge (cube); cylinders have
/// half-height equal to `size` along their local y axis.
struct SceneObject {
  ObjectKind kind = ObjectKind::sphere;
  Vec3 position;
  Vec3 rotation_degrees;  // about x, then y, then z
  double size = 0.5;
  Vec3 albedo{0.75, 0.75, 0.75};
  std::shared_ptr<const TriangleMesh> mesh;  // kind == mesh only
};

/// `direction` points from surfaces toward the light.
struct DirectionalLight {
  Vec3 direction{0.0, 0.0, 1.0};
  Vec3 radiance{1.0, 1.0, 1.0};
};

struct Scene {
  std::vector<Quad> quads;
  std::vector<SceneObject> objects;
  std::optional<DirectionalLight> light;
  Vec3 environment;  // constant radiance for escaping rays

  /// Radius of a sphere about the origin enclosing all bounded geometry.
  double bounding_radius() const;
  /// Canonical text form; hashed into dataset manifests.
  std::string describe() const;
  /// Throws ConfigError on albedos outside [0, 1], a non-unit light
  /// direction or objects that poke out of the box.
  void validate() const;
};

struct Camera {
  Vec3 position{0.0, 0.0, 3.2};
  Vec3 look_at;
  Vec3 up{0.0, 1.0, 0.0};
  double fov_degrees = 50.0;  // vertical
  int resolution = 64;

  /// Ray through the centre of pixel (x, y); y grows downwards.
  Ray primary_ray(int x, int y) const;
  void validate() const;
};

namespace cornell {

inline constexpr Vec3 kWhite{0.75, 0.75, 0.75};
inline constexpr Vec3 kRed{0.75, 0.15, 0.15};
inline constexpr Vec3 kGreen{0.15, 0.75, 0.15};
/// Height of the light direction above the horizontal plane, as the y
/// component before normalisation.
inline constexpr double kLightElevation = 0.35;
inline constexpr Vec3 kLightRadiance{6.0, 6.0, 6.0};
inline constexpr Vec3 kObjectPosition{0.0, -0.3, 0.0};

/// The [-1, 1]^3 box without its +z wall: white floor, ceiling and back
/// wall, red left (-x) and green right (+x) walls.
std::vector<Quad> box_walls();

/// Light direction for a sweep angle: the light circles the vertical axis
/// and shines in through the open front for angles in (0, 180).
Vec3 light_direction(double angle_degrees);

/// Box plus one object and the swept directional light.
Scene make_scene(double light_angle_degrees, const SceneObject& object);

/// The default camera: outside the open face, looking at the box centre.
Camera make_camera(int resolution);

}  // namespace cornell

}  // namespace deepgi::render
