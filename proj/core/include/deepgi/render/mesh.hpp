// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "deepgi/render/vec3.hpp"

namespace deepgi::render {

struct MeshHit {
  double t = 0.0;
  Vec3 normal;  // geometric, unnormalized winding order
};

/// Triangle mesh with a median-split BVH. Geometry is recentred on its
/// bounding-box centre and scaled so its bounding sphere has radius 1.
class TriangleMesh {
 public:
  explicit TriangleMesh(std::vector<std::array<Vec3, 3>> triangles);

  /// Parses the `v` and `f` lines of an ASCII OBJ; faces with more than three
  /// vertices are fan-triangulated and negative indices are relative. Other
  /// line types are ignored.
  static TriangleMesh parse_obj(std::string_view text, std::string_view context = "obj");
  static TriangleMesh load_obj(const std::filesystem::path& path);

  /// Nearest hit with t in (t_min, t_max).
  bool intersect(const Ray& ray, double t_min, double t_max, MeshHit& hit) const;

  std::size_t triangle_count() const { return triangles_.size(); }
  const std::vector<std::array<Vec3, 3>>& triangles() const { return triangles_; }

 private:
  struct Node {
    Vec3 lo, hi;
    std::uint32_t first = 0;  // leaf: first triangle; interior: right child
    std::uint32_t count = 0;  // 0 for interior nodes (left child is the next node)
  };

  std::uint32_t build(std::uint32_t first, std::uint32_t count);

  std::vector<std::array<Vec3, 3>> triangles_;
  std::vector<Node> nodes_;
};

}  // namespace deepgi::render
