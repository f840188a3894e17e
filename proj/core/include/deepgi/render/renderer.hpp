// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "deepgi/common/image.hpp"
#include "deepgi/render/scene.hpp"

namespace deepgi::render {

struct Hit {
  double t = 0.0;
  Vec3 point;
  Vec3 normal;  // unit, facing against the incoming ray
  Vec3 albedo;
};

/// Nearest surface hit with t in (t_min, t_max).
bool intersect(const Scene& scene, const Ray& ray, double t_min, double t_max, Hit& hit);

/// Depth encoding divides the camera-space hit distance by this value:
/// the camera's distance from the origin plus the scene's bounding radius,
/// so every visible surface maps into [0, 1].
double depth_scale(const Scene& scene, const Camera& camera);

inline Vec3 encode_normal(const Vec3& n) { return (n + Vec3{1.0, 1.0, 1.0}) * 0.5; }
inline Vec3 decode_normal(const Vec3& e) { return e * 2.0 - Vec3{1.0, 1.0, 1.0}; }

/// Per-pixel primary-visibility buffers. Background pixels carry depth 1,
/// normal (0, 0, 0) and albedo 0.
struct GBuffers {
  Image depth;    // 1 channel
  Image normal;   // 3 channels, (n + 1) / 2
  Image diffuse;  // 3 channels, albedo
};

GBuffers raycast_gbuffers(const Scene& scene, const Camera& camera);

/// albedo / pi * radiance * max(0, n . l) * visibility, one shadow ray per
/// pixel. No environment or indirect term.
Image render_direct(const Scene& scene, const Camera& camera);

struct PathTraceOptions {
  int spp = 64;
  int max_bounces = 8;
  std::uint64_t seed = 0;
  /// Russian roulette applies from this path vertex on (1 is the primary hit).
  int roulette_start = 3;
};

/// Diffuse path tracing with next-event estimation toward the directional
/// light and cosine-weighted bounces. Pixel (x, y) sample s draws from an
/// RNG keyed on (seed, pixel, s), so the result does not depend on threading.
/// max_bounces = 1 reproduces render_direct exactly.
Image path_trace(const Scene& scene, const Camera& camera, const PathTraceOptions& options);

}  // namespace deepgi::render
