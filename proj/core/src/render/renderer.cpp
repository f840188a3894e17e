// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/render/renderer.hpp"

#include <limits>
#include <string>

#include "deepgi/common/error.hpp"
#include "deepgi/common/parallel.hpp"
#include "deepgi/common/random.hpp"

namespace deepgi::render {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTMin = 1e-9;
constexpr double kOffset = 1e-7;  // along the normal, for secondary rays

double uniform01(SplitMix64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool hit_quad(const Quad& q, const Ray& ray, double t_min, double t_max, double& t, Vec3& n) {
  n = normalize(cross(q.u, q.v));
  const double denom = dot(n, ray.dir);
  if (std::abs(denom) < 1e-15) return false;
  t = dot(n, q.centre - ray.origin) / denom;
  if (!(t > t_min && t < t_max)) return false;
  if (q.infinite) return true;
  const Vec3 d = ray.origin + ray.dir * t - q.centre;
  return std::abs(dot(d, q.u)) <= dot(q.u, q.u) && std::abs(dot(d, q.v)) <= dot(q.v, q.v);
}

bool hit_sphere(const Ray& r, double radius, double t_min, double t_max, double& t, Vec3& n) {
  const double b = dot(r.origin, r.dir);
  const double c = dot(r.origin, r.origin) - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return false;
  const double s = std::sqrt(disc);
  // Citardauq form for the near root avoids cancellation.
  const double q = b > 0.0 ? -b - s : -b + s;
  double t0 = q, t1 = q != 0.0 ? c / q : q;
  if (t0 > t1) std::swap(t0, t1);
  t = t0 > t_min ? t0 : t1;
  if (!(t > t_min && t < t_max)) return false;
  n = (r.origin + r.dir * t) / radius;
  return true;
}

bool hit_cube(const Ray& r, double half, double t_min, double t_max, double& t, Vec3& n) {
  double t0 = -kInf, t1 = kInf;
  int axis0 = 0, axis1 = 0;
  for (int a = 0; a < 3; ++a) {
    const double inv = 1.0 / r.dir[a];
    double tn = (-half - r.origin[a]) * inv, tf = (half - r.origin[a]) * inv;
    if (tn > tf) std::swap(tn, tf);
    if (tn > t0) t0 = tn, axis0 = a;
    if (tf < t1) t1 = tf, axis1 = a;
  }
  if (t0 > t1) return false;
  int axis;
  if (t0 > t_min && t0 < t_max) {
    t = t0, axis = axis0;
  } else if (t1 > t_min && t1 < t_max) {
    t = t1, axis = axis1;
  } else {
    return false;
  }
  const double side = (r.origin + r.dir * t)[axis] > 0.0 ? 1.0 : -1.0;
  n = Vec3{axis == 0 ? side : 0.0, axis == 1 ? side : 0.0, axis == 2 ? side : 0.0};
  return true;
}

// Capped cylinder around the local y axis.
bool hit_cylinder(const Ray& r, double radius, double t_min, double t_max, double& t, Vec3& n) {
  bool found = false;
  const double a = r.dir.x * r.dir.x + r.dir.z * r.dir.z;
  if (a > 1e-15) {
    const double b = r.origin.x * r.dir.x + r.origin.z * r.dir.z;
    const double c = r.origin.x * r.origin.x + r.origin.z * r.origin.z - radius * radius;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      for (double tc : {(-b - s) / a, (-b + s) / a}) {
        if (!(tc > t_min && tc < t_max)) continue;
        const Vec3 p = r.origin + r.dir * tc;
        if (std::abs(p.y) > radius) continue;
        t = t_max = tc;
        n = Vec3{p.x, 0.0, p.z} / radius;
        found = true;
        break;
      }
    }
  }
  if (std::abs(r.dir.y) > 1e-15) {
    for (double cap : {-radius, radius}) {
      const double tc = (cap - r.origin.y) / r.dir.y;
      if (!(tc > t_min && tc < t_max)) continue;
      const Vec3 p = r.origin + r.dir * tc;
      if (p.x * p.x + p.z * p.z > radius * radius) continue;
      t = t_max = tc;
      n = Vec3{0.0, cap > 0.0 ? 1.0 : -1.0, 0.0};
      found = true;
    }
  }
  return found;
}

bool hit_object(const SceneObject& o, const Ray& ray, double t_min, double t_max, double& t, Vec3& n) {
  const Mat3 rot = Mat3::euler_degrees(o.rotation_degrees);
  const Mat3 inv = rot.transposed();
  const Ray local{inv * (ray.origin - o.position), inv * ray.dir};
  Vec3 ln;
  bool found = false;
  switch (o.kind) {
    case ObjectKind::sphere:
      found = hit_sphere(local, o.size, t_min, t_max, t, ln);
      break;
    case ObjectKind::cube:
      found = hit_cube(local, o.size, t_min, t_max, t, ln);
      break;
    case ObjectKind::cylinder:
      found = hit_cylinder(local, o.size, t_min, t_max, t, ln);
      break;
    case ObjectKind::mesh: {
      const Ray unit{local.origin / o.size, local.dir};
      MeshHit mh;
      found = o.mesh->intersect(unit, t_min / o.size, t_max / o.size, mh);
      if (found) {
        t = mh.t * o.size;
        ln = normalize(mh.normal);
      }
      break;
    }
  }
  if (found) n = rot * ln;
  return found;
}

bool occluded(const Scene& scene, const Ray& ray) {
  Hit ignored;
  return intersect(scene, ray, kTMin, kInf, ignored);
}

Vec3 direct_at(const Scene& scene, const Hit& hit) {
  if (!scene.light) return {};
  const double cos_l = dot(hit.normal, scene.light->direction);
  if (cos_l <= 0.0) return {};
  if (occluded(scene, {hit.point + hit.normal * kOffset, scene.light->direction})) return {};
  return hit.albedo * scene.light->radiance * (cos_l / kPi);
}

// Cosine-weighted direction about unit normal n.
Vec3 sample_cosine(const Vec3& n, SplitMix64& rng) {
  const double u1 = uniform01(rng), u2 = uniform01(rng);
  const double r = std::sqrt(u1), phi = 2.0 * kPi * u2;
  const Vec3 a = std::abs(n.x) > 0.9 ? Vec3{0.0, 1.0, 0.0} : Vec3{1.0, 0.0, 0.0};
  const Vec3 b1 = normalize(cross(a, n));
  const Vec3 b2 = cross(n, b1);
  return normalize(b1 * (r * std::cos(phi)) + b2 * (r * std::sin(phi)) + n * std::sqrt(std::max(0.0, 1.0 - u1)));
}

void check_inputs(const Scene& scene, const Camera& camera) {
  camera.validate();
  scene.validate();
}

void store(Image& img, int x, int y, const Vec3& v) {
  img.at(x, y, 0) = static_cast<float>(v.x);
  img.at(x, y, 1) = static_cast<float>(v.y);
  img.at(x, y, 2) = static_cast<float>(v.z);
}

template <typename PixelFn>
void for_each_pixel(int resolution, PixelFn&& fn) {
  parallel_for(resolution, [&](std::int64_t y0, std::int64_t y1) {
    for (auto y = y0; y < y1; ++y) {
      for (int x = 0; x < resolution; ++x) fn(x, static_cast<int>(y));
    }
  });
}

}  // namespace

bool intersect(const Scene& scene, const Ray& ray, double t_min, double t_max, Hit& hit) {
  bool found = false;
  double t;
  Vec3 n;
  for (const auto& q : scene.quads) {
    if (hit_quad(q, ray, t_min, t_max, t, n)) {
      t_max = t;
      hit.t = t, hit.normal = n, hit.albedo = q.albedo;
      found = true;
    }
  }
  for (const auto& o : scene.objects) {
    if (hit_object(o, ray, t_min, t_max, t, n)) {
      t_max = t;
      hit.t = t, hit.normal = n, hit.albedo = o.albedo;
      found = true;
    }
  }
  if (found) {
    hit.point = ray.origin + ray.dir * hit.t;
    hit.normal = normalize(hit.normal);
    if (dot(hit.normal, ray.dir) > 0.0) hit.normal = -hit.normal;
  }
  return found;
}

double depth_scale(const Scene& scene, const Camera& camera) {
  return length(camera.position) + scene.bounding_radius();
}

GBuffers raycast_gbuffers(const Scene& scene, const Camera& camera) {
  check_inputs(scene, camera);
  const int s = camera.resolution;
  GBuffers g{Image(s, s, 1, 1.0f), Image(s, s, 3), Image(s, s, 3)};
  const double scale = depth_scale(scene, camera);
  for_each_pixel(s, [&](int x, int y) {
    Hit hit;
    if (!intersect(scene, camera.primary_ray(x, y), kTMin, kInf, hit)) return;
    g.depth.at(x, y) = static_cast<float>(std::min(1.0, hit.t / scale));
    store(g.normal, x, y, encode_normal(hit.normal));
    store(g.diffuse, x, y, hit.albedo);
  });
  return g;
}

Image render_direct(const Scene& scene, const Camera& camera) {
  check_inputs(scene, camera);
  const int s = camera.resolution;
  Image out(s, s, 3);
  for_each_pixel(s, [&](int x, int y) {
    Hit hit;
    if (intersect(scene, camera.primary_ray(x, y), kTMin, kInf, hit)) store(out, x, y, direct_at(scene, hit));
  });
  return out;
}

Image path_trace(const Scene& scene, const Camera& camera, const PathTraceOptions& options) {
  check_inputs(scene, camera);
  if (options.spp < 1) throw ConfigError("path_trace: spp must be >= 1, got " + std::to_string(options.spp));
  if (options.max_bounces < 1) {
    throw ConfigError("path_trace: max_bounces must be >= 1, got " + std::to_string(options.max_bounces));
  }
  const int s = camera.resolution;
  Image out(s, s, 3);
  for_each_pixel(s, [&](int x, int y) {
    const auto pixel = static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(s) + static_cast<std::uint64_t>(x);
    const Ray primary = camera.primary_ray(x, y);
    Vec3 sum;
    for (int sample = 0; sample < options.spp; ++sample) {
      SplitMix64 rng(hash_keys(options.seed, pixel, static_cast<std::uint64_t>(sample)));
      Ray ray = primary;
      Vec3 throughput{1.0, 1.0, 1.0};
      Vec3 radiance;
      for (int vertex = 1;; ++vertex) {
        Hit hit;
        if (!intersect(scene, ray, kTMin, kInf, hit)) {
          radiance += throughput * scene.environment;
          break;
        }
        radiance += throughput * direct_at(scene, hit);
        if (vertex >= options.max_bounces) break;
        if (vertex >= options.roulette_start) {
          const double survive = max_component(hit.albedo);
          if (uniform01(rng) >= survive) break;
          throughput *= 1.0 / survive;
        }
        // Lambertian BRDF a/pi against the cosine pdf cos/pi leaves the albedo.
        throughput *= hit.albedo;
        ray = {hit.point + hit.normal * kOffset, sample_cosine(hit.normal, rng)};
      }
      sum += radiance;
    }
    store(out, x, y, sum / static_cast<double>(options.spp));
  });
  return out;
}

}  // namespace deepgi::render
