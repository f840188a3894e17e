// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/render/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>
#include <string>

#include "deepgi/common/binary_io.hpp"
#include "deepgi/common/error.hpp"

namespace deepgi::render {
namespace {

constexpr std::uint32_t kLeafSize = 4;

Vec3 centroid(const std::array<Vec3, 3>& t) { return (t[0] + t[1] + t[2]) / 3.0; }

bool hit_box(const Vec3& lo, const Vec3& hi, const Ray& ray, const Vec3& inv, double t_max) {
  double t0 = 0.0, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    double n = (lo[a] - ray.origin[a]) * inv[a];
    double f = (hi[a] - ray.origin[a]) * inv[a];
    if (n > f) std::swap(n, f);
    t0 = std::max(t0, n);
    t1 = std::min(t1, f);
    if (t0 > t1) return false;
  }
  return true;
}

// Moller-Trumbore.
bool hit_triangle(const std::array<Vec3, 3>& tri, const Ray& ray, double t_min, double t_max, double& t) {
  const Vec3 e1 = tri[1] - tri[0], e2 = tri[2] - tri[0];
  const Vec3 p = cross(ray.dir, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < 1e-14) return false;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - tri[0];
  const double u = dot(s, p) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 q = cross(s, e1);
  const double v = dot(ray.dir, q) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  t = dot(e2, q) * inv;
  return t > t_min && t < t_max;
}

std::string_view next_token(std::string_view& line) {
  const auto start = line.find_first_not_of(" \t\r");
  if (start == std::string_view::npos) {
    line = {};
    return {};
  }
  line.remove_prefix(start);
  const auto end = line.find_first_of(" \t\r");
  const auto token = line.substr(0, end);
  line.remove_prefix(end == std::string_view::npos ? line.size() : end);
  return token;
}

}  // namespace

TriangleMesh::TriangleMesh(std::vector<std::array<Vec3, 3>> triangles) : triangles_(std::move(triangles)) {
  if (triangles_.empty()) throw ConfigError("mesh: no triangles");
  Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
  Vec3 hi = -lo;
  for (const auto& t : triangles_) {
    for (const auto& v : t) lo = vmin(lo, v), hi = vmax(hi, v);
  }
  const Vec3 centre = (lo + hi) * 0.5;
  double radius = 0.0;
  for (const auto& t : triangles_) {
    for (const auto& v : t) radius = std::max(radius, length(v - centre));
  }
  if (!(radius > 0.0)) throw ConfigError("mesh: degenerate geometry");
  for (auto& t : triangles_) {
    for (auto& v : t) v = (v - centre) / radius;
  }
  nodes_.reserve(2 * triangles_.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(triangles_.size()));
}

std::uint32_t TriangleMesh::build(std::uint32_t first, std::uint32_t count) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Vec3 lo = triangles_[first][0], hi = lo;
  Vec3 clo = centroid(triangles_[first]), chi = clo;
  for (std::uint32_t i = first; i < first + count; ++i) {
    for (const auto& v : triangles_[i]) lo = vmin(lo, v), hi = vmax(hi, v);
    const Vec3 c = centroid(triangles_[i]);
    clo = vmin(clo, c), chi = vmax(chi, c);
  }
  nodes_[index].lo = lo;
  nodes_[index].hi = hi;
  if (count <= kLeafSize) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }
  const Vec3 extent = chi - clo;
  const int axis = extent.x >= extent.y && extent.x >= extent.z ? 0 : (extent.y >= extent.z ? 1 : 2);
  const auto begin = triangles_.begin() + first;
  const auto mid = begin + count / 2;
  std::nth_element(begin, mid, begin + count,
                   [axis](const auto& a, const auto& b) { return centroid(a)[axis] < centroid(b)[axis]; });
  build(first, count / 2);
  const auto right = build(first + count / 2, count - count / 2);
  nodes_[index].first = right;
  return index;
}

bool TriangleMesh::intersect(const Ray& ray, double t_min, double t_max, MeshHit& hit) const {
  const Vec3 inv{1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z};
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  bool found = false;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!hit_box(node.lo, node.hi, ray, inv, t_max)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        double t;
        if (hit_triangle(triangles_[i], ray, t_min, t_max, t)) {
          t_max = t;
          hit.t = t;
          hit.normal = cross(triangles_[i][1] - triangles_[i][0], triangles_[i][2] - triangles_[i][0]);
          found = true;
        }
      }
    } else {
      const auto self = static_cast<std::uint32_t>(&node - nodes_.data());
      stack[top++] = node.first;
      stack[top++] = self + 1;
    }
  }
  return found;
}

TriangleMesh TriangleMesh::parse_obj(std::string_view text, std::string_view context) {
  std::vector<Vec3> vertices;
  std::vector<std::array<Vec3, 3>> triangles;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    return FormatError(std::string(context) + ":" + std::to_string(line_no) + ": " + what);
  };
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    const auto kind = next_token(line);
    if (kind == "v") {
      double xyz[3];
      for (double& c : xyz) {
        const auto tok = next_token(line);
        if (std::from_chars(tok.data(), tok.data() + tok.size(), c).ec != std::errc{} || tok.empty()) {
          throw fail("bad vertex coordinate '" + std::string(tok) + "'");
        }
      }
      vertices.push_back({xyz[0], xyz[1], xyz[2]});
    } else if (kind == "f") {
      std::vector<Vec3> face;
      for (auto tok = next_token(line); !tok.empty(); tok = next_token(line)) {
        const auto idx_text = tok.substr(0, tok.find('/'));
        long idx = 0;
        if (std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx).ec != std::errc{} || idx == 0) {
          throw fail("bad face index '" + std::string(tok) + "'");
        }
        const long resolved = idx > 0 ? idx - 1 : static_cast<long>(vertices.size()) + idx;
        if (resolved < 0 || resolved >= static_cast<long>(vertices.size())) {
          throw fail("face index " + std::to_string(idx) + " out of range");
        }
        face.push_back(vertices[static_cast<std::size_t>(resolved)]);
      }
      if (face.size() < 3) throw fail("face with fewer than 3 vertices");
      for (std::size_t i = 1; i + 1 < face.size(); ++i) triangles.push_back({face[0], face[i], face[i + 1]});
    }
  }
  if (triangles.empty()) throw FormatError(std::string(context) + ": no faces");
  return TriangleMesh(std::move(triangles));
}

TriangleMesh TriangleMesh::load_obj(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_obj(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string());
}

}  // namespace deepgi::render
