// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/render/dataset.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "deepgi/common/binary_io.hpp"
#include "deepgi/common/error.hpp"
#include "deepgi/common/random.hpp"
#include "deepgi/render/raster.hpp"

namespace deepgi::render {
namespace {

constexpr double kAngleTolerance = 1e-9;

double object_size(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::sphere:
      return 0.5;
    case ObjectKind::cube:
      return 0.35;
    case ObjectKind::cylinder:
      return 0.4;
    case ObjectKind::mesh:
      return 0.55;
  }
  return 0.5;
}

std::string frame_file(int index, Buffer b) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%06d_%s.dib", index, std::string(buffer_name(b)).c_str());
  return buf;
}

std::string sweep_description(const SweepConfig& sweep, const Camera& camera) {
  std::ostringstream os;
  os.precision(17);
  os << "light " << sweep.light_min_deg << ' ' << sweep.light_max_deg << ' ' << sweep.light_steps << '\n'
     << "object " << sweep.object_min_deg << ' ' << sweep.object_max_deg << ' ' << sweep.object_steps << '\n'
     << "camera " << camera.position.x << ' ' << camera.position.y << ' ' << camera.position.z << ' '
     << camera.fov_degrees << ' ' << camera.resolution << '\n'
     << "spp " << sweep.spp << " bounces " << sweep.max_bounces << '\n';
  for (auto kind : sweep.objects) {
    os << sweep_scene(kind, sweep.light_min_deg, {}, nullptr).describe();
    if (kind == ObjectKind::mesh) os << "mesh " << sweep.mesh_path << '\n';
  }
  return os.str();
}

}  // namespace

std::size_t SweepConfig::frame_count() const {
  if (light_steps < 1 || object_steps < 1) return 0;
  return objects.size() * static_cast<std::size_t>(light_steps) * static_cast<std::size_t>(object_steps);
}

double SweepConfig::light_angle(int step) const {
  if (light_steps <= 1) return light_min_deg;
  return light_min_deg + (light_max_deg - light_min_deg) * step / (light_steps - 1);
}

Vec3 SweepConfig::object_rotation(int step) const {
  const double a = object_min_deg + (object_max_deg - object_min_deg) * step / object_steps;
  return {0.5 * a, a, 0.25 * a};
}

void SweepConfig::validate() const {
  if (frame_count() == 0) {
    throw ConfigError("sweep: requested 0 frames (light_steps " + std::to_string(light_steps) + ", object_steps " +
                      std::to_string(object_steps) + ", " + std::to_string(objects.size()) + " object kinds)");
  }
  if (light_max_deg < light_min_deg) throw ConfigError("sweep: light_max_deg < light_min_deg");
  if (object_max_deg < object_min_deg) throw ConfigError("sweep: object_max_deg < object_min_deg");
  if (resolution < 1) throw ConfigError("sweep: resolution must be >= 1");
  if (spp < 1) throw ConfigError("sweep: spp must be >= 1");
  if (max_bounces < 1) throw ConfigError("sweep: max_bounces must be >= 1");
  if (std::find(objects.begin(), objects.end(), ObjectKind::mesh) != objects.end() && mesh_path.empty()) {
    throw ConfigError("sweep: object kind 'mesh' needs a mesh path");
  }
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  for (auto s : {Split::train, Split::val, Split::test}) {
    if (split_name(s) == name) return s;
  }
  throw ConfigError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

std::string_view buffer_name(Buffer b) {
  switch (b) {
    case Buffer::depth:
      return "depth";
    case Buffer::normal:
      return "normal";
    case Buffer::diffuse:
      return "diffuse";
    case Buffer::direct:
      return "direct";
    case Buffer::gt:
      return "gt";
  }
  return "?";
}

std::vector<FrameRecord> DatasetManifest::frames_in(Split s) const {
  std::vector<FrameRecord> out;
  std::copy_if(frames.begin(), frames.end(), std::back_inserter(out), [s](const auto& f) { return f.split == s; });
  return out;
}

std::size_t DatasetManifest::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(frames.begin(), frames.end(), [s](const auto& f) { return f.split == s; }));
}

const Image& FrameBuffers::get(Buffer b) const {
  switch (b) {
    case Buffer::depth:
      return gbuffers.depth;
    case Buffer::normal:
      return gbuffers.normal;
    case Buffer::diffuse:
      return gbuffers.diffuse;
    case Buffer::direct:
      return direct;
    case Buffer::gt:
      break;
  }
  return gt;
}

Scene sweep_scene(ObjectKind kind, double light_deg, const Vec3& rotation_deg,
                  std::shared_ptr<const TriangleMesh> mesh) {
  SceneObject o;
  o.kind = kind;
  o.position = cornell::kObjectPosition;
  o.rotation_degrees = rotation_deg;
  o.size = object_size(kind);
  o.albedo = cornell::kWhite;
  o.mesh = std::move(mesh);
  return cornell::make_scene(light_deg, o);
}

FrameBuffers render_frame(const Scene& scene, const Camera& camera, const PathTraceOptions& options) {
  return {raycast_gbuffers(scene, camera), render_direct(scene, camera), path_trace(scene, camera, options)};
}

DatasetManifest split_dataset(DatasetManifest manifest, const SplitConfig& config) {
  for (const auto& [lo, hi] : config.holdout) {
    if (lo > hi) {
      throw ConfigError("split: holdout interval [" + std::to_string(lo) + ", " + std::to_string(hi) +
                        "] is reversed");
    }
  }
  if (!(config.val_fraction >= 0.0 && config.val_fraction < 1.0)) {
    throw ConfigError("split: val_fraction must be in [0, 1)");
  }
  std::vector<FrameRecord*> rest;
  for (auto& f : manifest.frames) {
    const bool held = std::any_of(config.holdout.begin(), config.holdout.end(), [&](const auto& iv) {
      return f.light_deg >= iv.first - kAngleTolerance && f.light_deg <= iv.second + kAngleTolerance;
    });
    f.split = held ? Split::test : Split::train;
    if (!held) rest.push_back(&f);
  }
  if (rest.empty()) throw ConfigError("split: holdout intervals cover every frame; nothing left to train on");

  // Validation frames: the ones with the smallest keyed hash of their index.
  auto n_val = static_cast<std::size_t>(std::lround(config.val_fraction * static_cast<double>(rest.size())));
  n_val = std::min(n_val, rest.size() - 1);
  auto key = [&](const FrameRecord* f) { return hash_keys(manifest.seed, static_cast<std::uint64_t>(f->index), 0x7a1); };
  std::sort(rest.begin(), rest.end(), [&](auto* a, auto* b) { return key(a) < key(b); });
  for (std::size_t i = 0; i < n_val; ++i) rest[i]->split = Split::val;
  return manifest;
}

DatasetManifest generate_dataset(const SweepConfig& sweep, const std::filesystem::path& out_dir,
                                 const SplitConfig& split) {
  sweep.validate();
  std::shared_ptr<const TriangleMesh> mesh;
  if (!sweep.mesh_path.empty()) mesh = std::make_shared<TriangleMesh>(TriangleMesh::load_obj(sweep.mesh_path));

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::filesystem::remove(manifest_path(out_dir), ec);

  const Camera camera = cornell::make_camera(sweep.resolution);
  DatasetManifest manifest;
  manifest.seed = sweep.seed;
  manifest.spp = sweep.spp;
  manifest.max_bounces = sweep.max_bounces;
  manifest.resolution = sweep.resolution;
  manifest.scene_hash = fnv1a64(sweep_description(sweep, camera));

  int index = 0;
  for (auto kind : sweep.objects) {
    for (int li = 0; li < sweep.light_steps; ++li) {
      for (int oi = 0; oi < sweep.object_steps; ++oi, ++index) {
        FrameRecord rec;
        rec.index = index;
        rec.kind = kind;
        rec.light_deg = sweep.light_angle(li);
        rec.rotation_deg = sweep.object_rotation(oi);
        const Scene scene = sweep_scene(kind, rec.light_deg, rec.rotation_deg, mesh);
        PathTraceOptions pt;
        pt.spp = sweep.spp;
        pt.max_bounces = sweep.max_bounces;
        pt.seed = hash_keys(sweep.seed, static_cast<std::uint64_t>(index));
        const auto buffers = render_frame(scene, camera, pt);
        for (auto b : kAllBuffers) {
          rec.paths[static_cast<std::size_t>(b)] = frame_file(index, b);
          write_raster(out_dir / rec.path(b), buffers.get(b));
        }
        manifest.frames.push_back(std::move(rec));
      }
    }
  }
  manifest = split_dataset(std::move(manifest), split);
  write_manifest(manifest_path(out_dir), manifest);
  return manifest;
}

std::string format_manifest(const DatasetManifest& m) {
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "deepgi-manifest %d\nseed %" PRIu64 "\nspp %d\nmax_bounces %d\nresolution %d\nscene_hash %016" PRIx64
                "\nframes %zu\n",
                m.version, m.seed, m.spp, m.max_bounces, m.resolution, m.scene_hash, m.frames.size());
  out += buf;
  for (const auto& f : m.frames) {
    std::snprintf(buf, sizeof buf, "%d %s %.17g %.17g %.17g %.17g %s", f.index,
                  std::string(object_kind_name(f.kind)).c_str(), f.light_deg, f.rotation_deg.x, f.rotation_deg.y,
                  f.rotation_deg.z, std::string(split_name(f.split)).c_str());
    out += buf;
    for (const auto& p : f.paths) out += " " + p;
    out += "\n";
  }
  return out;
}

DatasetManifest parse_manifest(std::string_view text, const std::string& context) {
  std::istringstream in{std::string(text)};
  auto fail = [&](const std::string& what) { return FormatError(context + ": " + what); };
  auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw fail(std::string("expected '") + key + "'");
  };
  DatasetManifest m;
  expect("deepgi-manifest");
  if (!(in >> m.version)) throw fail("bad version");
  if (m.version != kManifestVersion) throw fail("unsupported manifest version " + std::to_string(m.version));
  std::string hash;
  std::size_t count = 0;
  expect("seed");
  in >> m.seed;
  expect("spp");
  in >> m.spp;
  expect("max_bounces");
  in >> m.max_bounces;
  expect("resolution");
  in >> m.resolution;
  expect("scene_hash");
  in >> hash;
  expect("frames");
  in >> count;
  if (!in) throw fail("malformed header");
  try {
    m.scene_hash = std::stoull(hash, nullptr, 16);
  } catch (const std::exception&) {
    throw fail("bad scene hash '" + hash + "'");
  }
  for (std::size_t i = 0; i < count; ++i) {
    FrameRecord f;
    std::string kind, split;
    if (!(in >> f.index >> kind >> f.light_deg >> f.rotation_deg.x >> f.rotation_deg.y >> f.rotation_deg.z >> split)) {
      throw fail("truncated or malformed frame record " + std::to_string(i));
    }
    f.kind = parse_object_kind(kind);
    f.split = parse_split(split);
    for (auto& p : f.paths) {
      if (!(in >> p)) throw fail("missing buffer path in frame record " + std::to_string(i));
    }
    m.frames.push_back(std::move(f));
  }
  std::string extra;
  if (in >> extra) throw fail("unexpected content after " + std::to_string(count) + " frames");
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  write_file_atomic(path, format_manifest(manifest));
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset) {
  return std::filesystem::is_directory(dataset) ? dataset / kManifestName : dataset;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  const auto file = manifest_path(path);
  const auto bytes = read_file_bytes(file);
  return parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), file.string());
}

}  // namespace deepgi::render
