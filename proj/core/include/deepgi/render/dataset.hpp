// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "deepgi/common/image.hpp"
#include "deepgi/render/renderer.hpp"

namespace deepgi::render {

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestName = "manifest.txt";

/// Cartesian sweep: object kinds x light angles x object rotations. Light
/// angles include both ends of their range; object rotations split
/// [object_min_deg, object_max_deg) evenly.
struct SweepConfig {
  double light_min_deg = 30.0;
  double light_max_deg = 150.0;
  int light_steps = 10;
  double object_min_deg = 0.0;
  double object_max_deg = 360.0;
  int object_steps = 12;
  std::vector<ObjectKind> objects{ObjectKind::sphere, ObjectKind::cube};
  std::string mesh_path;  // required when objects contains mesh
  int resolution = 64;
  int spp = 64;
  int max_bounces = 8;
  std::uint64_t seed = 0;

  std::size_t frame_count() const;
  double light_angle(int step) const;
  /// Euler angles for rotation step j: the object turns about all three axes.
  Vec3 object_rotation(int step) const;
  void validate() const;
};

enum class Split { train, val, test };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

enum class Buffer { depth, normal, diffuse, direct, gt };
inline constexpr std::array<Buffer, 5> kAllBuffers{Buffer::depth, Buffer::normal, Buffer::diffuse, Buffer::direct,
                                                   Buffer::gt};
std::string_view buffer_name(Buffer b);

struct FrameRecord {
  int index = 0;
  ObjectKind kind = ObjectKind::sphere;
  double light_deg = 0.0;
  Vec3 rotation_deg;
  Split split = Split::train;
  std::array<std::string, 5> paths;  // relative to the dataset directory, in kAllBuffers order

  const std::string& path(Buffer b) const { return paths[static_cast<std::size_t>(b)]; }
};

struct DatasetManifest {
  int version = kManifestVersion;
  std::uint64_t seed = 0;
  int spp = 0;
  int max_bounces = 0;
  int resolution = 0;
  std::uint64_t scene_hash = 0;
  std::vector<FrameRecord> frames;

  std::vector<FrameRecord> frames_in(Split s) const;
  std::size_t count(Split s) const;
};

/// All five buffers of one rendered frame.
struct FrameBuffers {
  GBuffers gbuffers;
  Image direct;
  Image gt;

  const Image& get(Buffer b) const;
};

/// Scene for one sweep coordinate; `mesh` is used for ObjectKind::mesh.
Scene sweep_scene(ObjectKind kind, double light_deg, const Vec3& rotation_deg,
                  std::shared_ptr<const TriangleMesh> mesh = nullptr);

FrameBuffers render_frame(const Scene& scene, const Camera& camera, const PathTraceOptions& options);

/// Intervals of light angle (degrees, inclusive) whose frames go to the test
/// split; `val_fraction` of the remaining frames go to validation.
struct SplitConfig {
  std::vector<std::pair<double, double>> holdout;
  double val_fraction = 0.1;
};

/// Deterministic given the manifest and config.
DatasetManifest split_dataset(DatasetManifest manifest, const SplitConfig& config);

/// Renders every frame into `out_dir`, then writes the manifest (split per
/// `split`) last and atomically. A stale manifest is removed up front so an
/// interrupted run never leaves a manifest behind.
DatasetManifest generate_dataset(const SweepConfig& sweep, const std::filesystem::path& out_dir,
                                 const SplitConfig& split = {});

std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text, const std::string& context = "manifest");
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
/// Accepts a manifest file or the dataset directory containing it.
DatasetManifest read_manifest(const std::filesystem::path& path);
std::filesystem::path manifest_path(const std::filesystem::path& dataset);

}  // namespace deepgi::render
