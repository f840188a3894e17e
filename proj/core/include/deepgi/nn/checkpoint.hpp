// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "deepgi/nn/discriminator.hpp"
#include "deepgi/nn/generator.hpp"
#include "deepgi/tensor/adam.hpp"

namespace deepgi::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Where training stands; restoring it makes resumed runs replay the same
/// shuffles and dropout masks as an uninterrupted run.
struct TrainingCursor {
  std::uint32_t epoch = 0;  // completed epochs
  std::uint64_t global_step = 0;
  std::uint64_t seed = 0;

  bool operator==(const TrainingCursor&) const = default;
};

struct StoredTensor {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TrainingCursor cursor;
  std::uint64_t gen_adam_steps = 0;
  std::uint64_t disc_adam_steps = 0;
  std::vector<StoredTensor> tensors;

  const StoredTensor* find(const std::string& name) const;
};

/// Live objects a checkpoint is captured from or restored into. Null members
/// are skipped; a generator is always required.
struct ModelRefs {
  Generator* generator = nullptr;
  Discriminator* discriminator = nullptr;
  AdamState* gen_adam = nullptr;
  AdamState* disc_adam = nullptr;
};

Checkpoint capture_checkpoint(const ModelRefs& refs, const TrainingCursor& cursor);

/// Copies stored tensors into `refs`. Every tensor the targets expect must be
/// present with a matching shape, and every stored tensor under a restored
/// prefix must be known; all checks run before anything is written.
void restore_checkpoint(const Checkpoint& checkpoint, const ModelRefs& refs);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& context = "checkpoint");

/// Atomic: writes a sibling temp file and renames it over `path`.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Builds a generator from the stored config and restores its weights.
Generator load_generator(const std::filesystem::path& path);

}  // namespace deepgi::nn
