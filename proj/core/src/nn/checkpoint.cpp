// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/nn/checkpoint.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <span>

#include "deepgi/common/binary_io.hpp"
#include "deepgi/common/error.hpp"

namespace deepgi::nn {
namespace {

constexpr char kMagic[4] = {'D', 'I', 'C', 'P'};

// A named destination inside a live model.
struct Slot {
  std::string name;
  Shape shape;
  std::span<float> values;
};

std::vector<Slot> adam_slots(const std::string& prefix, std::vector<NamedTensor>& params, AdamState& state) {
  if (state.first_moment.empty() && state.second_moment.empty()) {
    std::vector<Tensor> ts;
    for (auto& p : params) ts.push_back(p.tensor);
    const auto steps = state.step_count;
    state = AdamState::zeros_like(ts);
    state.step_count = steps;
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw ShapeError(prefix + ": optimizer state has " + std::to_string(state.first_moment.size()) +
                     " moments for " + std::to_string(params.size()) + " parameters");
  }
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < params.size(); ++i) {
    slots.push_back({prefix + ".m." + params[i].name, params[i].tensor.shape(), state.first_moment[i]});
    slots.push_back({prefix + ".v." + params[i].name, params[i].tensor.shape(), state.second_moment[i]});
  }
  return slots;
}

template <typename Net>
void model_slots(const std::string& prefix, Net& net, AdamState* adam, std::vector<Slot>& out) {
  auto params = net.named_parameters();
  for (auto& p : params) out.push_back({prefix + "." + p.name, p.tensor.shape(), p.tensor.mutable_data()});
  for (auto& b : net.named_buffers()) {
    out.push_back({prefix + "." + b.name, Shape{static_cast<std::int64_t>(b.values->size())}, *b.values});
  }
  if (adam) {
    for (auto& s : adam_slots("opt." + prefix, params, *adam)) out.push_back(std::move(s));
  }
}

// Prefixes restored for `refs`; stored tensors under other prefixes are ignored.
std::vector<Slot> collect_slots(const ModelRefs& refs, std::vector<std::string>& prefixes) {
  if (!refs.generator) throw ConfigError("checkpoint: a generator is required");
  std::vector<Slot> slots;
  model_slots("gen", *refs.generator, refs.gen_adam, slots);
  prefixes.push_back("gen.");
  if (refs.gen_adam) prefixes.push_back("opt.gen.");
  if (refs.discriminator) {
    model_slots("disc", *refs.discriminator, refs.disc_adam, slots);
    prefixes.push_back("disc.");
    if (refs.disc_adam) prefixes.push_back("opt.disc.");
  } else if (refs.disc_adam) {
    throw ConfigError("checkpoint: discriminator optimizer state given without a discriminator");
  }
  return slots;
}

bool has_prefix(const std::string& name, const std::string& prefix) { return name.rfind(prefix, 0) == 0; }

void write_gen_config(ByteWriter& w, const GeneratorConfig& c) {
  w.u32(static_cast<std::uint32_t>(c.base_layer_K));
  w.u32(static_cast<std::uint32_t>(c.depth));
  w.u32(static_cast<std::uint32_t>(c.in_channels));
  w.u32(static_cast<std::uint32_t>(c.out_channels));
  w.u32(static_cast<std::uint32_t>(c.channel_cap));
}

int read_int(ByteReader& r, const char* what) {
  const auto v = r.u32();
  if (v > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw FormatError(std::string("checkpoint: implausible ") + what + " " + std::to_string(v));
  }
  return static_cast<int>(v);
}

}  // namespace

const StoredTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

Checkpoint capture_checkpoint(const ModelRefs& refs, const TrainingCursor& cursor) {
  std::vector<std::string> prefixes;
  const auto slots = collect_slots(refs, prefixes);
  Checkpoint ck;
  ck.generator = refs.generator->config();
  if (refs.discriminator) ck.discriminator = refs.discriminator->config();
  ck.cursor = cursor;
  ck.gen_adam_steps = refs.gen_adam ? refs.gen_adam->step_count : 0;
  ck.disc_adam_steps = refs.disc_adam ? refs.disc_adam->step_count : 0;
  for (const auto& s : slots) ck.tensors.push_back({s.name, s.shape, {s.values.begin(), s.values.end()}});
  return ck;
}

void restore_checkpoint(const Checkpoint& checkpoint, const ModelRefs& refs) {
  std::vector<std::string> prefixes;
  const auto slots = collect_slots(refs, prefixes);

  // Validate everything first so a failed restore leaves the targets untouched.
  std::vector<const StoredTensor*> sources;
  std::set<std::string> expected;
  for (const auto& s : slots) {
    expected.insert(s.name);
    const auto* t = checkpoint.find(s.name);
    if (!t) throw FormatError("checkpoint: missing tensor '" + s.name + "'");
    if (t->shape != s.shape) {
      throw ShapeError("checkpoint: shape mismatch for tensor '" + s.name + "': stored " + shape_string(t->shape) +
                       ", model expects " + shape_string(s.shape));
    }
    sources.push_back(t);
  }
  for (const auto& t : checkpoint.tensors) {
    const bool restored = std::any_of(prefixes.begin(), prefixes.end(), [&](const auto& p) { return has_prefix(t.name, p); });
    const bool known_prefix = has_prefix(t.name, "gen.") || has_prefix(t.name, "disc.") ||
                              has_prefix(t.name, "opt.gen.") || has_prefix(t.name, "opt.disc.");
    if (!known_prefix || (restored && !expected.contains(t.name))) {
      throw FormatError("checkpoint: unknown tensor '" + t.name + "'");
    }
  }

  for (std::size_t i = 0; i < slots.size(); ++i) std::copy(sources[i]->data.begin(), sources[i]->data.end(), slots[i].values.begin());
  if (refs.gen_adam) refs.gen_adam->step_count = checkpoint.gen_adam_steps;
  if (refs.disc_adam) refs.disc_adam->step_count = checkpoint.disc_adam_steps;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  ByteWriter w;
  w.bytes(std::string_view(kMagic, 4));
  w.u32(kCheckpointVersion);
  write_gen_config(w, ck.generator);
  w.u32(static_cast<std::uint32_t>(ck.discriminator.base_layer_k));
  w.u32(static_cast<std::uint32_t>(ck.discriminator.num_encoders));
  w.u32(static_cast<std::uint32_t>(ck.discriminator.in_channels));
  w.u32(ck.cursor.epoch);
  w.u64(ck.cursor.global_step);
  w.u64(ck.cursor.seed);
  w.u64(ck.gen_adam_steps);
  w.u64(ck.disc_adam_steps);
  w.u32(static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& t : ck.tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) throw FormatError("checkpoint: tensor name too long");
    if (t.shape.size() > std::numeric_limits<std::uint8_t>::max()) throw FormatError("checkpoint: rank too large");
    if (static_cast<std::int64_t>(t.data.size()) != shape_numel(t.shape)) {
      throw ShapeError("checkpoint: tensor '" + t.name + "' data does not match shape " + shape_string(t.shape));
    }
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.bytes(t.name);
    w.u8(static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    w.f32_array(t.data);
  }
  return w.buffer();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& context) {
  ByteReader r(bytes, context);
  if (r.bytes(4) != std::string_view(kMagic, 4)) throw FormatError(context + ": bad magic (not a checkpoint)");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(context + ": unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  ck.generator.base_layer_K = read_int(r, "base_layer_K");
  ck.generator.depth = read_int(r, "depth");
  ck.generator.in_channels = read_int(r, "in_channels");
  ck.generator.out_channels = read_int(r, "out_channels");
  ck.generator.channel_cap = read_int(r, "channel_cap");
  ck.discriminator.base_layer_k = read_int(r, "base_layer_k");
  ck.discriminator.num_encoders = read_int(r, "num_encoders");
  ck.discriminator.in_channels = read_int(r, "in_channels");
  ck.cursor.epoch = r.u32();
  ck.cursor.global_step = r.u64();
  ck.cursor.seed = r.u64();
  ck.gen_adam_steps = r.u64();
  ck.disc_adam_steps = r.u64();
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    StoredTensor t;
    t.name = r.bytes(r.u16());
    const auto rank = r.u8();
    std::uint64_t numel = 1;
    for (int d = 0; d < rank; ++d) {
      const auto dim = r.u32();
      t.shape.push_back(dim);
      numel *= dim;
    }
    if (numel * 4 > r.remaining()) throw FormatError(context + ": truncated in tensor '" + t.name + "'");
    t.data.resize(static_cast<std::size_t>(numel));
    r.f32_array(t.data);
    ck.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw FormatError(context + ": " + std::to_string(r.remaining()) + " trailing bytes");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path), path.string());
}

Generator load_generator(const std::filesystem::path& path) {
  const auto ck = load_checkpoint(path);
  Generator gen(ck.generator, 0);
  restore_checkpoint(ck, {.generator = &gen});
  return gen;
}

}  // namespace deepgi::nn
