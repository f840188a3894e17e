// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <memory>

#include "deepgi/common/binary_io.hpp"
#include "deepgi/common/error.hpp"
#include "deepgi/common/parallel.hpp"
#include "deepgi/metrics/metrics.hpp"
#include "deepgi/render/dataset.hpp"
#include "deepgi/selftest.hpp"
#include "deepgi/train/experiment.hpp"
#include "deepgi/train/trainer.hpp"

namespace deepgi::cli {
namespace {

using json = nlohmann::ordered_json;

// Bad flags, config keys or values: exit 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

// The double that prints like the float does (2e-4f -> 0.0002), so logged
// defaults read the same as values typed on the command line.
double shortest(float f) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, f);
  return std::strtod(std::string(buf, r.ptr).c_str(), nullptr);
}

std::string kebab(std::string s) {
  for (auto& c : s) {
    if (c == '_') c = '-';
  }
  return s;
}

// Config fields of one subcommand. Each field is a flag named after it
// (underscores become dashes) and a key of the same name in the JSON config
// file; resolution order is built-in default, then file, then flag.
class Fields {
 public:
  explicit Fields(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& key, T& target, const std::string& help, const std::string& alias = "") {
    auto staged = std::make_shared<T>(target);
    std::string names = "--" + kebab(key);
    if (!alias.empty()) names += "," + alias;
    CLI::Option* opt = app_->add_option(names, *staged, help)->capture_default_str();
    fields_.push_back(Field{
        key,
        [&target, key](const json& v) {
          try {
            target = v.get<T>();
          } catch (const json::exception& e) {
            throw UsageError("config key '" + key + "': " + e.what());
          }
        },
        [&target, staged, opt] {
          if (opt->count() > 0) target = *staged;
        },
        [&target](json& out, const std::string& k) { out[k] = target; }});
    return opt;
  }

  /// Applies a JSON object; keys that name no field are an error.
  void apply_file(const json& config) const {
    for (const auto& [key, value] : config.items()) {
      const auto it = std::find_if(fields_.begin(), fields_.end(), [&](const Field& f) { return f.key == key; });
      if (it == fields_.end()) throw UsageError("config file: unknown key '" + key + "' for '" + app_->get_name() + "'");
      it->from_json(value);
    }
  }

  void apply_flags() const {
    for (const auto& f : fields_) f.from_flag();
  }

  json resolved() const {
    json out;
    for (const auto& f : fields_) f.to_json(out, f.key);
    return out;
  }

  CLI::App* app() const { return app_; }

 private:
  struct Field {
    std::string key;
    std::function<void(const json&)> from_json;
    std::function<void()> from_flag;
    std::function<void(json&, const std::string&)> to_json;
  };
  CLI::App* app_;
  std::vector<Field> fields_;
};

// Plain-value mirrors of the library configs (paths and enums as strings so
// flags and JSON share one representation).
struct TrainFields {
  train::TrainConfig defaults;
  int epochs = defaults.epochs;
  int batch_size = defaults.batch_size;
  double lr = shortest(defaults.lr);
  double dropout_p = shortest(defaults.dropout_p);
  double lambda_l1 = shortest(defaults.lambda_l1);
  int base_layer_k = defaults.base_layer_K;
  int depth = defaults.depth;
  int disc_k = defaults.disc_k;
  std::uint64_t seed = defaults.seed;
  int checkpoint_interval = defaults.checkpoint_interval;
  double real_label = shortest(defaults.real_label);
  double fake_label = shortest(defaults.fake_label);
  int max_train_frames = defaults.max_train_frames;
  std::string dataset;
  std::string out_dir;
  std::string resume_from;

  void add(Fields& f) {
    f.add("epochs", epochs, "training epochs in total");
    f.add("batch_size", batch_size, "frames per minibatch", "--batch");
    f.add("lr", lr, "Adam learning rate");
    f.add("dropout_p", dropout_p, "decoder dropout probability");
    f.add("lambda_l1", lambda_l1, "weight of the L1 term");
    f.add("base_layer_k", base_layer_k, "generator base layer K", "--k");
    f.add("depth", depth, "generator depth (0: log2 of the resolution)");
    f.add("disc_k", disc_k, "discriminator base layer k");
    f.add("seed", seed, "seed for init, shuffling and dropout");
    f.add("checkpoint_interval", checkpoint_interval, "write ckpt_eNNNN.dicp every this many epochs (0: off)");
    f.add("real_label", real_label, "BCE target for real pairs");
    f.add("fake_label", fake_label, "BCE target for generated pairs");
    f.add("max_train_frames", max_train_frames, "train on a nested subset of this size (0: all)");
    f.add("dataset", dataset, "dataset directory or manifest", "--data");
    f.add("out_dir", out_dir, "output directory", "--out");
    f.add("resume_from", resume_from, "checkpoint to resume from", "--resume");
  }

  train::TrainConfig resolve() const {
    train::TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.lr = static_cast<float>(lr);
    c.dropout_p = static_cast<float>(dropout_p);
    c.lambda_l1 = static_cast<float>(lambda_l1);
    c.base_layer_K = base_layer_k;
    c.depth = depth;
    c.disc_k = disc_k;
    c.seed = seed;
    c.checkpoint_interval = checkpoint_interval;
    c.real_label = static_cast<float>(real_label);
    c.fake_label = static_cast<float>(fake_label);
    c.max_train_frames = max_train_frames;
    c.dataset = dataset;
    c.out_dir = out_dir;
    c.resume_from = resume_from;
    if (c.dataset.empty()) throw UsageError("--dataset is required");
    if (c.out_dir.empty()) throw UsageError("--out-dir is required");
    c.validate();
    return c;
  }
};

struct GenDataFields {
  render::SweepConfig defaults;
  double light_min_deg = defaults.light_min_deg;
  double light_max_deg = defaults.light_max_deg;
  int light_steps = defaults.light_steps;
  double object_min_deg = defaults.object_min_deg;
  double object_max_deg = defaults.object_max_deg;
  int object_steps = defaults.object_steps;
  std::vector<std::string> objects{"sphere", "cube"};
  std::string mesh_path;
  int resolution = defaults.resolution;
  int spp = defaults.spp;
  int max_bounces = defaults.max_bounces;
  std::uint64_t seed = defaults.seed;
  std::vector<std::string> holdout;
  double val_fraction = render::SplitConfig{}.val_fraction;
  std::string out;

  void add(Fields& f) {
    f.add("light_min_deg", light_min_deg, "first light angle (degrees)");
    f.add("light_max_deg", light_max_deg, "last light angle (degrees, included)");
    f.add("light_steps", light_steps, "light angles in the sweep");
    f.add("object_min_deg", object_min_deg, "first object rotation step (degrees)");
    f.add("object_max_deg", object_max_deg, "end of the rotation range (excluded)");
    f.add("object_steps", object_steps, "object rotations in the sweep");
    f.add("objects", objects, "object kinds: sphere, cube, cylinder, mesh")->delimiter(',');
    f.add("mesh_path", mesh_path, "OBJ file for the mesh object");
    f.add("resolution", resolution, "image size in pixels (square)");
    f.add("spp", spp, "path-traced samples per pixel");
    f.add("max_bounces", max_bounces, "path vertices per sample");
    f.add("seed", seed, "render and split seed");
    f.add("holdout", holdout, "test light-angle intervals LO:HI (degrees, inclusive)")->delimiter(',');
    f.add("val_fraction", val_fraction, "fraction of non-test frames used for validation");
    f.add("out", out, "output directory");
  }

  std::pair<render::SweepConfig, render::SplitConfig> resolve() const {
    render::SweepConfig s;
    s.light_min_deg = light_min_deg;
    s.light_max_deg = light_max_deg;
    s.light_steps = light_steps;
    s.object_min_deg = object_min_deg;
    s.object_max_deg = object_max_deg;
    s.object_steps = object_steps;
    s.objects.clear();
    for (const auto& o : objects) s.objects.push_back(render::parse_object_kind(o));
    s.mesh_path = mesh_path;
    s.resolution = resolution;
    s.spp = spp;
    s.max_bounces = max_bounces;
    s.seed = seed;
    s.validate();
    render::SplitConfig split;
    split.val_fraction = val_fraction;
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw UsageError("--val-fraction must be in [0, 1)");
    for (const auto& h : holdout) {
      const auto colon = h.find(':');
      double lo = 0.0, hi = 0.0;
      try {
        if (colon == std::string::npos) throw std::invalid_argument(h);
        lo = std::stod(h.substr(0, colon));
        hi = std::stod(h.substr(colon + 1));
      } catch (const std::exception&) {
        throw UsageError("--holdout: expected LO:HI, got '" + h + "'");
      }
      if (lo > hi) throw UsageError("--holdout: interval '" + h + "' is reversed");
      split.holdout.emplace_back(lo, hi);
    }
    if (out.empty()) throw UsageError("--out is required");
    return {s, split};
  }
};

struct InferFields {
  std::string checkpoint;
  std::string dataset;
  int frame = -1;
  std::string depth, normal, diffuse, direct, ground_truth;
  std::string output;
  std::string preview;

  void add(Fields& f) {
    f.add("checkpoint", checkpoint, "generator checkpoint (.dicp)", "--ckpt");
    f.add("dataset", dataset, "take the buffers of --frame from this dataset", "--data");
    f.add("frame", frame, "frame index within --dataset");
    f.add("depth", depth, "depth buffer (.dib)");
    f.add("normal", normal, "normal buffer (.dib)");
    f.add("diffuse", diffuse, "diffuse albedo buffer (.dib)");
    f.add("direct", direct, "direct illumination buffer (.dib)");
    f.add("ground_truth", ground_truth, "optional reference radiance for the preview", "--gt");
    f.add("output", output, "predicted radiance (.dib)", "--out");
    f.add("preview", preview, "optional PPM strip: direct | predicted | reference");
  }

  train::InferenceRequest resolve() const {
    train::InferenceRequest r;
    if (checkpoint.empty()) throw UsageError("--checkpoint is required");
    if (output.empty()) throw UsageError("--output is required");
    r.checkpoint = checkpoint;
    r.output = output;
    r.preview = preview;
    if (!dataset.empty()) {
      if (frame < 0) throw UsageError("--dataset needs --frame");
      const auto manifest = render::read_manifest(dataset);
      const auto it = std::find_if(manifest.frames.begin(), manifest.frames.end(),
                                   [&](const render::FrameRecord& f) { return f.index == frame; });
      if (it == manifest.frames.end()) throw UsageError("--frame " + std::to_string(frame) + " is not in the dataset");
      const std::filesystem::path dir = std::filesystem::is_directory(dataset)
                                            ? std::filesystem::path(dataset)
                                            : std::filesystem::path(dataset).parent_path();
      r.depth = dir / it->path(render::Buffer::depth);
      r.normal = dir / it->path(render::Buffer::normal);
      r.diffuse = dir / it->path(render::Buffer::diffuse);
      r.direct = dir / it->path(render::Buffer::direct);
      r.ground_truth = dir / it->path(render::Buffer::gt);
    } else {
      if (depth.empty() || normal.empty() || diffuse.empty() || direct.empty()) {
        throw UsageError("give --depth, --normal, --diffuse and --direct, or --dataset with --frame");
      }
      r.depth = depth;
      r.normal = normal;
      r.diffuse = diffuse;
      r.direct = direct;
      r.ground_truth = ground_truth;
    }
    if (!ground_truth.empty()) r.ground_truth = ground_truth;
    return r;
  }
};

struct EvalRequest {
  std::string checkpoint;
  std::string dataset;
  std::string split_name;
  render::Split split = render::Split::test;
  std::string output;
};

struct EvalFields {
  std::string checkpoint;
  std::string dataset;
  std::string split = "test";
  std::string output;

  void add(Fields& f) {
    f.add("checkpoint", checkpoint, "generator checkpoint (.dicp)", "--ckpt");
    f.add("dataset", dataset, "dataset directory or manifest", "--data");
    f.add("split", split, "train, val or test");
    f.add("output", output, "also write the report (JSON) here", "--out");
  }

  EvalRequest resolve() const {
    if (checkpoint.empty()) throw UsageError("--checkpoint is required");
    if (dataset.empty()) throw UsageError("--dataset is required");
    return {checkpoint, dataset, split, render::parse_split(split), output};
  }
};

struct SweepFields {
  TrainFields train;
  std::string experiment = "epochs";
  train::ExperimentConfig defaults;
  std::vector<int> sizes = defaults.sizes;
  std::vector<int> base_layers = defaults.base_layers;
  int timing_frames = defaults.timing_frames;
  int timing_repeats = defaults.timing_repeats;
  int timing_spp = defaults.timing_spp;

  void add(Fields& f) {
    f.add("experiment", experiment, "epochs, dataset_size or base_layer");
    train.add(f);
    f.add("sizes", sizes, "dataset_size: nested training-set sizes")->delimiter(',');
    f.add("base_layers", base_layers, "base_layer: generator widths K")->delimiter(',');
    f.add("timing_frames", timing_frames, "base_layer: frames timed");
    f.add("timing_repeats", timing_repeats, "base_layer: timed forwards per frame");
    f.add("timing_spp", timing_spp, "base_layer: path-tracer spp for the comparison");
  }

  std::pair<train::ExperimentKind, train::ExperimentConfig> resolve() const {
    train::ExperimentConfig c;
    c.train = train.resolve();
    c.sizes = sizes;
    c.base_layers = base_layers;
    c.timing_frames = timing_frames;
    c.timing_repeats = timing_repeats;
    c.timing_spp = timing_spp;
    const auto kind = train::parse_experiment(experiment);
    c.validate(kind);
    return {kind, c};
  }
};

struct SelftestFields {
  int instances = 3;
  int sky_spp = selftest::RendererSuiteOptions{}.sky_spp;

  void add(Fields& f) {
    f.add("instances", instances, "random instances per differentiable op");
    f.add("sky_spp", sky_spp, "samples per pixel for the uniform-sky case");
  }

  void check() const {
    if (instances < 1 || sky_spp < 1) throw UsageError("--instances and --sky-spp must be >= 1");
  }
};

json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw UsageError("config file " + path + " must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
}

void setup_logging(int verbosity, bool quiet) {
  auto logger = std::make_shared<spdlog::logger>("deepgi", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  logger->set_level(quiet ? spdlog::level::warn : (verbosity > 0 ? spdlog::level::debug : spdlog::level::info));
  spdlog::set_default_logger(logger);
}

std::string log_resolved(const std::string& command, const json& fields) {
  json all;
  all["command"] = command;
  all["threads"] = worker_count();
  all["config"] = fields;
  spdlog::info("resolved config: {}", all.dump());
  return all.dump();
}

int cmd_gen_data(const render::SweepConfig& sweep, const render::SplitConfig& split, const std::string& out) {
  spdlog::info("rendering {} frames at {}x{}, {} spp", sweep.frame_count(), sweep.resolution, sweep.resolution,
               sweep.spp);
  const auto manifest = render::generate_dataset(sweep, out, split);
  spdlog::info("wrote {} frames (train {}, val {}, test {}) to {}", manifest.frames.size(),
               manifest.count(render::Split::train), manifest.count(render::Split::val),
               manifest.count(render::Split::test), out);
  return kExitOk;
}

void log_epoch(const train::EpochStats& s) {
  spdlog::info("epoch {:4d}  g_loss {:.5f}  d_loss {:.5f}  l1 {:.5f}  val_mse {:.6f}  val_ssim {:.4f}  {:.1f}s", s.epoch,
               s.g_loss, s.d_loss, s.l1, s.val_mse, s.val_ssim, s.seconds);
}

int cmd_train(const train::TrainConfig& config) {
  const auto result = train::train(config, [](const train::EpochStats& s, train::Trainer&) { log_epoch(s); });
  spdlog::info("{} steps; final checkpoint {}", result.steps, result.final_checkpoint.string());
  return kExitOk;
}

int cmd_infer(const train::InferenceRequest& request) {
  const auto image = train::infer(request);
  spdlog::info("wrote {}x{} prediction to {}", image.width, image.height, request.output.string());
  return kExitOk;
}

int cmd_eval(const EvalRequest& f) {
  const auto generator = nn::load_generator(f.checkpoint);
  const auto manifest = render::read_manifest(f.dataset);
  const std::filesystem::path dir = std::filesystem::is_directory(f.dataset)
                                        ? std::filesystem::path(f.dataset)
                                        : std::filesystem::path(f.dataset).parent_path();
  const auto samples = train::load_split(dir, manifest, f.split);
  if (samples.empty()) throw ConfigError("eval: split '" + f.split_name + "' has no frames");
  const auto m = train::validate(generator, samples);
  json report;
  report["split"] = f.split_name;
  report["frames"] = samples.size();
  report["mse"] = m.mse;
  report["ssim"] = m.ssim;
  report["psnr"] = metrics::psnr_from_mse(m.mse);  // of the mean MSE
  std::printf("%s\n", report.dump().c_str());
  if (!f.output.empty()) write_file_atomic(f.output, report.dump(2) + "\n");
  return kExitOk;
}

int cmd_sweep(train::ExperimentKind kind, const train::ExperimentConfig& c) {
  const auto r = train::run_experiment(kind, c);
  for (const auto& t : r.timing) {
    spdlog::info("K={:3d}  params {:9d}  infer {:8.3f} ms  path trace {:8.1f} ms  ratio {:.1f}", t.base_layer,
                 t.parameters, 1e3 * t.infer_seconds, 1e3 * t.pathtrace_seconds, t.speedup());
  }
  spdlog::info("curves written to {}", (c.train.out_dir / "curves.csv").string());
  return kExitOk;
}

int cmd_selftest(const SelftestFields& f) {
  const auto grad = selftest::gradient_suite(f.instances);
  std::printf("%s", grad.format().c_str());
  selftest::RendererSuiteOptions opt;
  opt.sky_spp = f.sky_spp;
  const auto render = selftest::renderer_suite(opt);
  std::printf("%s", render.format().c_str());
  std::fflush(stdout);
  const bool ok = grad.passed() && render.passed();
  if (!ok) spdlog::error("selftest failed");
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args, std::string* resolved_config) {
  CLI::App app{"Deep illumination: path-traced Cornell-box data, cGAN training and inference"};
  app.name(args.empty() ? "deepgi" : std::filesystem::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  int verbosity = 0;
  bool quiet = false;
  bool dry_run = false;
  app.add_option("--config", config_path, "JSON file with default values for the subcommand's flags");
  app.add_flag("-v,--verbose", verbosity, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");
  app.add_flag("--dry-run", dry_run, "resolve and log the configuration, then exit");

  GenDataFields gen_data;
  TrainFields train_fields;
  InferFields infer_fields;
  EvalFields eval_fields;
  SweepFields sweep_fields;
  SelftestFields selftest_fields;
  std::vector<std::unique_ptr<Fields>> all;
  auto sub = [&](const char* name, const char* help) {
    all.push_back(std::make_unique<Fields>(app.add_subcommand(name, help)));
    return all.back().get();
  };
  Fields* f_gen = sub("gen-data", "render a dataset sweep and split it");
  gen_data.add(*f_gen);
  Fields* f_train = sub("train", "train generator and discriminator");
  train_fields.add(*f_train);
  Fields* f_infer = sub("infer", "predict global illumination for one frame");
  infer_fields.add(*f_infer);
  Fields* f_eval = sub("eval", "mean MSE and SSIM of a checkpoint on a dataset split");
  eval_fields.add(*f_eval);
  Fields* f_sweep = sub("sweep", "run an experiment: epochs, dataset_size or base_layer");
  sweep_fields.add(*f_sweep);
  Fields* f_self = sub("selftest", "gradient checks and renderer closed-form cases");
  selftest_fields.add(*f_self);

  std::vector<const char*> argv{"deepgi"};
  for (std::size_t i = 1; i < args.size(); ++i) argv.push_back(args[i].c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::printf("%s", app.help().c_str());
      return kExitOk;
    }
    const auto subs = app.get_subcommands();
    std::fprintf(stderr, "error: %s\n\n%s", e.what(), (subs.empty() ? app.help() : subs.front()->help()).c_str());
    return kExitUsage;
  }
  setup_logging(verbosity, quiet);

  Fields* active = nullptr;
  for (const auto& f : all) {
    if (f->app()->parsed()) active = f.get();
  }
  const std::string command = active->app()->get_name();
  auto usage = [&](const std::string& msg) {
    std::fprintf(stderr, "error: %s\n\n%s", msg.c_str(), active->app()->help().c_str());
    return kExitUsage;
  };

  // Resolve: defaults, then the config file, then flags. Anything wrong up
  // to this point is a usage error.
  try {
    if (!config_path.empty()) active->apply_file(read_config_file(config_path));
    active->apply_flags();
  } catch (const UsageError& e) {
    return usage(e.what());
  }
  const auto resolved = log_resolved(command, active->resolved());
  if (resolved_config) *resolved_config = resolved;

  // Turn the plain values into library configs and check them; a
  // ConfigError here is still the caller's mistake. The job itself maps any
  // failure to a runtime error.
  std::function<int()> job;
  try {
    if (active == f_gen) {
      const auto resolved = gen_data.resolve();
      job = [&gen_data, resolved] { return cmd_gen_data(resolved.first, resolved.second, gen_data.out); };
    } else if (active == f_train) {
      job = [config = train_fields.resolve()] { return cmd_train(config); };
    } else if (active == f_infer) {
      job = [request = infer_fields.resolve()] { return cmd_infer(request); };
    } else if (active == f_eval) {
      job = [request = eval_fields.resolve()] { return cmd_eval(request); };
    } else if (active == f_sweep) {
      job = [request = sweep_fields.resolve()] { return cmd_sweep(request.first, request.second); };
    } else {
      selftest_fields.check();
      job = [&selftest_fields] { return cmd_selftest(selftest_fields); };
    }
  } catch (const UsageError& e) {
    return usage(e.what());
  } catch (const ConfigError& e) {
    return usage(e.what());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }

  if (dry_run) return kExitOk;
  try {
    return job();
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
}

}  // namespace deepgi::cli
