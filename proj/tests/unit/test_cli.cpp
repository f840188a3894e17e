// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "cli.hpp"
#include "deepgi/render/dataset.hpp"
#include "deepgi/train/trainer.hpp"
#include "support/test_util.hpp"

using namespace deepgi;
using deepgi::testing::TempDir;
using json = nlohmann::json;

namespace {

int run(std::vector<std::string> args, std::string* resolved = nullptr) {
  args.insert(args.begin(), "deepgi");
  args.push_back("--quiet");
  return cli::run(args, resolved);
}

json dry_run(std::vector<std::string> args) {
  args.push_back("--dry-run");
  std::string resolved;
  REQUIRE(run(args, &resolved) == cli::kExitOk);
  return json::parse(resolved);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// 32x32, 2 lights x 2 rotations x 2 objects; light 30 held out for test.
std::string small_dataset(const TempDir& dir) {
  const auto d = (dir.path() / "d").string();
  REQUIRE(run({"gen-data", "--light-steps", "2", "--object-steps", "2", "--resolution", "32", "--spp", "1",
               "--max-bounces", "2", "--holdout", "30:30", "--out", d}) == cli::kExitOk);
  return d;
}

// An untrained generator/discriminator pair written as a checkpoint.
std::string untrained_checkpoint(const TempDir& dir, int k) {
  train::TrainConfig c;
  c.base_layer_K = k;
  c.disc_k = k;
  nn::GeneratorConfig g;
  g.base_layer_K = k;
  g.depth = 5;
  nn::DiscriminatorConfig d;
  d.base_layer_k = k;
  train::Trainer t(c, g, d);
  const auto path = dir.path() / "untrained.dicp";
  nn::save_checkpoint(path, t.checkpoint());
  return path.string();
}

}  // namespace

TEST_CASE("cli: gen-data with 10 light and 12 object steps over two objects writes 240 frames") {
  TempDir dir("cli_gen");
  const auto out = (dir.path() / "d").string();
  CHECK(run({"gen-data", "--light-steps", "10", "--object-steps", "12", "--objects", "sphere,cube", "--spp", "1",
             "--resolution", "4", "--max-bounces", "1", "--seed", "7", "--out", out}) == cli::kExitOk);
  const auto m = render::read_manifest(out);
  CHECK(m.frames.size() == 240);
  CHECK(m.seed == 7);
}

TEST_CASE("cli: train falls back to the documented defaults") {
  const auto j = dry_run({"train", "--data", "d", "--out", "t", "--k", "32"});
  CHECK(j["command"] == "train");
  const auto& c = j["config"];
  CHECK(c["epochs"] == 50);
  CHECK(c["batch_size"] == 4);
  CHECK(c["lr"].get<double>() == doctest::Approx(2e-4));
  CHECK(c["lambda_l1"].get<double>() == 100.0);
  CHECK(c["dropout_p"].get<double>() == 0.5);
  CHECK(c["base_layer_k"] == 32);
  CHECK(c["disc_k"] == 64);
  CHECK(c["seed"] == 0);
  CHECK(j["threads"].get<int>() >= 1);

  const auto explicit_flags =
      dry_run({"train", "--epochs", "50", "--batch", "4", "--lr", "0.0002", "--k", "32", "--data", "d", "--out", "t"});
  CHECK(explicit_flags == j);
}

TEST_CASE("cli: flags override the config file, which overrides defaults") {
  TempDir dir("cli_cfg");
  const auto cfg = dir.path() / "c.json";
  write_text(cfg, R"({"epochs": 7, "lr": 0.001, "seed": 3, "dataset": "from_file"})");
  const auto j = dry_run({"--config", cfg.string(), "train", "--epochs", "9", "--out", "t"});
  const auto& c = j["config"];
  CHECK(c["epochs"] == 9);
  CHECK(c["lr"].get<double>() == doctest::Approx(0.001));
  CHECK(c["seed"] == 3);
  CHECK(c["dataset"] == "from_file");
  CHECK(c["batch_size"] == 4);

  // The global option may also follow the subcommand.
  CHECK(dry_run({"train", "--out", "t", "--config", cfg.string()})["config"]["epochs"] == 7);
}

TEST_CASE("cli: usage errors exit 1") {
  TempDir dir("cli_usage");
  CHECK(run({}) == cli::kExitUsage);
  CHECK(run({"train", "--bogus", "1"}) == cli::kExitUsage);
  CHECK(run({"train", "--epochs", "many", "--data", "d", "--out", "t"}) == cli::kExitUsage);
  CHECK(run({"train", "--epochs", "0", "--data", "d", "--out", "t"}) == cli::kExitUsage);
  CHECK(run({"train", "--out", "t"}) == cli::kExitUsage);  // no dataset
  CHECK(run({"gen-data", "--objects", "teapot", "--out", "x"}) == cli::kExitUsage);
  CHECK(run({"gen-data", "--holdout", "60:40", "--out", "x"}) == cli::kExitUsage);
  CHECK(run({"gen-data", "--light-steps", "0", "--out", "x"}) == cli::kExitUsage);
  CHECK(run({"sweep", "--experiment", "depth", "--data", "d", "--out", "t"}) == cli::kExitUsage);
  CHECK(run({"eval", "--split", "holdout", "--ckpt", "c", "--data", "d"}) == cli::kExitUsage);

  const auto cfg = dir.path() / "c.json";
  write_text(cfg, R"({"epochs": 7, "learning_rate": 0.1})");
  CHECK(run({"--config", cfg.string(), "train", "--data", "d", "--out", "t"}) == cli::kExitUsage);
  write_text(cfg, R"({"epochs": "seven"})");
  CHECK(run({"--config", cfg.string(), "train", "--data", "d", "--out", "t"}) == cli::kExitUsage);
  write_text(cfg, "{not json");
  CHECK(run({"--config", cfg.string(), "train", "--data", "d", "--out", "t"}) == cli::kExitUsage);
  CHECK(run({"--config", (dir.path() / "missing.json").string(), "train", "--data", "d", "--out", "t"}) ==
        cli::kExitUsage);
}

TEST_CASE("cli: --help exits 0") { CHECK(run({"--help"}) == cli::kExitOk); }

TEST_CASE("cli: runtime failures exit 2") {
  TempDir dir("cli_rt");
  CHECK(run({"train", "--data", (dir.path() / "nowhere").string(), "--out", (dir.path() / "t").string()}) ==
        cli::kExitRuntime);
  CHECK(run({"eval", "--ckpt", (dir.path() / "none.dicp").string(), "--data", (dir.path() / "nowhere").string()}) ==
        cli::kExitRuntime);
}

TEST_CASE("cli: eval of an untrained checkpoint reports finite metrics") {
  TempDir dir("cli_eval");
  const auto data = small_dataset(dir);
  const auto ckpt = untrained_checkpoint(dir, 4);
  const auto report = dir.path() / "report.json";
  CHECK(run({"eval", "--split", "test", "--ckpt", ckpt, "--data", data, "--output", report.string()}) == cli::kExitOk);
  std::ifstream in(report);
  const auto j = json::parse(in);
  CHECK(j["frames"] == 4);
  CHECK(std::isfinite(j["mse"].get<double>()));
  CHECK(std::isfinite(j["ssim"].get<double>()));
  CHECK(j["ssim"].get<double>() <= 1.0);
}

TEST_CASE("cli: train, then infer a dataset frame") {
  TempDir dir("cli_train");
  const auto data = small_dataset(dir);
  const auto out = (dir.path() / "run").string();
  CHECK(run({"train", "--data", data, "--out", out, "--epochs", "1", "--k", "4", "--disc-k", "4", "--seed", "2"}) ==
        cli::kExitOk);
  CHECK(std::filesystem::exists(std::filesystem::path(out) / "final.dicp"));
  const auto pred = dir.path() / "pred.dib";
  const auto preview = dir.path() / "pred.ppm";
  CHECK(run({"infer", "--ckpt", out + "/final.dicp", "--data", data, "--frame", "0", "--out", pred.string(),
             "--preview", preview.string()}) == cli::kExitOk);
  CHECK(std::filesystem::exists(pred));
  CHECK(std::filesystem::exists(preview));
  CHECK(run({"infer", "--ckpt", out + "/final.dicp", "--data", data, "--frame", "999", "--out", pred.string()}) ==
        cli::kExitUsage);
}

TEST_CASE("cli: selftest passes") { CHECK(run({"selftest"}) == cli::kExitOk); }
