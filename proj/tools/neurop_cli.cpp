// Copyright 2026 The neurop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "neurop/data.hpp"
#include "neurop/kernels.hpp"
#include "neurop/metrics.hpp"
#include "neurop/pipeline.hpp"
#include "neurop/service.hpp"
#include "neurop/synthetic.hpp"
#include "neurop/training.hpp"
#include "neurop/weights.hpp"

namespace fs = std::filesystem;
using namespace neurop;

namespace {

constexpr std::size_t kPaperParameterCount = 28108;

struct Globals {
  std::string config_path;
  std::string weights_path;
  std::string preset = "desk";
  std::optional<std::uint64_t> seed;
  bool emit_intermediates = false;
};

Preset resolve_preset(const Globals& g) {
  Preset p = g.config_path.empty() ? make_preset(g.preset) : load_config(g.config_path);
  if (g.seed) p.init.seed = p.joint.seed = *g.seed;
  return p;
}

RetouchModel resolve_model(const Globals& g, const Preset& p) {
  if (!g.weights_path.empty()) return load_weights(g.weights_path).model;
  std::cerr << "note: no --weights given, using a random model (seed " << p.joint.seed << ")\n";
  return make_random_model(p.model, p.joint.seed);
}

std::string join(const std::vector<float>& v) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.9g", i ? "," : "", static_cast<double>(v[i]));
    out += buf;
  }
  return out;
}

std::vector<float> parse_strengths(const std::string& text) {
  std::vector<float> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    float v = 0;
    try {
      v = std::stof(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw std::invalid_argument("--strengths: cannot parse \"" + item + "\"");
    out.push_back(v);
  }
  return out;
}

std::vector<Image> init_sources(const Preset& p, const std::string& data_dir) {
  std::vector<Image> sources;
  if (!data_dir.empty()) {
    const Dataset ds = load_pair_dataset(data_dir);
    for (const auto& pair : ds.pairs) {
      if (sources.size() == p.init.source_count) break;
      sources.push_back(downsample_long_edge(pair.input, p.init.source_size));
    }
    if (sources.empty()) throw std::runtime_error("no images found in " + data_dir);
  } else {
    std::mt19937_64 rng(p.init.seed);
    for (std::size_t i = 0; i < p.init.source_count; ++i) {
      sources.push_back(synthesize_scene(p.init.source_size, p.init.source_size, rng));
    }
  }
  return sources;
}

int cmd_summary(const Globals& g) {
  const Preset p = resolve_preset(g);
  const RetouchModel model = g.weights_path.empty() ? RetouchModel(p.model) : load_weights(g.weights_path).model;
  const ParameterSummary s = summarize_parameters(model);
  std::printf("operators (K)          %zu\n", model.operator_count());
  std::printf("feature dim (F)        %zu\n", model.config.features);
  std::printf("params per operator    %zu\n", s.per_operator);
  std::printf("operator params        %zu\n", s.operators);
  std::printf("predictor backbone     %zu%s\n", s.backbone, model.predictors.shared() ? " (shared)" : "");
  std::printf("predictor heads        %zu\n", s.heads);
  std::printf("total trainable        %zu\n", s.total);
  std::printf("reference total        %zu\n", kPaperParameterCount);
  std::printf("kernels                %s\n", std::string(kernels::isa_name(kernels::active_isa())).c_str());
  return 0;
}

int cmd_init_ops(const Globals& g, const std::string& data_dir, const std::string& out) {
  const Preset p = resolve_preset(g);
  RetouchModel model = make_random_model(p.model, p.init.seed);
  const std::vector<Image> sources = init_sources(p, data_dir);
  const std::size_t count = std::min(model.operator_count(), kStandardOpOrder.size());
  for (std::size_t k = 0; k < count; ++k) {
    const StandardOpKind kind = kStandardOpOrder[k];
    const InitCorpus corpus = build_init_corpus(sources, kind, p.init.levels);
    InitConfig cfg = p.init;
    cfg.seed = p.init.seed + k;
    model.neurops[k] = train_init(model.neurops[k], corpus, cfg);
    const InitLosses l = init_losses(model.neurops[k], corpus);
    std::printf("%-15s unary %.5f  pairwise %.5f\n", std::string(standard_op_name(kind)).c_str(), l.unary, l.pairwise);
  }
  for (std::size_t k = count; k < model.operator_count(); ++k) {
    std::printf("operator %zu has no standard counterpart; left at random init\n", k + 1);
  }
  save_weights(out, model, {p.name + " init-ops", p.init.seed});
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_train(const Globals& g, const std::string& data_dir, const std::string& out, const std::string& resume) {
  Preset p = resolve_preset(g);
  Dataset ds = data_dir.empty() ? make_synthetic_dataset(p.synthetic_pairs, p.synthetic_size, p.joint.seed)
                                : load_pair_dataset(data_dir);
  if (ds.empty()) throw std::runtime_error("training dataset is empty");
  RetouchModel model;
  std::optional<AdamState> adam;
  if (!resume.empty()) {
    LoadedWeights w = load_weights(resume);
    model = std::move(w.model);
    adam = std::move(w.adam);
  } else {
    model = resolve_model(g, p);
  }
  TrainConfig cfg = p.joint;
  if (cfg.checkpoint_every && cfg.checkpoint_path.empty()) cfg.checkpoint_path = out + ".ckpt";
  if (!cfg.log_every) cfg.log_every = std::max<std::size_t>(1, cfg.iterations / 20);
  cfg.on_log = [&](const TrainProgress& pr) {
    std::printf("iter %zu/%zu  loss %.5f  trailing %.5f\n", pr.iteration, cfg.iterations, pr.loss, pr.trailing_loss);
    std::fflush(stdout);
  };
  TrainResult r = train_joint(std::move(model), ds, cfg, adam ? &*adam : nullptr);
  save_weights(out, r.model, {p.name + " train " + std::string(operator_init_name(cfg.operator_init)), cfg.seed},
               &r.adam);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_infer(const Globals& g, const std::string& input, std::string out, const std::string& strengths_text) {
  const Preset p = resolve_preset(g);
  const RetouchModel model = resolve_model(g, p);
  const Image image = read_image(input);
  if (out.empty()) out = (fs::path(input).parent_path() / (fs::path(input).stem().string() + "_retouched.png")).string();

  Image output;
  std::vector<float> strengths;
  if (!strengths_text.empty()) {
    strengths = parse_strengths(strengths_text);
    output = retouch_with_strengths(image, model, strengths);
  } else {
    RetouchResult r = retouch(image, model);
    strengths = r.strengths;
    output = std::move(r.output);
  }
  std::printf("strengths %s\n", join(strengths).c_str());
  write_image(out, output);
  std::printf("wrote %s\n", out.c_str());
  if (g.emit_intermediates) {
    Image current = image;
    const fs::path base = fs::path(out);
    for (std::size_t k = 0; k < strengths.size(); ++k) {
      current = retouch_step(current, model, k, strengths[k]);
      const fs::path step = base.parent_path() / (base.stem().string() + "_step" + std::to_string(k + 1) +
                                                  base.extension().string());
      write_image(step, clamp01(current));
      std::printf("wrote %s\n", step.string().c_str());
    }
  }
  return 0;
}

int cmd_eval(const Globals& g, const std::string& dataset) {
  const Preset p = resolve_preset(g);
  const RetouchModel model = resolve_model(g, p);
  const Dataset ds = load_pair_dataset(dataset, Split::kTest);
  if (ds.empty()) throw std::runtime_error("no pairs found in " + dataset);
  std::printf("%-24s %9s %8s %8s\n", "id", "PSNR", "SSIM", "dE76");
  ImageMetrics mean;
  for (const ImagePair& pair : ds.pairs) {
    const ImageMetrics m = compare_images(retouch(pair.input, model).output, pair.target);
    std::printf("%-24s %9.4f %8.5f %8.4f\n", pair.id.c_str(), m.psnr, m.ssim, m.delta_e);
    mean.psnr += m.psnr, mean.ssim += m.ssim, mean.delta_e += m.delta_e;
  }
  const double n = static_cast<double>(ds.size());
  std::printf("%-24s %9.4f %8.5f %8.4f\n", "mean", mean.psnr / n, mean.ssim / n, mean.delta_e / n);
  return 0;
}

int cmd_serve(const Globals& g, const std::string& host, int port) {
  const Preset p = resolve_preset(g);
  auto model = std::make_shared<const RetouchModel>(resolve_model(g, p));
  ServiceConfig cfg;
  cfg.host = host;
  cfg.port = port > 0 ? port : service_port_from_env();
  RetouchService service(model, cfg);
  const int bound = service.bind();
  std::printf("listening on http://%s:%d\n", host.c_str(), bound);
  std::fflush(stdout);
  service.run();
  return 0;
}

int cmd_make_synthetic(const Globals& g, const std::string& dir, std::size_t count, std::size_t size) {
  const Preset p = resolve_preset(g);
  save_pair_dataset(dir, make_synthetic_dataset(count, size, p.joint.seed));
  std::printf("wrote %zu pairs to %s\n", count, dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neurop: automatic photo retouching with neural color operators"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "YAML config (preset, model, init, train, losses)")->check(CLI::ExistingFile);
  app.add_option("--weights", g.weights_path, "weight file");
  app.add_option("--preset", g.preset, "paper | desk")->check(CLI::IsMember({"paper", "desk"}));
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  app.add_flag("--emit-intermediates", g.emit_intermediates, "also write I_1..I_K (infer)");

  auto* summary = app.add_subcommand("summary", "print the parameter budget");

  std::string data_dir, out = "neurop.weights", resume;
  auto* init_ops = app.add_subcommand("init-ops", "fit the operators to black clipping, exposure and vibrance");
  init_ops->add_option("--data", data_dir, "dataset whose inputs serve as sources (default: synthetic scenes)");
  init_ops->add_option("--out", out, "output weight file");

  auto* train = app.add_subcommand("train", "joint end-to-end training");
  train->add_option("--data", data_dir, "paired dataset (default: synthetic pairs)");
  train->add_option("--out", out, "output weight file");
  train->add_option("--resume", resume, "checkpoint with Adam state to continue from");

  std::string input, infer_out, strengths;
  auto* infer = app.add_subcommand("infer", "retouch one image");
  infer->add_option("image", input, "input PNG or TIFF")->required()->check(CLI::ExistingFile);
  infer->add_option("--out", infer_out, "output path (.png or .tif)");
  infer->add_option("--strengths", strengths, "comma-separated strengths; skips the predictors");

  std::string dataset;
  auto* eval = app.add_subcommand("eval", "PSNR / SSIM / dE table on a paired dataset");
  eval->add_option("dataset", dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);

  std::string host = "127.0.0.1";
  int port = 0;
  auto* serve = app.add_subcommand("serve", "start the HTTP service");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port (default NEUROP_PORT or 8080)");

  std::string synth_dir;
  std::size_t synth_count = 50, synth_size = 128;
  auto* synth = app.add_subcommand("make-synthetic", "write a synthetic paired dataset");
  synth->add_option("dir", synth_dir, "output directory")->required();
  synth->add_option("--count", synth_count, "number of pairs");
  synth->add_option("--size", synth_size, "image edge length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*summary) return cmd_summary(g);
    if (*init_ops) return cmd_init_ops(g, data_dir, out);
    if (*train) return cmd_train(g, data_dir, out, resume);
    if (*infer) return cmd_infer(g, input, infer_out, strengths);
    if (*eval) return cmd_eval(g, dataset);
    if (*serve) return cmd_serve(g, host, port);
    if (*synth) return cmd_make_synthetic(g, synth_dir, synth_count, synth_size);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
