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

#include "neurop/training.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <yaml-cpp/yaml.h>

#include "neurop/weights.hpp"

namespace neurop {

// --- operator initialization ---

std::vector<float> init_strengths(std::size_t levels) {
  if (levels < 2) throw std::invalid_argument("an init corpus needs at least 2 strength levels");
  std::vector<float> v(levels);
  for (std::size_t m = 0; m < levels; ++m) {
    v[m] = static_cast<float>(-1.0 + 2.0 * static_cast<double>(m) / static_cast<double>(levels - 1));
  }
  if (levels % 2 == 1) {
    v[levels / 2] = 0.0f;
  } else {
    v.insert(v.begin() + static_cast<std::ptrdiff_t>(levels / 2), 0.0f);
  }
  return v;
}

InitCorpus build_init_corpus(std::span<const Image> sources, StandardOpKind kind, std::size_t levels) {
  InitCorpus corpus;
  corpus.kind = kind;
  corpus.strengths = init_strengths(levels);
  for (const Image& src : sources) {
    require_rgb(src, "build_init_corpus");
    std::vector<Image> row;
    for (float v : corpus.strengths) row.push_back(standard_op_apply(kind, src, v));
    corpus.levels.push_back(std::move(row));
  }
  return corpus;
}

InitLosses init_losses(const NeurOp& op, const InitCorpus& corpus) {
  if (corpus.levels.empty()) throw std::invalid_argument("init corpus is empty");
  const std::size_t m_count = corpus.level_count();
  if (m_count < 2) throw std::invalid_argument("pairwise init loss needs at least 2 levels");
  double unary = 0, pairwise = 0;
  for (const auto& row : corpus.levels) {
    for (std::size_t m = 0; m < m_count; ++m) {
      unary += loss_reconstruction(neurop_forward_image(row[m], 0.0f, op), row[m]);
      for (std::size_t n = 0; n < m_count; ++n) {
        if (n == m) continue;
        const float dv = corpus.strengths[n] - corpus.strengths[m];
        pairwise += loss_reconstruction(neurop_forward_image(row[m], dv, op), row[n]);
      }
    }
  }
  const double sources = static_cast<double>(corpus.source_count());
  return {unary / (sources * m_count), pairwise / (sources * m_count * (m_count - 1))};
}

namespace {

void add_into(std::vector<Tensor*> dst, const std::vector<const Tensor*>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] += *src[i];
}

template <typename T>
double l1_step(const NeurOpParams<T>& op, const BasicImage<T>& in, T v, const BasicImage<T>& target,
               NeurOpParams<T>& grads) {
  const BasicImage<T> out = neurop_forward_image(in, v, op);
  const double loss = loss_reconstruction(out, target);
  const auto g = neurop_backward_image(in, v, op, loss_reconstruction_grad(out, target), false);
  add_into(grads.tensors(), g.params.tensors());
  return loss;
}

}  // namespace

void fit_output_layer(NeurOp& op, const InitCorpus& corpus, std::size_t samples, double ridge, std::mt19937_64& rng) {
  if (corpus.levels.empty() || corpus.level_count() < 2) throw std::invalid_argument("init corpus is empty");
  if (samples == 0) return;
  const std::size_t f = op.features(), d = f + 1;
  std::uniform_int_distribution<std::size_t> pick_source(0, corpus.source_count() - 1);
  std::uniform_int_distribution<std::size_t> pick_level(0, corpus.level_count() - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0, corpus.level_count() - 2);

  // Only one hidden layer changes with v, so fold once per level difference.
  std::vector<std::pair<float, FoldedNeurOp<float>>> folds;
  auto folded = [&](float v) -> const FoldedNeurOp<float>& {
    for (const auto& [key, fold] : folds) {
      if (key == v) return fold;
    }
    folds.emplace_back(v, fold_neurop(op, v));
    return folds.back().second;
  };

  Eigen::MatrixXd hth = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::MatrixXd hty = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), 3);
  Eigen::VectorXd h(static_cast<Eigen::Index>(d));
  for (std::size_t s = 0; s < samples; ++s) {
    const auto& row = corpus.levels[pick_source(rng)];
    const std::size_t m = pick_level(rng);
    std::size_t n = m;
    if (s % 2 == 1) {
      n = pick_other(rng);
      if (n >= m) ++n;
    }
    const Image& in = row[m];
    const std::size_t px = in.dim(1) * in.dim(2);
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, px - 1)(rng);
    const FoldedNeurOp<float>& fo = folded(corpus.strengths[n] - corpus.strengths[m]);
    for (std::size_t j = 0; j < f; ++j) {
      const double a = static_cast<double>(fo.a[3 * j]) * in[i] + static_cast<double>(fo.a[3 * j + 1]) * in[px + i] +
                       static_cast<double>(fo.a[3 * j + 2]) * in[2 * px + i] + fo.c[j];
      h[static_cast<Eigen::Index>(j)] = a > 0 ? a : 0.0;
    }
    h[static_cast<Eigen::Index>(f)] = 1.0;
    const Image& target = row[n];
    const Eigen::RowVector3d y(target[i], target[px + i], target[2 * px + i]);
    hth.selfadjointView<Eigen::Lower>().rankUpdate(h);
    hty += h * y;
  }
  hth.diagonal().array() += ridge * static_cast<double>(samples);
  const Eigen::MatrixXd w = hth.selfadjointView<Eigen::Lower>().ldlt().solve(hty);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t j = 0; j < f; ++j) {
      op.decoder_out.weight[c * f + j] = static_cast<float>(w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)));
    }
    op.decoder_out.bias[c] = static_cast<float>(w(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(c)));
  }
}

NeurOp train_init(NeurOp op, const InitCorpus& corpus, const InitConfig& config) {
  if (corpus.levels.empty()) throw std::invalid_argument("init corpus is empty");
  const std::size_t m_count = corpus.level_count();
  if (m_count < 2) throw std::invalid_argument("pairwise init loss needs at least 2 levels");
  if (config.iterations == 0) throw std::invalid_argument("iterations must be at least 1");

  std::mt19937_64 rng(config.seed);
  fit_output_layer(op, corpus, config.warm_start_samples, config.warm_start_ridge, rng);
  std::uniform_int_distribution<std::size_t> pick_source(0, corpus.source_count() - 1);
  std::uniform_int_distribution<std::size_t> pick_level(0, m_count - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0, m_count - 2);

  const auto params = op.tensors();
  std::vector<const Tensor*> cparams(params.begin(), params.end());
  AdamState adam = adam_init(cparams, config.adam);
  NeurOp grads(op.features());
  const auto gptrs = grads.tensors();
  const std::vector<const Tensor*> cgrads(gptrs.begin(), gptrs.end());

  double window = 0;
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    for (Tensor* g : gptrs) g->fill(0.0f);
    const auto& row = corpus.levels[pick_source(rng)];
    const std::size_t u = pick_level(rng);
    const std::size_t m = pick_level(rng);
    std::size_t n = pick_other(rng);
    if (n >= m) ++n;
    const float dv = corpus.strengths[n] - corpus.strengths[m];
    const double loss = l1_step(op, row[u], 0.0f, row[u], grads) + l1_step(op, row[m], dv, row[n], grads);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("init training for " + std::string(standard_op_name(corpus.kind)) +
                               " diverged at iteration " + std::to_string(it) + " (loss " + std::to_string(loss) + ")");
    }
    adam_step(params, cgrads, adam);
    window += loss;
    if (config.log_every && it % config.log_every == 0) {
      if (config.on_log) config.on_log(it, window / static_cast<double>(config.log_every));
      window = 0;
    }
  }
  return op;
}

// --- joint training ---

std::string_view operator_init_name(OperatorInit mode) {
  switch (mode) {
    case OperatorInit::kRandom: return "random";
    case OperatorInit::kStandardFix: return "standard-fix";
    case OperatorInit::kStandardFinetune: return "standard-finetune";
  }
  return "?";
}

OperatorInit parse_operator_init(std::string_view name) {
  for (auto mode : {OperatorInit::kRandom, OperatorInit::kStandardFix, OperatorInit::kStandardFinetune}) {
    if (operator_init_name(mode) == name) return mode;
  }
  throw std::invalid_argument("unknown operator init \"" + std::string(name) +
                              "\" (expected random, standard-fix or standard-finetune)");
}

template <typename T>
PipelineTrace<T> pipeline_forward(const BasicImage<T>& input, const BasicRetouchModel<T>& model) {
  require_rgb(input, "pipeline_forward");
  PipelineTrace<T> trace;
  trace.images.push_back(input);
  for (std::size_t k = 0; k < model.operator_count(); ++k) {
    const BasicImage<T>& source = model.config.predictor_sees_original ? input : trace.images[k];
    trace.predictors.push_back(
        predictor_forward(downsample_long_edge(source, model.config.downsample_target), model.predictors, k));
    const T v = trace.predictors.back().strength;
    trace.strengths.push_back(v);
    trace.images.push_back(neurop_forward_image(trace.images[k], v, model.neurops[k]));
  }
  return trace;
}

template <typename T>
BasicRetouchModel<T> pipeline_backward(const PipelineTrace<T>& trace, const BasicRetouchModel<T>& model,
                                       const BasicImage<T>& grad_output) {
  const std::size_t k_count = model.operator_count();
  if (trace.images.size() != k_count + 1) throw std::invalid_argument("trace does not match the model");
  BasicRetouchModel<T> grads(model.config);
  BasicImage<T> g = grad_output;
  for (std::size_t k = k_count; k-- > 0;) {
    const BasicImage<T>& in = trace.images[k];
    auto op_grads = neurop_backward_image(in, trace.strengths[k], model.neurops[k], g, k > 0);
    {
      auto dst = grads.neurops[k].tensors();
      auto src = op_grads.params.tensors();
      for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] += *src[i];
    }
    BasicImage<T> d_small = predictor_backward(trace.predictors[k], model.predictors, op_grads.strength, grads.predictors);
    if (k == 0) break;
    g = std::move(op_grads.input);
    if (!model.config.predictor_sees_original) {
      if (d_small.shape() == in.shape()) {
        g += d_small;
      } else {
        g += resize_bilinear_backward(d_small, in.dim(1), in.dim(2));
      }
    }
  }
  return grads;
}

template <typename T>
LossBreakdown<T> pipeline_loss(const BasicRetouchModel<T>& model, const BasicImage<T>& input,
                               const BasicImage<T>& target, const BasicTensor<T>* mask, const LossWeights& weights,
                               T hrp_weight, BasicRetouchModel<T>* grads) {
  const PipelineTrace<T> trace = pipeline_forward(input, model);
  LossBreakdown<T> loss = loss_total(trace.images.back(), target, weights, PixelWeights<T>{mask, hrp_weight}, grads != nullptr);
  if (grads) {
    BasicRetouchModel<T> g = pipeline_backward(trace, model, loss.grad);
    if (grads->neurops.empty()) {
      *grads = std::move(g);
    } else {
      auto dst = grads->tensors();
      auto src = g.tensors();
      for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] += *src[i];
    }
  }
  return loss;
}

#define NEUROP_INSTANTIATE_PIPELINE(T)                                                                         \
  template PipelineTrace<T> pipeline_forward(const BasicImage<T>&, const BasicRetouchModel<T>&);               \
  template BasicRetouchModel<T> pipeline_backward(const PipelineTrace<T>&, const BasicRetouchModel<T>&,        \
                                                  const BasicImage<T>&);                                       \
  template LossBreakdown<T> pipeline_loss(const BasicRetouchModel<T>&, const BasicImage<T>&, const BasicImage<T>&, \
                                          const BasicTensor<T>*, const LossWeights&, T, BasicRetouchModel<T>*);

NEUROP_INSTANTIATE_PIPELINE(float)
NEUROP_INSTANTIATE_PIPELINE(double)

// --- augmentation ---

Tensor rotate90(const Tensor& image, int quarter_turns) {
  if (image.rank() != 3) throw std::invalid_argument("rotate90: expected [C,H,W]");
  const int turns = ((quarter_turns % 4) + 4) % 4;
  if (turns == 0) return image;
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor out(turns == 2 ? Shape{c, h, w} : Shape{c, w, h});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const float v = image.at(ch, y, x);
        switch (turns) {
          case 1: out.at(ch, w - 1 - x, y) = v; break;
          case 2: out.at(ch, h - 1 - y, w - 1 - x) = v; break;
          default: out.at(ch, x, h - 1 - y) = v; break;
        }
      }
    }
  }
  return out;
}

Tensor crop(const Tensor& image, std::size_t y, std::size_t x, std::size_t height, std::size_t width) {
  if (image.rank() != 3) throw std::invalid_argument("crop: expected [C,H,W]");
  if (y + height > image.dim(1) || x + width > image.dim(2) || height == 0 || width == 0) {
    throw std::invalid_argument("crop window " + std::to_string(height) + "x" + std::to_string(width) + " at (" +
                                std::to_string(y) + "," + std::to_string(x) + ") exceeds image " +
                                shape_to_string(image.shape()));
  }
  const std::size_t c = image.dim(0);
  Tensor out({c, height, width});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t r = 0; r < height; ++r) {
      const float* src = &image.at(ch, y + r, x);
      std::copy(src, src + width, &out.at(ch, r, 0));
    }
  }
  return out;
}

namespace {

ImagePair transform_pair(const ImagePair& pair, std::size_t ch, std::size_t cw, bool rotate, std::mt19937_64& rng) {
  validate_pair(pair);
  const std::size_t h = pair.input.dim(1), w = pair.input.dim(2);
  if (ch > h || cw > w || ch == 0 || cw == 0) {
    throw std::invalid_argument("crop " + std::to_string(ch) + "x" + std::to_string(cw) + " larger than image " +
                                std::to_string(h) + "x" + std::to_string(w));
  }
  const std::size_t y = std::uniform_int_distribution<std::size_t>(0, h - ch)(rng);
  const std::size_t x = std::uniform_int_distribution<std::size_t>(0, w - cw)(rng);
  const int turns = rotate ? static_cast<int>(std::uniform_int_distribution<int>(0, 3)(rng)) : 0;
  auto apply = [&](const Tensor& t) { return rotate90(crop(t, y, x, ch, cw), turns); };
  ImagePair out{pair.id, apply(pair.input), apply(pair.target), std::nullopt};
  if (pair.mask) {
    Tensor m = *pair.mask;
    m.reshape({1, h, w});
    Tensor r = apply(m);
    r.reshape({r.dim(1), r.dim(2)});
    out.mask = std::move(r);
  }
  return out;
}

}  // namespace

ImagePair augment(const ImagePair& pair, std::size_t crop_size, std::mt19937_64& rng) {
  return transform_pair(pair, crop_size, crop_size, true, rng);
}

TrainResult train_joint(RetouchModel model, const Dataset& dataset, const TrainConfig& config, const AdamState* resume) {
  if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
  if (config.iterations == 0) throw std::invalid_argument("iterations must be at least 1");
  if (config.batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  if (config.hrp_weight < 0) throw std::invalid_argument("HRP weight must be >= 0");
  for (const ImagePair& p : dataset.pairs) validate_pair(p);

  std::mt19937_64 rng(config.seed);
  if (config.operator_init == OperatorInit::kRandom) {
    for (auto& op : model.neurops) op = make_random_neurop(model.config.features, rng);
  }
  const bool freeze_operators = config.operator_init == OperatorInit::kStandardFix;

  TrainResult result;
  const auto params = model.tensors();
  const std::vector<const Tensor*> cparams(params.begin(), params.end());
  if (resume) {
    result.adam = *resume;
    if (result.adam.m.size() != params.size()) throw std::invalid_argument("resumed Adam state does not match the model");
  } else {
    result.adam = adam_init(cparams, config.adam);
  }
  result.adam.config = config.adam;
  const std::size_t operator_tensors = freeze_operators ? model.neurops.size() * 6 : 0;

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  std::deque<double> trailing;
  double trailing_sum = 0;
  std::size_t last_checkpoint = 0;

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    RetouchModel grads(model.config);
    double loss = 0;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const ImagePair& src = dataset.pairs[order[cursor++]];
      ImagePair sample;
      if (config.augment) {
        const std::size_t ch = std::min(config.crop_size, src.input.dim(1));
        const std::size_t cw = std::min(config.crop_size, src.input.dim(2));
        sample = transform_pair(src, ch, cw, true, rng);
      }
      const ImagePair& pair = config.augment ? sample : src;
      const auto lb = pipeline_loss(model, pair.input, pair.target, pair.mask ? &*pair.mask : nullptr, config.losses,
                                    config.hrp_weight, &grads);
      loss += lb.total;
    }
    loss /= static_cast<double>(config.batch_size);
    if (!std::isfinite(loss)) {
      std::string where = last_checkpoint ? "; last good checkpoint " + config.checkpoint_path.string() +
                                                " from iteration " + std::to_string(last_checkpoint)
                                          : "; no checkpoint written";
      throw std::runtime_error("joint training diverged at iteration " + std::to_string(it) + " (loss " +
                               std::to_string(loss) + ")" + where);
    }
    auto gptrs = grads.tensors();
    const float scale = 1.0f / static_cast<float>(config.batch_size);
    for (std::size_t i = 0; i < gptrs.size(); ++i) {
      if (i < operator_tensors) {
        gptrs[i]->fill(0.0f);
      } else if (config.batch_size > 1) {
        for (float& g : gptrs[i]->values()) g *= scale;
      }
    }
    const std::vector<const Tensor*> cgrads(gptrs.begin(), gptrs.end());
    adam_step(params, cgrads, result.adam);
    result.losses.push_back(loss);

    trailing.push_back(loss);
    trailing_sum += loss;
    if (trailing.size() > 100) {
      trailing_sum -= trailing.front();
      trailing.pop_front();
    }
    if (config.log_every && it % config.log_every == 0 && config.on_log) {
      config.on_log({it, loss, trailing_sum / static_cast<double>(trailing.size())});
    }
    if (config.checkpoint_every && it % config.checkpoint_every == 0 && !config.checkpoint_path.empty()) {
      save_weights(config.checkpoint_path, model, {"train_joint iteration " + std::to_string(it), config.seed},
                   &result.adam);
      last_checkpoint = it;
    }
  }
  result.model = std::move(model);
  return result;
}

// --- presets and config files ---

Preset make_preset(std::string_view name) {
  Preset p;
  if (name == "desk") {
    p.name = "desk";
    p.init.iterations = 2000;
    p.init.levels = 9;
    p.init.source_count = 50;
    p.init.source_size = 64;
    p.joint.iterations = 20000;
    p.synthetic_pairs = 50;
    p.synthetic_size = 128;
  } else if (name == "paper") {
    p.name = "paper";
    p.init.iterations = 100000;
    p.init.levels = 40;
    p.init.source_count = 500;
    p.init.source_size = 256;
    p.joint.iterations = 600000;
    p.synthetic_pairs = 500;
    p.synthetic_size = 256;
  } else {
    throw std::invalid_argument("unknown preset \"" + std::string(name) + "\" (expected paper or desk)");
  }
  return p;
}

namespace {

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!node.IsMap()) throw std::invalid_argument("config: " + where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument("config: unknown key " + where + (where.empty() ? "" : ".") + key);
    }
  }
}

template <typename V>
void read(const YAML::Node& node, const char* key, V& out) {
  if (node[key]) out = node[key].as<V>();
}

}  // namespace

Preset parse_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (root.IsNull()) return make_preset("desk");
  check_keys(root, "", {"preset", "seed", "model", "init", "train", "losses", "synthetic"});
  Preset p = make_preset(root["preset"] ? root["preset"].as<std::string>() : "desk");
  try {
    if (root["seed"]) {
      p.init.seed = p.joint.seed = root["seed"].as<std::uint64_t>();
    }
    if (const auto m = root["model"]) {
      check_keys(m, "model", {"operators", "features", "first_channels", "second_channels", "share_backbone", "pooling",
                              "downsample_target", "predictor_sees_original"});
      read(m, "operators", p.model.operators);
      read(m, "features", p.model.features);
      read(m, "first_channels", p.model.predictor.first_channels);
      read(m, "second_channels", p.model.predictor.second_channels);
      read(m, "share_backbone", p.model.predictor.share_backbone);
      read(m, "downsample_target", p.model.downsample_target);
      read(m, "predictor_sees_original", p.model.predictor_sees_original);
      if (m["pooling"]) {
        PoolingSet pool{false, false, false};
        for (const auto& item : m["pooling"]) {
          const auto s = item.as<std::string>();
          if (s == "max") pool.max = true;
          else if (s == "avg") pool.avg = true;
          else if (s == "std") pool.std = true;
          else throw std::invalid_argument("config: unknown pooling \"" + s + "\" (expected max, avg, std)");
        }
        p.model.predictor.pooling = pool;
      }
    }
    if (const auto n = root["init"]) {
      check_keys(n, "init", {"iterations", "levels", "sources", "source_size", "lr"});
      read(n, "iterations", p.init.iterations);
      read(n, "levels", p.init.levels);
      read(n, "sources", p.init.source_count);
      read(n, "source_size", p.init.source_size);
      read(n, "lr", p.init.adam.lr);
    }
    if (const auto t = root["train"]) {
      check_keys(t, "train", {"iterations", "lr", "batch_size", "crop_size", "augment", "hrp_weight", "operator_init",
                              "checkpoint_every", "checkpoint_path", "log_every"});
      read(t, "iterations", p.joint.iterations);
      read(t, "lr", p.joint.adam.lr);
      read(t, "batch_size", p.joint.batch_size);
      read(t, "crop_size", p.joint.crop_size);
      read(t, "augment", p.joint.augment);
      read(t, "hrp_weight", p.joint.hrp_weight);
      read(t, "checkpoint_every", p.joint.checkpoint_every);
      read(t, "log_every", p.joint.log_every);
      if (t["operator_init"]) p.joint.operator_init = parse_operator_init(t["operator_init"].as<std::string>());
      if (t["checkpoint_path"]) p.joint.checkpoint_path = t["checkpoint_path"].as<std::string>();
    }
    if (const auto l = root["losses"]) {
      check_keys(l, "losses", {"reconstruction", "tv", "color", "lambda_tv", "lambda_color"});
      read(l, "reconstruction", p.joint.losses.use_reconstruction);
      read(l, "tv", p.joint.losses.use_tv);
      read(l, "color", p.joint.losses.use_color);
      read(l, "lambda_tv", p.joint.losses.lambda_tv);
      read(l, "lambda_color", p.joint.losses.lambda_color);
    }
    if (const auto s = root["synthetic"]) {
      check_keys(s, "synthetic", {"pairs", "size"});
      read(s, "pairs", p.synthetic_pairs);
      read(s, "size", p.synthetic_size);
    }
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (p.init.iterations == 0 || p.joint.iterations == 0) throw std::invalid_argument("config: iterations must be >= 1");
  if (p.joint.losses.lambda_tv < 0 || p.joint.losses.lambda_color < 0) {
    throw std::invalid_argument("config: loss weights must be >= 0");
  }
  return p;
}

Preset load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace neurop
