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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neurop/color_ops.hpp"
#include "neurop/data.hpp"
#include "neurop/losses.hpp"
#include "neurop/optim.hpp"
#include "neurop/pipeline.hpp"

namespace neurop {

// --- operator initialization ---

/// M retouched versions of each source image under one standard operator.
struct InitCorpus {
  StandardOpKind kind = StandardOpKind::kExposure;
  std::vector<float> strengths;            // strictly increasing, contains 0
  std::vector<std::vector<Image>> levels;  // levels[source][m]

  std::size_t level_count() const { return strengths.size(); }
  std::size_t source_count() const { return levels.size(); }
};

/// v_m = -1 + 2m/(M-1), m = 0..M-1. For even M, 0 is inserted in order, so
/// the list has M + 1 entries. Throws std::invalid_argument for M < 2.
std::vector<float> init_strengths(std::size_t levels);

InitCorpus build_init_corpus(std::span<const Image> sources, StandardOpKind kind, std::size_t levels);

struct InitLosses {
  double unary = 0;     // mean over sources and m of |R(I_m, 0) - I_m|
  double pairwise = 0;  // mean over sources and m != n of |R(I_m, v_n - v_m) - I_n|
};

/// Full (non-sampled) evaluation of both initialization terms; each residual
/// is the per-element mean absolute difference.
InitLosses init_losses(const NeurOp& op, const InitCorpus& corpus);

struct InitConfig {
  AdamConfig adam{};
  std::size_t iterations = 2000;
  std::size_t levels = 9;          // M
  std::size_t source_count = 50;
  std::size_t source_size = 64;    // long edge of each source image
  std::uint64_t seed = 1;
  /// Pixel samples for the least-squares output-layer fit run before Adam;
  /// 0 skips it.
  std::size_t warm_start_samples = 200000;
  double warm_start_ridge = 1e-4;
  std::size_t log_every = 0;       // 0: silent
  std::function<void(std::size_t iteration, double loss)> on_log;
};

/// Least-squares fit of decoder_out (weights and bias) with the other layers
/// held fixed: half the samples are unary (m, m, v = 0) and half pairwise
/// (m, n, v_n - v_m), each at a random pixel of a random source. `ridge`
/// is scaled by the sample count.
void fit_output_layer(NeurOp& op, const InitCorpus& corpus, std::size_t samples, double ridge, std::mt19937_64& rng);

/// Optional fit_output_layer warm start, then Adam on the two initialization
/// terms. Each step draws one source, one level for the unary term and one
/// ordered pair m != n for the pairwise term. Throws std::runtime_error if
/// the loss becomes non-finite.
NeurOp train_init(NeurOp op, const InitCorpus& corpus, const InitConfig& config);

// --- joint training ---

enum class OperatorInit : std::uint8_t {
  kRandom,            // operators re-drawn at random, then trained
  kStandardFix,       // operators kept as given and frozen
  kStandardFinetune,  // operators kept as given and trained
};

std::string_view operator_init_name(OperatorInit mode);
/// "random", "standard-fix", "standard-finetune".
OperatorInit parse_operator_init(std::string_view name);

struct TrainProgress {
  std::size_t iteration = 0;  // 1-based
  double loss = 0;
  double trailing_loss = 0;   // mean of the last 100 iterations
};

struct TrainConfig {
  AdamConfig adam{};
  std::size_t iterations = 20000;
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;
  std::size_t crop_size = 256;  // full image when the image is smaller
  bool augment = true;
  float hrp_weight = 5.0f;      // reconstruction weight inside the mask
  LossWeights losses{};
  OperatorInit operator_init = OperatorInit::kStandardFinetune;
  std::size_t checkpoint_every = 0;  // 0: no checkpoints
  std::filesystem::path checkpoint_path;
  std::size_t log_every = 0;
  std::function<void(const TrainProgress&)> on_log;
};

/// Everything a forward pass through the K steps keeps for the reverse pass.
template <typename T>
struct PipelineTrace {
  std::vector<BasicImage<T>> images;  // I_0..I_K, unclamped
  std::vector<T> strengths;
  std::vector<PredictorTrace<T>> predictors;
};

/// Same computation as retouch(), except that the output stays unclamped so
/// the loss has a gradient everywhere.
template <typename T>
PipelineTrace<T> pipeline_forward(const BasicImage<T>& input, const BasicRetouchModel<T>& model);

/// Reverse pass given dLoss/dI_K. Gradients reach every operator and every
/// predictor, including through the bilinear downsampler feeding each
/// predictor. The result has the model's layout.
template <typename T>
BasicRetouchModel<T> pipeline_backward(const PipelineTrace<T>& trace, const BasicRetouchModel<T>& model,
                                       const BasicImage<T>& grad_output);

/// Loss of one pair through the whole pipeline, and its parameter gradient
/// when `grads` is non-null.
template <typename T>
LossBreakdown<T> pipeline_loss(const BasicRetouchModel<T>& model, const BasicImage<T>& input,
                               const BasicImage<T>& target, const BasicTensor<T>* mask, const LossWeights& weights,
                               T hrp_weight, BasicRetouchModel<T>* grads);

/// Random crop of `crop` x `crop` and a rotation by a random multiple of 90
/// degrees, applied identically to input, target and mask. Throws
/// std::invalid_argument if the crop does not fit.
ImagePair augment(const ImagePair& pair, std::size_t crop, std::mt19937_64& rng);

/// Counter-clockwise rotation by 90 * quarter_turns degrees of a [C,H,W] tensor.
Tensor rotate90(const Tensor& image, int quarter_turns);
/// Window [y, y+h) x [x, x+w) of a [C,H,W] tensor.
Tensor crop(const Tensor& image, std::size_t y, std::size_t x, std::size_t height, std::size_t width);

struct TrainResult {
  RetouchModel model;
  AdamState adam;
  std::vector<double> losses;  // one per iteration
};

/// End-to-end Adam training with mini-batches of `batch_size` pairs drawn in
/// a seeded order. Throws std::runtime_error on a non-finite loss; the last
/// checkpoint written stays on disk. `resume` continues from saved moments.
TrainResult train_joint(RetouchModel model, const Dataset& dataset, const TrainConfig& config,
                        const AdamState* resume = nullptr);

// --- presets and config files ---

struct Preset {
  std::string name;
  ModelConfig model{};
  InitConfig init{};
  TrainConfig joint{};
  std::size_t synthetic_pairs = 50;
  std::size_t synthetic_size = 128;
};

/// "paper" (100k init steps, M = 40, 500 sources; 600k joint steps) or
/// "desk" (2k init steps, M = 9, 50 sources of 64 x 64; 20k joint steps on
/// 50 synthetic 128 x 128 pairs).
Preset make_preset(std::string_view name);

/// Reads a YAML config. A top-level `preset` key picks the base (default
/// desk); the remaining keys override it. Unknown keys are an error.
Preset load_config(const std::filesystem::path& path);
Preset parse_config(std::string_view yaml_text);

}  // namespace neurop
