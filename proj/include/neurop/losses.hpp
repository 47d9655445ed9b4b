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

#include "neurop/tensor.hpp"

namespace neurop {

/// Per-pixel weighting of the reconstruction loss from a human-region mask:
/// weight `inside` where mask > 0.5, 1 elsewhere.
template <typename T>
struct PixelWeights {
  const BasicTensor<T>* mask = nullptr;  // [H, W] or [1, H, W]
  T inside = T(5);
};

/// (1/CHW) sum |pred - target|; with a mask, sum w |pred - target| / (C sum w).
template <typename T>
T loss_reconstruction(const BasicImage<T>& pred, const BasicImage<T>& target, PixelWeights<T> weights = {});
template <typename T>
BasicImage<T> loss_reconstruction_grad(const BasicImage<T>& pred, const BasicImage<T>& target,
                                       PixelWeights<T> weights = {});

/// (1/CHW) ||grad I||_2 with forward differences (zero past the last
/// row/column) and the un-squared Euclidean norm over all entries. Accepts
/// any channel count.
template <typename T>
T loss_tv(const BasicImage<T>& pred);
template <typename T>
BasicImage<T> loss_tv_grad(const BasicImage<T>& pred);

/// 1 - mean over pixels of cos(angle(pred_px, target_px)), norms floored at
/// 1e-6; a pixel where both colors are ~0 counts as cos = 1.
template <typename T>
T loss_color(const BasicImage<T>& pred, const BasicImage<T>& target);
template <typename T>
BasicImage<T> loss_color_grad(const BasicImage<T>& pred, const BasicImage<T>& target);

struct LossWeights {
  double lambda_tv = 0.1;
  double lambda_color = 0.1;
  bool use_reconstruction = true;
  bool use_tv = true;
  bool use_color = true;
};

template <typename T>
struct LossBreakdown {
  T total = 0;
  T reconstruction = 0;
  T tv = 0;
  T color = 0;
  BasicImage<T> grad;  // dTotal/dPred, only when requested
};

/// L = L_r + lambda_tv L_tv + lambda_color L_c over the enabled terms.
template <typename T>
LossBreakdown<T> loss_total(const BasicImage<T>& pred, const BasicImage<T>& target, const LossWeights& weights,
                            PixelWeights<T> pixel_weights = {}, bool want_grad = false);

}  // namespace neurop
