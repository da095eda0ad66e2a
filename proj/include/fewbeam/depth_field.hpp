//==============================================================================
// Copyright 2026 The fewbeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//==============================================================================

#pragma once

#include "fewbeam/types.hpp"

#include <vector>

namespace fewbeam
{

/// Optimizable depth image.
///
/// Parameters live on a pyramid of grids: level k has resolution
/// ceil(H / 2^k) x ceil(W / 2^k). The logit image seen at scale s is
///
///     y_s = sum_{k >= s} Up_k(x_k)
///
/// with Up_k the bilinear (half-pixel centers) upsampling to full resolution,
/// so scale s = levels - 1 is the coarsest prediction and scale 0 the final
/// one. A logit decodes to disparity b + a * sigmoid(y) spanning
/// [1 / kMaxDepth, 1 / kMinDepth], and depth is its inverse.
class DepthField
{
public:
  static constexpr double kMinDepth = 0.1;
  static constexpr double kMaxDepth = 100.0;

  DepthField(int height, int width, int levels = 1, double initial_depth = 20.0);

  int Height() const { return height_; }
  int Width() const { return width_; }
  int Levels() const { return static_cast<int>(params_.size()); }

  Plane& Level(int k) { return params_.at(k); }
  const Plane& Level(int k) const { return params_.at(k); }
  std::vector<Plane>& Parameters() { return params_; }
  const std::vector<Plane>& Parameters() const { return params_; }
  /// Total number of scalar parameters over all levels.
  Eigen::Index NumParameters() const;

  /// Full-resolution logits at `scale`.
  Plane Logits(int scale = 0) const;
  /// Full-resolution depth at `scale`.
  DepthMap Decode(int scale = 0) const;

  /// Adds Up_k^T(grad_logits) to grads[k] for every k >= scale.
  void AccumulateGradient(int scale, const Plane& grad_logits, std::vector<Plane>& grads) const;

  /// Zero-initialized gradient buffers shaped like the parameters.
  std::vector<Plane> ZeroGradient() const;

  static double LogitToDisparity(double y);
  /// d(disparity) / d(logit).
  static double DisparitySlope(double y);
  static double DepthToLogit(double depth);

private:
  struct Axis
  {
    std::vector<int> i0, i1;
    std::vector<double> w;
  };
  static Axis MakeAxis(int full, int coarse, int factor);
  Plane Upsample(int k) const;

  int height_;
  int width_;
  std::vector<Plane> params_;
  std::vector<Axis> rows_, cols_;
};

} // namespace fewbeam
