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

#include "fewbeam/depth_field.hpp"
#include "fewbeam/geometry.hpp"

#include <string>
#include <vector>

namespace fewbeam
{

/// How the sparse LiDAR image enters the objective.
enum class LidarVariant
{
  None,   ///< photometric only
  Naive,  ///< L1 added on every LiDAR pixel
  Masked, ///< L1 replaces the photometric term on LiDAR pixels
  Hinted, ///< L1 added where the LiDAR-warped reconstruction is better
};

std::string ToString(LidarVariant variant);
/// Accepts none/photometric-only, naive, masked, hinted.
LidarVariant ParseLidarVariant(const std::string& name);

struct LossConfig
{
  /// SSIM / L1 balance.
  double alpha = 0.85;
  double photometric_weight = 1.0;
  double smooth_weight = 1e-3;
  double lidar_weight = 1.0;
  LidarVariant lidar_variant = LidarVariant::None;
  int multiscale_levels = 1;
  bool automask = true;

  void Validate() const;
};

/// Per-pixel loss with the pixels it is defined on.
struct LossMap
{
  Plane values;
  Mask valid;
};

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Per-pixel SSIM over 3x3 windows (reflected borders), averaged over the
/// three channels.
Plane Ssim(const ImageBuffer& a, const ImageBuffer& b);

/// Pixel-wise reconstruction error of one source, without validity handling.
Plane ReconstructionError(const ImageBuffer& target, const ImageBuffer& reconstruction, double alpha);

/// Minimum over sources of the reconstruction error, each source restricted
/// to its own validity mask. Throws InvalidArgument for an empty source list.
LossMap PhotometricLoss(const ImageBuffer& target, const std::vector<WarpResult>& warped, double alpha);

/// Keeps the pixels whose warped reconstruction beats the unwarped sources.
Mask AutoMask(const ImageBuffer& target, const std::vector<ImageBuffer>& raw_sources,
              const std::vector<WarpResult>& warped, double alpha);

/// Per-pixel LiDAR-augmented loss for the chosen variant. `photo_hint` is the
/// photometric loss obtained by warping with the LiDAR depth, required for
/// LidarVariant::Hinted.
LossMap LidarLoss(const DepthMap& depth, const SparseDepthImage& lidar, const LossMap& photo,
                  const LossMap* photo_hint, LidarVariant variant);

/// Edge-aware smoothness of mean-normalized disparity, forward differences.
double SmoothnessLoss(const DepthMap& depth, const ImageBuffer& image);

/// | |r| - |r_hat| |
double ImuPoseLoss(const Eigen::Vector3d& r, const Eigen::Vector3d& r_hat);

//------------------------------------------------------------------------------
// Full objective
//------------------------------------------------------------------------------

/// One target view with its source views.
struct FrameInputs
{
  CameraIntrinsics K;
  ImageBuffer target;
  std::vector<ImageBuffer> sources;
  /// Target -> source transform for each source.
  std::vector<PoseSE3> poses;
  /// Supervision LiDAR image H_t; an empty or all-zero map disables it.
  SparseDepthImage lidar;

  void Validate() const;
};

struct LossTerms
{
  double total = 0.0;
  double photometric = 0.0;
  double lidar = 0.0;
  double smoothness = 0.0;
};

struct LossEvaluation
{
  LossTerms terms;
  /// d(total) / d(parameters), one plane per pyramid level.
  std::vector<Plane> gradient;
};

/// Objective over a DepthField: sum over scales of
///   photometric_weight * mean_{photometric pixels} L_photo
/// + lidar_weight       * mean_{supervised LiDAR pixels} |D - H|
/// + smooth_weight      * L_smooth.
/// Each mean runs over its own support. Which pixels belong to each support
/// follows the per-pixel case analysis of LidarLoss. Quantities that do not
/// depend on the depth (unwarped-source errors) are cached at construction.
class Objective
{
public:
  Objective(FrameInputs inputs, LossConfig config);

  LossEvaluation Evaluate(const DepthField& field, bool with_gradient = true) const;

  const FrameInputs& Inputs() const { return inputs_; }
  const LossConfig& Config() const { return config_; }

private:
  LossTerms EvaluateScale(const DepthMap& depth, Plane* grad_depth, Plane* grad_disparity) const;

  FrameInputs inputs_;
  LossConfig config_;
  bool has_lidar_ = false;
  Plane identity_min_;
  std::array<Plane, 3> target_mean_, target_sq_mean_;
  Plane smooth_wx_, smooth_wy_;
};

/// Convenience wrapper building an Objective for a single evaluation.
LossEvaluation TotalLossAndGradient(const DepthField& field, const FrameInputs& inputs,
                                    const LossConfig& config);

} // namespace fewbeam
