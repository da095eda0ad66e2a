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

#include "fewbeam/losses.hpp"
#include "fewbeam/pose.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fewbeam
{

enum class PoseSource
{
  Given, ///< use the poses passed by the caller
  PnP,   ///< estimate each pose from the images and the LiDAR image
};

std::string ToString(PoseSource source);
PoseSource ParsePoseSource(const std::string& name);

struct OptimizeConfig
{
  double learning_rate = 1e-4;
  int steps = 2000;
  /// Halve the learning rate once half of the steps are done.
  bool halve_at_midpoint = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double initial_depth = 20.0;
  PoseSource pose_source = PoseSource::Given;
  /// Translations are divided by this and the output depth multiplied by it.
  double pose_scale_divisor = 1.0;
  /// Optional dilation of the LiDAR image used as supervision target
  /// (kernel side, iterations); 0 iterations disables it.
  int dilation_kernel = 3;
  int dilation_iterations = 0;
  /// Loss weights, LiDAR variant and number of scales.
  LossConfig loss;
  RansacOptions ransac;

  /// Throws InvalidArgument on out-of-range values.
  void Validate() const;
};

struct LossTraceRecord
{
  int step = 0;
  double learning_rate = 0.0;
  LossTerms terms;
};

/// Loss terms before each update, plus a final record (step == steps) for the
/// returned state.
struct LossTrace
{
  std::vector<LossTraceRecord> records;
};

/// Non-finite loss during optimization; carries the trace up to that point.
class DivergenceError : public NonConvergence
{
public:
  DivergenceError(const std::string& what, LossTrace trace)
    : NonConvergence(what)
    , trace_(std::move(trace))
  {
  }
  const LossTrace& Trace() const { return trace_; }

private:
  LossTrace trace_;
};

struct OptimizeResult
{
  DepthMap depth;
  LossTrace trace;
  /// Poses actually used (after PnP and scaling).
  std::vector<PoseSE3> poses;
};

/// Adam on a DepthField against the configured objective.
OptimizeResult OptimizeDepth(const ImageBuffer& target, const std::vector<ImageBuffer>& sources,
                             const SparseDepthImage& lidar, const CameraIntrinsics& K,
                             const std::vector<PoseSE3>& poses, const OptimizeConfig& config);

struct ScaledPoses
{
  std::vector<PoseSE3> poses;
  /// Factor to apply to depths estimated with the scaled poses.
  double depth_multiplier = 1.0;
};

/// Divides every translation by `divisor` (> 0).
ScaledPoses ApplyPoseScaling(const std::vector<PoseSE3>& poses, double divisor);

struct InfiniteDepthConfig
{
  std::uint64_t seed = 1;
  int width = 320;
  int height = 96;
  /// Forward ego motion per frame (meters); the box moves identically.
  double speed = 1.0;
  bool include_box = true;
  /// Range of the box distance drawn from the seed.
  double min_distance = 5.0;
  double max_distance = 10.0;
  /// Settings shared by both runs; the LiDAR variant is overridden.
  OptimizeConfig optimize;
};

struct InfiniteDepthResult
{
  DepthMap ground_truth;
  DepthMap photometric_only;
  DepthMap lidar_masked;
  SparseDepthImage lidar;
  /// Empty when the box is disabled or not visible.
  Mask box_mask;
  bool has_box = false;
  double box_distance = 0.0;
  double error_photometric_only = 0.0;
  double error_lidar_masked = 0.0;
};

/// Camera and a single box translating together: the box shows no parallax.
/// Optimizes once with photometric-only supervision and once with masked
/// LiDAR supervision and reports the signed relative error on the box.
InfiniteDepthResult RunInfiniteDepthScenario(const InfiniteDepthConfig& config);

} // namespace fewbeam
