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

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace fewbeam
{

/// A keypoint of the target image and its location in the source image.
struct Match
{
  PixelCoord target;
  PixelCoord source;
  double score = 0.0; ///< normalized cross-correlation
};

struct MatchOptions
{
  double harris_k = 0.04;
  /// Keypoints need a Harris response above this fraction of the maximum.
  double min_response_ratio = 1e-6;
  /// Non-maximum suppression radius (pixels); 0 disables suppression.
  int nms_radius = 2;
  /// NCC window is (2 r + 1)^2.
  int window_radius = 3;
  /// Largest displacement searched along each axis.
  int search_radius = 12;
  double min_ncc = 0.9;
  int max_keypoints = 4000;
  /// Optional restriction of keypoints to pixels where the mask is true.
  std::optional<Mask> candidates;
};

/// Harris corners of `target` matched into `source` by NCC block search with
/// sub-pixel parabolic refinement.
std::vector<Match> DetectAndMatch(const ImageBuffer& target, const ImageBuffer& source,
                                  const MatchOptions& options = {});

/// 3D-2D pair: a target pixel with metric depth and its source observation.
struct Correspondence
{
  PixelCoord target;
  double depth = 0.0;
  PixelCoord source;
};
using CorrespondenceSet = std::vector<Correspondence>;

/// Keeps matches whose target pixel (rounded) carries a LiDAR depth.
CorrespondenceSet AttachDepth(const std::vector<Match>& matches, const SparseDepthImage& lidar);

/// All poses (target -> source) consistent with three 3D points and their
/// unit bearing vectors in the source camera. Up to four solutions.
std::vector<PoseSE3> SolveP3P(const std::array<Eigen::Vector3d, 3>& points,
                              const std::array<Eigen::Vector3d, 3>& bearings);

/// Least-squares PnP: DLT initialization (unless `initial` is given) followed
/// by damped Gauss-Newton on SE(3). Throws NonConvergence with fewer than six
/// correspondences or a degenerate configuration.
PoseSE3 SolvePnP(const CorrespondenceSet& corr, const CameraIntrinsics& K,
                 const std::optional<PoseSE3>& initial = std::nullopt);

/// Reprojection error (pixels) of every correspondence under `pose`;
/// +inf for points behind the source camera.
std::vector<double> ReprojectionErrors(const CorrespondenceSet& corr, const CameraIntrinsics& K,
                                       const PoseSE3& pose);

struct RansacOptions
{
  int iterations = 100;
  double reprojection_threshold = 2.0; ///< pixels
  std::uint64_t seed = 0;
};

struct PnPResult
{
  PoseSE3 pose;
  std::vector<bool> inliers;
  int num_inliers = 0;
  /// Mean reprojection error over the final inliers (pixels).
  double mean_reprojection_error = 0.0;
  /// RMS error of the winning minimal hypothesis and of the refined pose,
  /// both over the consensus set of the winning hypothesis.
  double hypothesis_rms = 0.0;
  double refined_rms = 0.0;
  int winning_iteration = -1;
};

/// RANSAC over P3P minimal samples (3 points plus 1 for disambiguation), with
/// a final SolvePnP refit on the consensus set. Deterministic for a seed.
/// Throws NonConvergence without a consensus of at least six points.
PnPResult PnPRansac(const CorrespondenceSet& corr, const CameraIntrinsics& K,
                    const RansacOptions& options = {});

/// Flags (true = keep) for translation magnitudes no larger than
/// `factor` times their median.
std::vector<bool> FilterByTranslationMedian(const std::vector<double>& magnitudes, double factor = 3.0);

/// Full metric pose pipeline between a target frame with LiDAR and a source
/// frame: matching restricted to LiDAR pixels, depth attachment, RANSAC PnP.
PnPResult EstimatePose(const ImageBuffer& target, const ImageBuffer& source,
                       const SparseDepthImage& lidar, const CameraIntrinsics& K,
                       const RansacOptions& ransac = {}, MatchOptions matching = {});

} // namespace fewbeam
