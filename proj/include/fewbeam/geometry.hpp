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

namespace fewbeam
{

/// Result of moving a target pixel into a source view.
struct Projection
{
  PixelCoord pixel;
  /// Depth of the transformed point in the source camera frame.
  double depth = 0.0;
  /// False when the transformed point is on or behind the source camera.
  bool valid = false;
};

/// Back-projects `pt` at `depth`, applies `pose` (target -> source) and
/// re-projects with the same intrinsics.
Projection ProjectPoint(const CameraIntrinsics& K, const PoseSE3& pose, double depth, PixelCoord pt);

/// Camera-frame points for every pixel, row index v * W + u.
Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> Backproject(const CameraIntrinsics& K,
                                                                      const DepthMap& depth);

/// Source image resampled into the target view. Pixels whose projection falls
/// outside the source image, or behind the camera, are invalid and hold 0.
struct WarpResult
{
  ImageBuffer image;
  Mask valid;
};

/// Per-channel derivative of the warped intensity with respect to the target
/// depth at the same pixel. Zero on invalid pixels.
using WarpJacobian = std::array<Plane, 3>;

/// Inverse warp with bilinear sampling.
WarpResult WarpImage(const ImageBuffer& source, const DepthMap& target_depth, const PoseSE3& pose,
                     const CameraIntrinsics& K);

/// Analytic derivative of WarpImage with respect to each depth value.
WarpJacobian ComputeWarpJacobian(const ImageBuffer& source, const DepthMap& target_depth,
                                 const PoseSE3& pose, const CameraIntrinsics& K);

/// Fused warp and jacobian; `jacobian` may be null.
WarpResult WarpImageWithJacobian(const ImageBuffer& source, const DepthMap& target_depth,
                                 const PoseSE3& pose, const CameraIntrinsics& K,
                                 WarpJacobian* jacobian);

/// Z-buffered nearest-pixel projection of a sensor-frame cloud.
/// `extrinsics` maps sensor coordinates to camera coordinates.
SparseDepthImage ProjectPointCloud(const PointCloud& cloud, const PoseSE3& extrinsics,
                                   const CameraIntrinsics& K);

/// Standard extrinsics from a LiDAR frame (x forward, y left, z up) to a camera
/// frame (x right, y down, z forward), with the sensor origin at
/// `sensor_in_camera` expressed in camera coordinates.
PoseSE3 LidarToCameraExtrinsics(const Eigen::Vector3d& sensor_in_camera = Eigen::Vector3d::Zero());

} // namespace fewbeam
