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

/// A point cloud together with the recovered ring (laser) index of each point.
struct BeamSegmentedCloud
{
  PointCloud cloud;
  std::vector<int> ring;

  /// Number of distinct ring labels.
  int NumRings() const;
};

/// Horizontal angle atan2(y, x) in (-pi, pi], x forward and y left.
/// Throws InvalidArgument for (0, 0).
double Azimuth(double x, double y);

/// Recovers ring indices of a spinning-LiDAR sweep stored beam after beam,
/// counter-clockwise within a beam. A new ring starts whenever the azimuth,
/// taken in [0, 2 pi), drops by more than pi between consecutive points.
BeamSegmentedCloud SegmentBeams(const PointCloud& cloud);

/// Keeps the points of rings r with r % keep_every == 0.
PointCloud SubsampleBeams(const BeamSegmentedCloud& cloud, int keep_every);

/// Same as SubsampleBeams but keeps the (original) ring labels.
BeamSegmentedCloud SubsampleBeamsLabeled(const BeamSegmentedCloud& cloud, int keep_every);

/// Spreads each measurement over a square neighborhood, `iterations` times;
/// overlapping measurements resolve to the nearest (smallest) depth.
SparseDepthImage DilateSparseDepth(const SparseDepthImage& depth, int kernel_side, int iterations);

/// Sorted ring labels with at least one point landing inside the image of a
/// camera; `extrinsics` maps sensor to camera coordinates.
std::vector<int> RingsInView(const BeamSegmentedCloud& cloud, const PoseSE3& extrinsics,
                             const CameraIntrinsics& K);

} // namespace fewbeam
