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

#include "fewbeam/lidar.hpp"

#include "fewbeam/morphology.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

namespace fewbeam
{

int BeamSegmentedCloud::NumRings() const
{
  return static_cast<int>(std::set<int>(ring.begin(), ring.end()).size());
}

double Azimuth(double x, double y)
{
  if (x == 0.0 && y == 0.0)
    throw InvalidArgument("Azimuth: degenerate point on the sensor axis");
  double phi = std::atan2(y, x);
  // atan2 returns -pi for (negative x, -0.0); fold it into (-pi, pi].
  if (phi == -std::numbers::pi)
    phi = std::numbers::pi;
  return phi;
}

BeamSegmentedCloud SegmentBeams(const PointCloud& cloud)
{
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  BeamSegmentedCloud out;
  out.cloud = cloud;
  out.ring.resize(cloud.Size());
  int ring = 0;
  double previous = 0.0;
  for (int i = 0; i < cloud.Size(); ++i)
  {
    double phi;
    try
    {
      phi = Azimuth(cloud.data(i, 0), cloud.data(i, 1));
    }
    catch (const InvalidArgument&)
    {
      throw InvalidArgument("SegmentBeams: point " + std::to_string(i) + " has no azimuth");
    }
    if (phi < 0.0)
      phi += kTwoPi;
    if (i > 0 && previous - phi > std::numbers::pi)
      ++ring;
    out.ring[i] = ring;
    previous = phi;
  }
  return out;
}

BeamSegmentedCloud SubsampleBeamsLabeled(const BeamSegmentedCloud& cloud, int keep_every)
{
  if (keep_every < 1)
    throw InvalidArgument("SubsampleBeams: keep_every must be >= 1");
  std::vector<Eigen::Index> kept;
  for (std::size_t i = 0; i < cloud.ring.size(); ++i)
    if (cloud.ring[i] % keep_every == 0)
      kept.push_back(static_cast<Eigen::Index>(i));

  BeamSegmentedCloud out;
  out.cloud.data.resize(static_cast<Eigen::Index>(kept.size()), 4);
  out.ring.reserve(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k)
  {
    out.cloud.data.row(static_cast<Eigen::Index>(k)) = cloud.cloud.data.row(kept[k]);
    out.ring.push_back(cloud.ring[kept[k]]);
  }
  return out;
}

PointCloud SubsampleBeams(const BeamSegmentedCloud& cloud, int keep_every)
{
  return SubsampleBeamsLabeled(cloud, keep_every).cloud;
}

SparseDepthImage DilateSparseDepth(const SparseDepthImage& depth, int kernel_side, int iterations)
{
  return DilateMinPositive(depth, kernel_side, iterations);
}

std::vector<int> RingsInView(const BeamSegmentedCloud& cloud, const PoseSE3& extrinsics,
                             const CameraIntrinsics& K)
{
  if (static_cast<int>(cloud.ring.size()) != cloud.cloud.Size())
    throw InvalidArgument("RingsInView: ring labels do not match the cloud");
  std::set<int> rings;
  for (int i = 0; i < cloud.cloud.Size(); ++i)
  {
    const Eigen::Vector3d x = extrinsics * cloud.cloud.Xyz(i);
    if (!(x.z() > 0.0))
      continue;
    const long u = std::lround(K.fx * x.x() / x.z() + K.cx);
    const long v = std::lround(K.fy * x.y() / x.z() + K.cy);
    if (u >= 0 && v >= 0 && u < K.width && v < K.height)
      rings.insert(cloud.ring[i]);
  }
  return {rings.begin(), rings.end()};
}

} // namespace fewbeam
