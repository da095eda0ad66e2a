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

#include "fewbeam/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fewbeam
{

namespace
{
// Integer cell and fractional offset for bilinear sampling on [0, n-1].
inline void Cell(double x, int n, int& i0, int& i1, double& w)
{
  if (n == 1)
  {
    i0 = i1 = 0;
    w = 0.0;
    return;
  }
  i0 = std::min(static_cast<int>(std::floor(x)), n - 2);
  i1 = i0 + 1;
  w = x - i0;
}
} // namespace

Projection ProjectPoint(const CameraIntrinsics& K, const PoseSE3& pose, double depth, PixelCoord pt)
{
  if (!(depth > 0.0))
    throw InvalidArgument("ProjectPoint: depth must be positive");
  const Eigen::Vector3d ray((pt.u - K.cx) / K.fx, (pt.v - K.cy) / K.fy, 1.0);
  const Eigen::Vector3d x = pose.R * (depth * ray) + pose.t;
  Projection out;
  out.depth = x.z();
  out.valid = x.z() > 0.0;
  if (out.valid)
  {
    out.pixel.u = K.fx * x.x() / x.z() + K.cx;
    out.pixel.v = K.fy * x.y() / x.z() + K.cy;
  }
  return out;
}

Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> Backproject(const CameraIntrinsics& K,
                                                                      const DepthMap& depth)
{
  ValidateDenseDepth(depth);
  const int h = static_cast<int>(depth.rows());
  const int w = static_cast<int>(depth.cols());
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> pts(static_cast<Eigen::Index>(h) * w, 3);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      const double d = depth(v, u);
      const Eigen::Index i = static_cast<Eigen::Index>(v) * w + u;
      pts(i, 0) = d * (u - K.cx) / K.fx;
      pts(i, 1) = d * (v - K.cy) / K.fy;
      pts(i, 2) = d;
    }
  return pts;
}

WarpResult WarpImageWithJacobian(const ImageBuffer& source, const DepthMap& target_depth,
                                 const PoseSE3& pose, const CameraIntrinsics& K,
                                 WarpJacobian* jacobian)
{
  const int h = static_cast<int>(target_depth.rows());
  const int w = static_cast<int>(target_depth.cols());
  if (source.Height() != h || source.Width() != w)
    throw InvalidArgument("WarpImage: source image and depth resolutions differ");

  WarpResult out{ImageBuffer(h, w, 0.0), Mask::Constant(h, w, false)};
  if (jacobian)
    for (auto& c : *jacobian)
      c = Plane::Zero(h, w);

  const Eigen::Matrix3d& R = pose.R;
  const Eigen::Vector3d& t = pose.t;
  const double fx = K.fx, fy = K.fy, cx = K.cx, cy = K.cy;
  const double umax = w - 1, vmax = h - 1;

  for (int v = 0; v < h; ++v)
  {
    const double ry = (v - cy) / fy;
    for (int u = 0; u < w; ++u)
    {
      const double rx = (u - cx) / fx;
      // a = R K^-1 p, so X(D) = D a + t.
      const Eigen::Vector3d a = R.col(0) * rx + R.col(1) * ry + R.col(2);
      const double d = target_depth(v, u);
      const Eigen::Vector3d X = d * a + t;
      if (!(X.z() > 0.0))
        continue;
      const double iz = 1.0 / X.z();
      const double us = fx * X.x() * iz + cx;
      const double vs = fy * X.y() * iz + cy;
      if (!(us >= 0.0 && us <= umax && vs >= 0.0 && vs <= vmax))
        continue;

      int x0, x1, y0, y1;
      double wx, wy;
      Cell(us, w, x0, x1, wx);
      Cell(vs, h, y0, y1, wy);
      out.valid(v, u) = true;

      double dudd = 0.0, dvdd = 0.0;
      if (jacobian)
      {
        // Written against t so that P = identity gives exactly zero.
        dudd = fx * (a.x() * t.z() - a.z() * t.x()) * iz * iz;
        dvdd = fy * (a.y() * t.z() - a.z() * t.y()) * iz * iz;
      }

      for (int c = 0; c < 3; ++c)
      {
        const Plane& img = source.channels[c];
        const double i00 = img(y0, x0), i01 = img(y0, x1);
        const double i10 = img(y1, x0), i11 = img(y1, x1);
        const double top = i00 + wx * (i01 - i00);
        const double bot = i10 + wx * (i11 - i10);
        out.image.channels[c](v, u) = top + wy * (bot - top);
        if (jacobian)
        {
          const double didu = (1.0 - wy) * (i01 - i00) + wy * (i11 - i10);
          const double didv = bot - top;
          (*jacobian)[c](v, u) = didu * dudd + didv * dvdd;
        }
      }
    }
  }
  return out;
}

WarpResult WarpImage(const ImageBuffer& source, const DepthMap& target_depth, const PoseSE3& pose,
                     const CameraIntrinsics& K)
{
  return WarpImageWithJacobian(source, target_depth, pose, K, nullptr);
}

WarpJacobian ComputeWarpJacobian(const ImageBuffer& source, const DepthMap& target_depth,
                                 const PoseSE3& pose, const CameraIntrinsics& K)
{
  WarpJacobian jac;
  WarpImageWithJacobian(source, target_depth, pose, K, &jac);
  return jac;
}

SparseDepthImage ProjectPointCloud(const PointCloud& cloud, const PoseSE3& extrinsics,
                                   const CameraIntrinsics& K)
{
  SparseDepthImage out = SparseDepthImage::Zero(K.height, K.width);
  for (int i = 0; i < cloud.Size(); ++i)
  {
    const Eigen::Vector3d x = extrinsics * cloud.Xyz(i);
    if (!(x.z() > 0.0))
      continue;
    const long u = std::lround(K.fx * x.x() / x.z() + K.cx);
    const long v = std::lround(K.fy * x.y() / x.z() + K.cy);
    if (u < 0 || v < 0 || u >= K.width || v >= K.height)
      continue;
    double& cell = out(v, u);
    if (cell == 0.0 || x.z() < cell)
      cell = x.z();
  }
  return out;
}

PoseSE3 LidarToCameraExtrinsics(const Eigen::Vector3d& sensor_in_camera)
{
  Eigen::Matrix3d r;
  // camera x = -lidar y, camera y = -lidar z, camera z = lidar x
  r << 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0;
  return {r, sensor_in_camera};
}

} // namespace fewbeam
