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

#include "fewbeam/types.hpp"

#include <algorithm>
#include <cmath>

namespace fewbeam
{

void CameraIntrinsics::Validate() const
{
  if (!(fx > 0.0) || !(fy > 0.0))
    throw InvalidArgument("intrinsics: focal lengths must be positive");
  if (width < 1 || height < 1)
    throw InvalidArgument("intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw InvalidArgument("intrinsics: principal point outside the image");
}

Eigen::Matrix3d CameraIntrinsics::Matrix() const
{
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d CameraIntrinsics::Inverse() const
{
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

CameraIntrinsics CameraIntrinsics::Scaled(double factor) const
{
  CameraIntrinsics k = *this;
  k.fx *= factor;
  k.fy *= factor;
  k.cx *= factor;
  k.cy *= factor;
  k.width = std::max(1, static_cast<int>(std::lround(width * factor)));
  k.height = std::max(1, static_cast<int>(std::lround(height * factor)));
  return k;
}

CameraIntrinsics CameraIntrinsics::KittiLike(int width, int height)
{
  CameraIntrinsics k;
  k.fx = 0.58 * width;
  k.fy = 1.92 * height;
  k.cx = 0.5 * width;
  k.cy = 0.5 * height;
  k.width = width;
  k.height = height;
  return k;
}

PoseSE3::PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
  : R(rotation)
  , t(translation)
{
}

PoseSE3 PoseSE3::FromAxisAngle(const Eigen::Vector3d& omega, const Eigen::Vector3d& translation)
{
  const double angle = omega.norm();
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  if (angle > 0.0)
    rot = Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
  return {rot, translation};
}

void PoseSE3::Validate(double tol) const
{
  if (!R.allFinite() || !t.allFinite())
    throw InvalidArgument("pose: non-finite entries");
  if ((R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol)
    throw InvalidArgument("pose: rotation is not orthonormal");
  if (std::abs(R.determinant() - 1.0) > tol)
    throw InvalidArgument("pose: rotation determinant is not +1");
}

PoseSE3 PoseSE3::operator*(const PoseSE3& other) const
{
  return {R * other.R, R * other.t + t};
}

PoseSE3 PoseSE3::Inverse() const
{
  const Eigen::Matrix3d rt = R.transpose();
  return {rt, -rt * t};
}

Eigen::Matrix4d PoseSE3::Matrix() const
{
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = R;
  m.topRightCorner<3, 1>() = t;
  return m;
}

double RotationAngle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b)
{
  // atan2 keeps full precision near zero, where acos of the trace does not.
  const Eigen::Matrix3d rel = a.transpose() * b;
  const Eigen::Vector3d axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (rel.trace() - 1.0));
}

ImageBuffer::ImageBuffer(int height, int width, double fill)
{
  for (auto& c : channels)
    c = Plane::Constant(height, width, fill);
}

ImageBuffer ImageBuffer::FromGray(const Plane& gray)
{
  ImageBuffer img;
  for (auto& c : img.channels)
    c = gray;
  return img;
}

Plane ImageBuffer::Gray() const
{
  return (channels[0] + channels[1] + channels[2]) / 3.0;
}

void ImageBuffer::Validate() const
{
  for (const auto& c : channels)
  {
    if (c.rows() != channels[0].rows() || c.cols() != channels[0].cols())
      throw InvalidArgument("image: channel shapes differ");
    if (!c.allFinite() || (c.size() > 0 && (c.minCoeff() < 0.0 || c.maxCoeff() > 1.0)))
      throw InvalidArgument("image: intensities must be finite and within [0, 1]");
  }
}

void ValidateDenseDepth(const DepthMap& depth)
{
  if (!depth.allFinite() || (depth.size() > 0 && depth.minCoeff() <= 0.0))
    throw InvalidArgument("depth: dense depth must be finite and strictly positive");
}

void ValidateSparseDepth(const SparseDepthImage& depth)
{
  if (!depth.allFinite() || (depth.size() > 0 && depth.minCoeff() < 0.0))
    throw InvalidArgument("depth: sparse depth must be finite and non-negative");
}

} // namespace fewbeam
