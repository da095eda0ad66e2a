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

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <stdexcept>
#include <string>
#include <utility>

namespace fewbeam
{

// Row-major so that (row, col) == (v, u) and the buffer layout matches numpy.
using Plane = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Depths in meters. Dense maps are strictly positive; sparse maps use 0 for
/// "no measurement".
using DepthMap = Plane;
using SparseDepthImage = Plane;

//------------------------------------------------------------------------------
// Errors
//------------------------------------------------------------------------------
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed file or text input.
class FormatError : public Error
{
public:
  using Error::Error;
};

/// Violated precondition on an argument.
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

/// Estimation failed to produce a usable result (PnP, RANSAC, optimizer).
class NonConvergence : public Error
{
public:
  using Error::Error;
};

//------------------------------------------------------------------------------
// Camera and pose
//------------------------------------------------------------------------------
struct CameraIntrinsics
{
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies
  /// inside the image.
  void Validate() const;

  Eigen::Matrix3d Matrix() const;
  Eigen::Matrix3d Inverse() const;

  /// Intrinsics of the same camera at an image scaled by `factor`.
  CameraIntrinsics Scaled(double factor) const;

  /// Pinhole intrinsics with the normalized focal lengths commonly used for
  /// KITTI crops (fx = 0.58 W, fy = 1.92 H, centered principal point).
  static CameraIntrinsics KittiLike(int width, int height);
};

/// Rigid transform x' = R x + t.
struct PoseSE3
{
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  PoseSE3() = default;
  PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static PoseSE3 Identity() { return {}; }
  /// Rotation given as an axis-angle vector (radians).
  static PoseSE3 FromAxisAngle(const Eigen::Vector3d& omega, const Eigen::Vector3d& translation);

  /// Throws InvalidArgument unless R is a rotation within `tol`.
  void Validate(double tol = 1e-9) const;

  Eigen::Vector3d operator*(const Eigen::Vector3d& x) const { return R * x + t; }
  /// Composition: (a * b)(x) == a(b(x)).
  PoseSE3 operator*(const PoseSE3& other) const;
  PoseSE3 Inverse() const;

  Eigen::Matrix4d Matrix() const;
};

/// Geodesic angle between two rotations, radians.
double RotationAngle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

struct PixelCoord
{
  double u = 0.0;
  double v = 0.0;
};

/// Raw LiDAR sweep: one row per point, columns (x, y, z, intensity), meters in
/// the sensor frame (x forward, y left, z up). Row order is acquisition order.
struct PointCloud
{
  using Storage = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;
  Storage data;

  PointCloud() = default;
  explicit PointCloud(Storage points) : data(std::move(points)) {}

  int Size() const { return static_cast<int>(data.rows()); }
  bool Empty() const { return data.rows() == 0; }
  Eigen::Vector3d Xyz(int i) const { return data.row(i).head<3>().transpose(); }
};

//------------------------------------------------------------------------------
// Images
//------------------------------------------------------------------------------
/// Three-channel image with intensities in [0, 1], stored as separate planes.
struct ImageBuffer
{
  std::array<Plane, 3> channels;

  ImageBuffer() = default;
  ImageBuffer(int height, int width, double fill = 0.0);
  /// Grayscale image replicated into all three channels.
  static ImageBuffer FromGray(const Plane& gray);

  int Height() const { return static_cast<int>(channels[0].rows()); }
  int Width() const { return static_cast<int>(channels[0].cols()); }
  bool Empty() const { return channels[0].size() == 0; }

  /// Per-pixel channel mean.
  Plane Gray() const;

  /// Throws InvalidArgument on shape mismatch or values outside [0, 1].
  void Validate() const;
};

/// Checks that dense depth is finite and strictly positive.
void ValidateDenseDepth(const DepthMap& depth);
/// Checks that sparse depth is finite and non-negative.
void ValidateSparseDepth(const SparseDepthImage& depth);

} // namespace fewbeam
