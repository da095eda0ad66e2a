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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fewbeam
{

/// Seeded multi-octave solid (3D) value noise, one independent field per color
/// channel. `scale` holds the per-axis cell size (meters) of the coarsest
/// octave.
struct Texture
{
  std::uint64_t seed = 1;
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();
  int octaves = 2;

  /// Color in [0.1, 0.9] at point x (meters, surface-attached frame).
  Eigen::Vector3d Color(const Eigen::Vector3d& x) const;
};

/// Infinite textured plane n . x = offset (world frame).
struct TexturedPlane
{
  Eigen::Vector3d normal = Eigen::Vector3d::UnitY();
  double offset = 0.0;
  Texture texture;
};

/// Axis-aligned textured box; `velocity` is in meters per frame.
struct Box
{
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Texture texture;
};

/// World frame: x right, y down, z forward (the camera frame of the target
/// view). A fronto-parallel background plane at z = background_depth is always
/// present, so every camera ray hits something.
struct Scene
{
  std::vector<TexturedPlane> planes;
  std::vector<Box> boxes;
  double background_depth = 20.0;
  Texture background_texture;
  /// Direction toward the light for Lambertian shading.
  Eigen::Vector3d light = Eigen::Vector3d(0.3, -1.0, -0.5).normalized();

  /// Street-like scene: ground plane `camera_height` below the origin, side
  /// walls at +-half_width and a back wall at z = -back_distance (so that a
  /// spinning LiDAR gets returns at every azimuth), textures derived from
  /// `seed`.
  static Scene Street(std::uint64_t seed, double background_depth = 20.0, double camera_height = 1.65,
                      double half_width = 15.0, double back_distance = 20.0, double texture_scale = 2.0);
};

struct RenderResult
{
  ImageBuffer image;
  /// z-depth along the optical axis, at pixel centers.
  DepthMap depth;
  /// 0 for planes and background, i + 1 for scene.boxes[i].
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> object;
  /// Surface hit at the pixel center: 0 background, 1 + i for scene.planes[i],
  /// 1 + planes.size() + 6 i + face for the faces of scene.boxes[i].
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> surface;
};

/// Scene state `frame` frames after the reference: boxes moved by their
/// velocity.
Scene AdvanceScene(const Scene& scene, int frame);

/// Ray-cast rendering. `pose` maps world to camera coordinates.
/// `supersample` > 1 averages color over a regular sub-pixel grid.
RenderResult Render(const Scene& scene, const CameraIntrinsics& K, const PoseSE3& pose,
                    int supersample = 1);

/// First hit along a world-frame ray; returns false on a miss.
bool CastRay(const Scene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
             double& distance, Eigen::Vector3d* color = nullptr, int* object = nullptr,
             int* surface = nullptr);

/// Pixels whose (2 r + 1)^2 neighborhood lies on a single surface.
Mask SurfaceInterior(const RenderResult& render, int radius);

/// Spinning-LiDAR sweep in the sensor frame (x forward, y left, z up).
/// `sensor_to_world` places the sensor. Points are stored beam after beam in
/// the given elevation order, azimuth increasing from 0 in steps of
/// `azimuth_step`. Misses and returns beyond `max_range` are dropped.
/// `range_noise` > 0 adds seeded Gaussian jitter (meters) to each range.
PointCloud SimulateLidar(const Scene& scene, const PoseSE3& sensor_to_world,
                         const std::vector<double>& elevations, double azimuth_step,
                         double max_range = 120.0, double range_noise = 0.0,
                         std::uint64_t noise_seed = 0);

/// 64 elevations (radians, top beam first) laid out like a KITTI HDL-64E:
/// +2 deg to -8.33 deg in 1/3 deg steps, then 1/2 deg steps downward.
std::vector<double> KittiElevations();

struct LidarSpec
{
  std::vector<double> elevations = KittiElevations();
  double azimuth_step = 0.2 * 3.14159265358979323846 / 180.0;
  /// Sensor origin in target camera coordinates.
  Eigen::Vector3d sensor_in_camera = Eigen::Vector3d(0.0, -0.08, -0.27);
  /// Ring sub-sampling applied before building H_t.
  int keep_every = 16;
  double max_range = 120.0;
  double range_noise = 0.0;
  std::uint64_t noise_seed = 0;
};

/// Target frame t with sources t-1 and t+1.
struct FrameTriplet
{
  CameraIntrinsics K;
  ImageBuffer target;
  std::vector<ImageBuffer> sources;
  DepthMap target_depth;
  std::vector<DepthMap> source_depths;
  /// Target -> source transforms, matching `sources`.
  std::vector<PoseSE3> poses;
  /// Full simulated sweep of frame t (sensor frame) and its extrinsics.
  PointCloud cloud;
  PoseSE3 lidar_to_camera;
  /// Sub-sampled sweep projected into the target view.
  SparseDepthImage lidar;
  /// Visible mask of each box in the target view.
  std::vector<Mask> box_masks;
  /// Target pixels at least two pixels away from any surface boundary.
  Mask target_interior;
};

/// Renders frames t-1, t, t+1 for a camera translating by `ego_motion`
/// (meters per frame, world axes) and simulates the LiDAR of frame t.
FrameTriplet MakeTriplet(const Scene& scene, const CameraIntrinsics& K,
                         const Eigen::Vector3d& ego_motion, const LidarSpec& lidar, int supersample = 1);

/// Everything the `synth` command needs, parsed from the plain-text scene
/// format: `key value...` lines plus repeated `box ... end` stanzas.
struct SynthConfig
{
  Scene scene;
  int width = 320;
  int height = 96;
  Eigen::Vector3d ego_motion = Eigen::Vector3d(0.0, 0.0, 1.0);
  LidarSpec lidar;
  int supersample = 1;
  std::uint64_t seed = 1;

  CameraIntrinsics Intrinsics() const { return CameraIntrinsics::KittiLike(width, height); }
};

/// Throws FormatError naming the line on malformed input or unknown keys.
/// `seed_override`, when set, replaces the `seed` key.
SynthConfig ParseSynthConfig(const std::string& text, std::optional<std::uint64_t> seed_override = std::nullopt);

} // namespace fewbeam
