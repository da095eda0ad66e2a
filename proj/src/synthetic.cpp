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

#include "fewbeam/synthetic.hpp"

#include "fewbeam/geometry.hpp"
#include "fewbeam/lidar.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace fewbeam
{

namespace
{
constexpr double kEps = 1e-9;
constexpr double kGrazingStretch = 6.0;

std::uint64_t SplitMix(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double LatticeValue(std::uint64_t seed, std::int64_t i, std::int64_t j, std::int64_t k)
{
  std::uint64_t h = SplitMix(seed);
  h = SplitMix(h ^ static_cast<std::uint64_t>(i));
  h = SplitMix(h ^ static_cast<std::uint64_t>(j));
  h = SplitMix(h ^ static_cast<std::uint64_t>(k));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double Fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double ValueNoise(std::uint64_t seed, const Eigen::Vector3d& p)
{
  const Eigen::Vector3d f = p.array().floor();
  const auto i = static_cast<std::int64_t>(f.x()), j = static_cast<std::int64_t>(f.y()),
             k = static_cast<std::int64_t>(f.z());
  const double sx = Fade(p.x() - f.x()), sy = Fade(p.y() - f.y()), sz = Fade(p.z() - f.z());
  double layer[2];
  for (int dz = 0; dz < 2; ++dz)
  {
    const double v00 = LatticeValue(seed, i, j, k + dz), v10 = LatticeValue(seed, i + 1, j, k + dz);
    const double v01 = LatticeValue(seed, i, j + 1, k + dz), v11 = LatticeValue(seed, i + 1, j + 1, k + dz);
    const double a = v00 + sx * (v10 - v00);
    const double b = v01 + sx * (v11 - v01);
    layer[dz] = a + sy * (b - a);
  }
  return layer[0] + sz * (layer[1] - layer[0]);
}

double Shade(const Eigen::Vector3d& normal, const Eigen::Vector3d& light)
{
  return 0.35 + 0.65 * std::abs(normal.normalized().dot(light));
}

Texture DerivedTexture(std::uint64_t seed, std::uint64_t salt, const Eigen::Vector3d& scale)
{
  Texture t;
  t.seed = SplitMix(seed ^ SplitMix(salt));
  t.scale = scale;
  return t;
}

[[noreturn]] void ConfigError(int line, const std::string& what)
{
  throw FormatError("scene config line " + std::to_string(line) + ": " + what);
}

std::vector<double> ReadNumbers(std::istringstream& in, std::size_t count, int line, const std::string& key)
{
  std::vector<double> out;
  double v;
  while (in >> v)
    out.push_back(v);
  if (!in.eof() || out.size() != count)
    ConfigError(line, "'" + key + "' expects " + std::to_string(count) + " number(s)");
  for (double x : out)
    if (!std::isfinite(x))
      ConfigError(line, "'" + key + "' has a non-finite value");
  return out;
}
} // namespace

Eigen::Vector3d Texture::Color(const Eigen::Vector3d& x) const
{
  Eigen::Vector3d out;
  for (int c = 0; c < 3; ++c)
  {
    const std::uint64_t channel_seed = SplitMix(seed + 0x1000193ULL * (c + 1));
    const Eigen::Vector3d base = x.cwiseQuotient(scale);
    double sum = 0.0, norm = 0.0, amp = 1.0, freq = 1.0;
    for (int o = 0; o < octaves; ++o)
    {
      sum += amp * ValueNoise(channel_seed + static_cast<std::uint64_t>(o), base * freq);
      norm += amp;
      amp *= 0.5;
      freq *= 2.0;
    }
    const double n = sum / norm;
    out(c) = 0.5 + 0.4 * std::tanh(4.0 * (n - 0.5));
  }
  return out;
}

Scene Scene::Street(std::uint64_t seed, double background_depth, double camera_height, double half_width,
                    double back_distance, double texture_scale)
{
  if (!(background_depth > 0.0) || !(camera_height > 0.0) || !(half_width > 0.0) || !(back_distance > 0.0) ||
      !(texture_scale > 0.0))
    throw InvalidArgument("Scene::Street: dimensions must be positive");
  Scene s;
  s.background_depth = background_depth;
  const Eigen::Vector3d iso = Eigen::Vector3d::Constant(texture_scale);
  // Seen at grazing angles, so the ground and side walls get cells stretched
  // along the viewing direction.
  const Eigen::Vector3d stretched(texture_scale, texture_scale, kGrazingStretch * texture_scale);
  s.background_texture = DerivedTexture(seed, 0, iso);
  s.planes.push_back({Eigen::Vector3d::UnitY(), camera_height, DerivedTexture(seed, 1, stretched)});
  s.planes.push_back({Eigen::Vector3d::UnitX(), -half_width, DerivedTexture(seed, 2, stretched)});
  s.planes.push_back({Eigen::Vector3d::UnitX(), half_width, DerivedTexture(seed, 3, stretched)});
  s.planes.push_back({Eigen::Vector3d::UnitZ(), -back_distance, DerivedTexture(seed, 4, iso)});
  return s;
}

Scene AdvanceScene(const Scene& scene, int frame)
{
  Scene out = scene;
  for (Box& b : out.boxes)
    b.center += static_cast<double>(frame) * b.velocity;
  return out;
}

bool CastRay(const Scene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
             double& distance, Eigen::Vector3d* color, int* object, int* surface)
{
  double best = std::numeric_limits<double>::infinity();
  int best_kind = -1; // 0 background, 1 plane, 2 box
  int best_index = -1;
  int best_axis = 0;

  auto try_plane = [&](const Eigen::Vector3d& n, double offset, int kind, int index) {
    const double den = n.dot(direction);
    if (std::abs(den) < 1e-15)
      return;
    const double t = (offset - n.dot(origin)) / den;
    if (t > kEps && t < best)
    {
      best = t;
      best_kind = kind;
      best_index = index;
    }
  };
  try_plane(Eigen::Vector3d::UnitZ(), scene.background_depth, 0, 0);
  for (std::size_t i = 0; i < scene.planes.size(); ++i)
    try_plane(scene.planes[i].normal, scene.planes[i].offset, 1, static_cast<int>(i));

  for (std::size_t i = 0; i < scene.boxes.size(); ++i)
  {
    const Box& b = scene.boxes[i];
    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    int axis = -1;
    bool miss = false;
    for (int k = 0; k < 3 && !miss; ++k)
    {
      const double lo = b.center(k) - 0.5 * b.size(k), hi = b.center(k) + 0.5 * b.size(k);
      if (std::abs(direction(k)) < 1e-15)
      {
        if (origin(k) < lo || origin(k) > hi)
          miss = true;
        continue;
      }
      double t0 = (lo - origin(k)) / direction(k), t1 = (hi - origin(k)) / direction(k);
      if (t0 > t1)
        std::swap(t0, t1);
      if (t0 > t_enter)
      {
        t_enter = t0;
        axis = k;
      }
      t_exit = std::min(t_exit, t1);
    }
    if (miss || axis < 0 || t_enter > t_exit || !(t_enter > kEps))
      continue;
    if (t_enter < best)
    {
      best = t_enter;
      best_kind = 2;
      best_index = static_cast<int>(i);
      best_axis = axis;
    }
  }
  if (best_kind < 0)
    return false;
  distance = best;
  if (object)
    *object = best_kind == 2 ? best_index + 1 : 0;
  if (surface)
  {
    const int planes = static_cast<int>(scene.planes.size());
    if (best_kind == 0)
      *surface = 0;
    else if (best_kind == 1)
      *surface = 1 + best_index;
    else
    {
      const bool upper = direction(best_axis) < 0.0;
      *surface = 1 + planes + 6 * best_index + 2 * best_axis + (upper ? 1 : 0);
    }
  }
  if (color)
  {
    const Eigen::Vector3d x = origin + best * direction;
    if (best_kind == 0)
      *color = scene.background_texture.Color(x) * Shade(Eigen::Vector3d::UnitZ(), scene.light);
    else if (best_kind == 1)
    {
      const TexturedPlane& p = scene.planes[best_index];
      *color = p.texture.Color(x) * Shade(p.normal, scene.light);
    }
    else
    {
      const Box& b = scene.boxes[best_index];
      *color = b.texture.Color(x - b.center) * Shade(Eigen::Vector3d::Unit(best_axis), scene.light);
    }
  }
  return true;
}

RenderResult Render(const Scene& scene, const CameraIntrinsics& K, const PoseSE3& pose, int supersample)
{
  K.Validate();
  pose.Validate(1e-6);
  if (supersample < 1)
    throw InvalidArgument("Render: supersample must be >= 1");
  const int h = K.height, w = K.width;
  RenderResult out;
  out.image = ImageBuffer(h, w);
  out.depth = DepthMap::Zero(h, w);
  out.object.setZero(h, w);
  out.surface.setZero(h, w);
  const Eigen::Matrix3d rt = pose.R.transpose();
  const Eigen::Vector3d origin = -rt * pose.t;
  auto ray = [&](double u, double v) {
    return Eigen::Vector3d(rt * Eigen::Vector3d((u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0));
  };
  const int n = supersample;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      double t;
      int object = 0, surface = 0;
      Eigen::Vector3d color;
      if (!CastRay(scene, origin, ray(u, v), t, &color, &object, &surface))
        throw Error("Render: camera ray missed the background; the camera faces away from it");
      out.depth(v, u) = t;
      out.object(v, u) = object;
      out.surface(v, u) = surface;
      if (n > 1)
      {
        color.setZero();
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
          {
            const double du = (j + 0.5) / n - 0.5, dv = (i + 0.5) / n - 0.5;
            double ts;
            Eigen::Vector3d cs;
            if (CastRay(scene, origin, ray(u + du, v + dv), ts, &cs))
              color += cs;
          }
        color /= static_cast<double>(n * n);
      }
      for (int c = 0; c < 3; ++c)
        out.image.channels[c](v, u) = std::clamp(color(c), 0.0, 1.0);
    }
  return out;
}

Mask SurfaceInterior(const RenderResult& render, int radius)
{
  if (radius < 0)
    throw InvalidArgument("SurfaceInterior: radius must be >= 0");
  const auto& s = render.surface;
  const int h = static_cast<int>(s.rows()), w = static_cast<int>(s.cols());
  Mask out = Mask::Constant(h, w, false);
  for (int v = radius; v < h - radius; ++v)
    for (int u = radius; u < w - radius; ++u)
      out(v, u) = (s.block(v - radius, u - radius, 2 * radius + 1, 2 * radius + 1) == s(v, u)).all();
  return out;
}

PointCloud SimulateLidar(const Scene& scene, const PoseSE3& sensor_to_world, const std::vector<double>& elevations,
                         double azimuth_step, double max_range, double range_noise, std::uint64_t noise_seed)
{
  if (elevations.empty())
    throw InvalidArgument("SimulateLidar: at least one elevation is required");
  if (!(azimuth_step > 0.0) || !(max_range > 0.0) || range_noise < 0.0)
    throw InvalidArgument("SimulateLidar: azimuth step and range must be positive");
  const int per_ring = static_cast<int>(std::ceil(2.0 * std::numbers::pi / azimuth_step - 1e-9));
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, range_noise > 0.0 ? range_noise : 1.0);
  std::vector<std::array<double, 4>> points;
  points.reserve(elevations.size() * per_ring);
  for (double el : elevations)
    for (int i = 0; i < per_ring; ++i)
    {
      const double az = i * azimuth_step;
      const Eigen::Vector3d d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      double range;
      Eigen::Vector3d color;
      if (!CastRay(scene, sensor_to_world.t, sensor_to_world.R * d, range, &color))
        continue;
      if (range_noise > 0.0)
        range = std::max(range + noise(rng), 1e-3);
      if (range > max_range)
        continue;
      const Eigen::Vector3d p = range * d;
      points.push_back({p.x(), p.y(), p.z(), color.mean()});
    }
  PointCloud::Storage data(static_cast<Eigen::Index>(points.size()), 4);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (int c = 0; c < 4; ++c)
      data(static_cast<Eigen::Index>(i), c) = points[i][c];
  return PointCloud(std::move(data));
}

std::vector<double> KittiElevations()
{
  constexpr double deg = std::numbers::pi / 180.0;
  std::vector<double> out;
  for (int i = 0; i < 32; ++i)
    out.push_back((2.0 - i / 3.0) * deg);
  for (int i = 0; i < 32; ++i)
    out.push_back((-8.0 - 5.0 / 6.0 - 0.5 * i) * deg);
  return out;
}

FrameTriplet MakeTriplet(const Scene& scene, const CameraIntrinsics& K, const Eigen::Vector3d& ego_motion,
                         const LidarSpec& lidar, int supersample)
{
  if (!(ego_motion.norm() > 0.0))
    throw InvalidArgument("MakeTriplet: ego motion must be non-zero");
  if (lidar.keep_every < 1)
    throw InvalidArgument("MakeTriplet: keep_every must be >= 1");
  FrameTriplet out;
  out.K = K;
  for (int frame : {0, -1, 1})
  {
    const PoseSE3 world_to_camera(Eigen::Matrix3d::Identity(), -static_cast<double>(frame) * ego_motion);
    RenderResult r = Render(AdvanceScene(scene, frame), K, world_to_camera, supersample);
    if (frame == 0)
    {
      out.target = r.image;
      out.target_depth = std::move(r.depth);
      for (std::size_t i = 0; i < scene.boxes.size(); ++i)
        out.box_masks.push_back(r.object == static_cast<int>(i) + 1);
      out.target_interior = SurfaceInterior(r, 2);
    }
    else
    {
      out.sources.push_back(std::move(r.image));
      out.source_depths.push_back(std::move(r.depth));
      out.poses.push_back(world_to_camera);
    }
  }
  out.lidar_to_camera = LidarToCameraExtrinsics(lidar.sensor_in_camera);
  out.cloud = SimulateLidar(scene, out.lidar_to_camera, lidar.elevations, lidar.azimuth_step, lidar.max_range,
                            lidar.range_noise, lidar.noise_seed);
  const PointCloud kept = SubsampleBeams(SegmentBeams(out.cloud), lidar.keep_every);
  out.lidar = ProjectPointCloud(kept, out.lidar_to_camera, K);
  return out;
}

SynthConfig ParseSynthConfig(const std::string& text, std::optional<std::uint64_t> seed_override)
{
  SynthConfig cfg;
  double background_depth = 20.0, camera_height = 1.65, half_width = 15.0, back_distance = 20.0,
         texture_scale = 2.0;
  bool street = true;
  std::vector<Box> boxes;
  std::vector<bool> box_has_texture;
  bool in_box = false;
  int box_start = 0;

  std::istringstream lines(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(lines, raw))
  {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos)
      raw.erase(hash);
    std::istringstream in(raw);
    std::string key;
    if (!(in >> key))
      continue;
    auto one = [&]() { return ReadNumbers(in, 1, line_no, key)[0]; };
    auto vec3 = [&]() {
      const auto v = ReadNumbers(in, 3, line_no, key);
      return Eigen::Vector3d(v[0], v[1], v[2]);
    };
    auto integer = [&](double lo) {
      const double v = one();
      if (v != std::floor(v) || v < lo)
        ConfigError(line_no, "'" + key + "' expects an integer >= " + std::to_string(static_cast<long>(lo)));
      return v;
    };

    if (in_box)
    {
      Box& b = boxes.back();
      if (key == "end")
      {
        std::string extra;
        if (in >> extra)
          ConfigError(line_no, "unexpected text after 'end'");
        if ((b.size.array() <= 0.0).any())
          ConfigError(line_no, "box size must be positive");
        in_box = false;
      }
      else if (key == "center")
        b.center = vec3();
      else if (key == "size")
        b.size = vec3();
      else if (key == "velocity")
        b.velocity = vec3();
      else if (key == "texture_seed")
      {
        b.texture.seed = static_cast<std::uint64_t>(integer(0));
        box_has_texture.back() = true;
      }
      else if (key == "texture_scale")
      {
        b.texture.scale = Eigen::Vector3d::Constant(one());
        if (!(b.texture.scale.x() > 0.0))
          ConfigError(line_no, "texture_scale must be positive");
      }
      else
        ConfigError(line_no, "unknown box key '" + key + "'");
      continue;
    }

    if (key == "box")
    {
      std::string extra;
      if (in >> extra)
        ConfigError(line_no, "unexpected text after 'box'");
      boxes.emplace_back();
      boxes.back().texture.scale = Eigen::Vector3d::Constant(0.8);
      box_has_texture.push_back(false);
      in_box = true;
      box_start = line_no;
    }
    else if (key == "end")
      ConfigError(line_no, "'end' outside a box stanza");
    else if (key == "seed")
      cfg.seed = static_cast<std::uint64_t>(integer(0));
    else if (key == "width")
      cfg.width = static_cast<int>(integer(2));
    else if (key == "height")
      cfg.height = static_cast<int>(integer(2));
    else if (key == "supersample")
      cfg.supersample = static_cast<int>(integer(1));
    else if (key == "ego_motion")
      cfg.ego_motion = vec3();
    else if (key == "background_depth")
      background_depth = one();
    else if (key == "camera_height")
      camera_height = one();
    else if (key == "half_width")
      half_width = one();
    else if (key == "back_distance")
      back_distance = one();
    else if (key == "texture_scale")
      texture_scale = one();
    else if (key == "street")
      street = integer(0) != 0.0;
    else if (key == "lidar_keep_every")
      cfg.lidar.keep_every = static_cast<int>(integer(1));
    else if (key == "lidar_azimuth_step_deg")
    {
      cfg.lidar.azimuth_step = one() * std::numbers::pi / 180.0;
      if (!(cfg.lidar.azimuth_step > 0.0))
        ConfigError(line_no, "lidar_azimuth_step_deg must be positive");
    }
    else if (key == "lidar_range_noise")
      cfg.lidar.range_noise = one();
    else if (key == "lidar_max_range")
      cfg.lidar.max_range = one();
    else if (key == "lidar_position")
      cfg.lidar.sensor_in_camera = vec3();
    else
      ConfigError(line_no, "unknown key '" + key + "'");
  }
  if (in_box)
    ConfigError(box_start, "box stanza is missing 'end'");
  if (seed_override)
    cfg.seed = *seed_override;

  try
  {
    if (street)
      cfg.scene = Scene::Street(cfg.seed, background_depth, camera_height, half_width, back_distance, texture_scale);
    else
    {
      if (!(background_depth > 0.0))
        throw InvalidArgument("background_depth must be positive");
      cfg.scene = Scene();
      cfg.scene.background_depth = background_depth;
      cfg.scene.background_texture.seed = cfg.seed;
      cfg.scene.background_texture.scale = Eigen::Vector3d::Constant(texture_scale);
    }
  }
  catch (const InvalidArgument& e)
  {
    throw FormatError(std::string("scene config: ") + e.what());
  }
  cfg.lidar.noise_seed = cfg.seed;
  for (std::size_t i = 0; i < boxes.size(); ++i)
    if (!box_has_texture[i])
      boxes[i].texture.seed = SplitMix(cfg.seed ^ SplitMix(100 + i));
  cfg.scene.boxes = std::move(boxes);
  return cfg;
}

} // namespace fewbeam
