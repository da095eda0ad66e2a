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

#include "fewbeam/optimizer.hpp"

#include "fewbeam/eval.hpp"
#include "fewbeam/lidar.hpp"
#include "fewbeam/synthetic.hpp"

#include <cmath>
#include <random>

namespace fewbeam
{

std::string ToString(PoseSource source) { return source == PoseSource::Given ? "given" : "pnp"; }

PoseSource ParsePoseSource(const std::string& name)
{
  if (name == "given" || name == "gt")
    return PoseSource::Given;
  if (name == "pnp" || name == "PnP")
    return PoseSource::PnP;
  throw InvalidArgument("unknown pose source '" + name + "' (expected given or pnp)");
}

void OptimizeConfig::Validate() const
{
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("OptimizeConfig: learning rate must be positive");
  if (steps < 0)
    throw InvalidArgument("OptimizeConfig: steps must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_epsilon > 0.0))
    throw InvalidArgument("OptimizeConfig: invalid Adam hyper-parameters");
  if (!(initial_depth >= DepthField::kMinDepth && initial_depth <= DepthField::kMaxDepth))
    throw InvalidArgument("OptimizeConfig: initial depth outside the representable range");
  if (!(pose_scale_divisor > 0.0) || !std::isfinite(pose_scale_divisor))
    throw InvalidArgument("OptimizeConfig: pose scale divisor must be positive");
  if (dilation_kernel < 1 || dilation_iterations < 0)
    throw InvalidArgument("OptimizeConfig: invalid dilation settings");
  if (ransac.iterations < 1 || !(ransac.reprojection_threshold > 0.0))
    throw InvalidArgument("OptimizeConfig: invalid RANSAC settings");
  loss.Validate();
}

ScaledPoses ApplyPoseScaling(const std::vector<PoseSE3>& poses, double divisor)
{
  if (!(divisor > 0.0) || !std::isfinite(divisor))
    throw InvalidArgument("ApplyPoseScaling: divisor must be positive");
  ScaledPoses out;
  out.depth_multiplier = divisor;
  for (const PoseSE3& p : poses)
    out.poses.emplace_back(p.R, p.t / divisor);
  return out;
}

OptimizeResult OptimizeDepth(const ImageBuffer& target, const std::vector<ImageBuffer>& sources,
                             const SparseDepthImage& lidar, const CameraIntrinsics& K,
                             const std::vector<PoseSE3>& poses, const OptimizeConfig& config)
{
  config.Validate();
  if (sources.empty())
    throw InvalidArgument("OptimizeDepth: at least one source image is required");
  const bool has_lidar = lidar.size() > 0;
  if (has_lidar)
    ValidateSparseDepth(lidar);

  OptimizeResult result;
  std::vector<PoseSE3> used;
  if (config.pose_source == PoseSource::PnP)
  {
    if (!has_lidar)
      throw InvalidArgument("OptimizeDepth: PnP poses need a LiDAR image");
    for (const ImageBuffer& s : sources)
      used.push_back(EstimatePose(target, s, lidar, K, config.ransac).pose);
  }
  else
  {
    if (poses.size() != sources.size())
      throw InvalidArgument("OptimizeDepth: one pose per source is required");
    used = poses;
  }
  const ScaledPoses scaled = ApplyPoseScaling(used, config.pose_scale_divisor);
  result.poses = used;

  FrameInputs inputs;
  inputs.K = K;
  inputs.target = target;
  inputs.sources = sources;
  inputs.poses = scaled.poses;
  if (has_lidar)
  {
    SparseDepthImage supervision = lidar / scaled.depth_multiplier;
    if (config.dilation_iterations > 0)
      supervision = DilateSparseDepth(supervision, config.dilation_kernel, config.dilation_iterations);
    inputs.lidar = std::move(supervision);
  }
  const Objective objective(std::move(inputs), config.loss);

  DepthField field(K.height, K.width, config.loss.multiscale_levels,
                   std::clamp(config.initial_depth / scaled.depth_multiplier, DepthField::kMinDepth,
                              DepthField::kMaxDepth));
  std::vector<Plane> m = field.ZeroGradient(), v = field.ZeroGradient();
  double b1t = 1.0, b2t = 1.0;
  for (int step = 0; step < config.steps; ++step)
  {
    double lr = config.learning_rate;
    if (config.halve_at_midpoint && step >= config.steps / 2 && config.steps > 1)
      lr *= 0.5;
    const LossEvaluation eval = objective.Evaluate(field, true);
    result.trace.records.push_back({step, lr, eval.terms});
    if (!std::isfinite(eval.terms.total))
      throw DivergenceError("OptimizeDepth: non-finite loss at step " + std::to_string(step), result.trace);
    b1t *= config.beta1;
    b2t *= config.beta2;
    for (int k = 0; k < field.Levels(); ++k)
    {
      const Plane& g = eval.gradient[k];
      if (!g.allFinite())
        throw DivergenceError("OptimizeDepth: non-finite gradient at step " + std::to_string(step),
                              result.trace);
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g.square();
      field.Level(k) -= lr * (m[k] / (1.0 - b1t)) / ((v[k] / (1.0 - b2t)).sqrt() + config.adam_epsilon);
    }
  }
  const LossEvaluation final_eval = objective.Evaluate(field, false);
  result.trace.records.push_back({config.steps, 0.0, final_eval.terms});
  if (!std::isfinite(final_eval.terms.total))
    throw DivergenceError("OptimizeDepth: non-finite final loss", result.trace);
  result.depth = field.Decode(0) * scaled.depth_multiplier;
  return result;
}

InfiniteDepthResult RunInfiniteDepthScenario(const InfiniteDepthConfig& config)
{
  if (!(config.speed > 0.0))
    throw InvalidArgument("RunInfiniteDepthScenario: speed must be positive");
  if (!(config.min_distance > 0.0) || config.max_distance < config.min_distance)
    throw InvalidArgument("RunInfiniteDepthScenario: invalid box distance range");

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double distance = config.min_distance + (config.max_distance - config.min_distance) * unit(rng);
  const double lateral = -1.0 + 2.0 * unit(rng);
  const double width = 1.6 + 0.4 * unit(rng);
  const double height = 1.4 + 0.3 * unit(rng);
  const double length = 3.5 + 1.0 * unit(rng);

  Scene scene = Scene::Street(config.seed);
  const double ground = scene.planes.front().offset;
  const Eigen::Vector3d ego(0.0, 0.0, config.speed);
  if (config.include_box)
  {
    Box box;
    box.size = Eigen::Vector3d(width, height, length);
    // The visible rear face sits at `distance`.
    box.center = Eigen::Vector3d(lateral, ground - 0.5 * height, distance + 0.5 * length);
    box.velocity = ego;
    box.texture.seed = config.seed * 7919 + 17;
    box.texture.scale = Eigen::Vector3d::Constant(0.8);
    scene.boxes.push_back(box);
  }
  const CameraIntrinsics K = CameraIntrinsics::KittiLike(config.width, config.height);
  const FrameTriplet triplet = MakeTriplet(scene, K, ego, LidarSpec{});

  InfiniteDepthResult out;
  out.ground_truth = triplet.target_depth;
  out.lidar = triplet.lidar;
  out.box_distance = distance;

  OptimizeConfig photo = config.optimize;
  photo.loss.lidar_variant = LidarVariant::None;
  OptimizeConfig masked = config.optimize;
  masked.loss.lidar_variant = LidarVariant::Masked;
  out.photometric_only =
    OptimizeDepth(triplet.target, triplet.sources, triplet.lidar, K, triplet.poses, photo).depth;
  out.lidar_masked = OptimizeDepth(triplet.target, triplet.sources, triplet.lidar, K, triplet.poses, masked).depth;

  if (config.include_box && triplet.box_masks.front().any())
  {
    out.box_mask = triplet.box_masks.front();
    out.has_box = true;
    out.error_photometric_only = *InstanceSignedError(out.photometric_only, out.ground_truth, out.box_mask);
    out.error_lidar_masked = *InstanceSignedError(out.lidar_masked, out.ground_truth, out.box_mask);
  }
  return out;
}

} // namespace fewbeam
