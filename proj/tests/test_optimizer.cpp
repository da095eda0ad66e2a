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
#include "fewbeam/synthetic.hpp"
#include "gradient_check.hpp"

#include <doctest.h>

#include <algorithm>

using namespace fewbeam;

namespace
{
double MedianRatio(const DepthMap& a, const DepthMap& b, const Mask& use)
{
  std::vector<double> r;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (use.data()[i])
      r.push_back(a.data()[i] / b.data()[i]);
  std::nth_element(r.begin(), r.begin() + r.size() / 2, r.end());
  return r[r.size() / 2];
}

struct SmallScene
{
  CameraIntrinsics K = CameraIntrinsics::KittiLike(160, 48);
  FrameTriplet triplet = MakeTriplet(Scene::Street(3, 15.0), K, {0, 0, 1}, LidarSpec{});
};

const SmallScene& Fixture()
{
  static const SmallScene s;
  return s;
}
} // namespace

TEST_CASE("zero steps return the decoded initialization")
{
  const SmallScene& s = Fixture();
  OptimizeConfig cfg;
  cfg.steps = 0;
  cfg.initial_depth = 12.5;
  const OptimizeResult r =
    OptimizeDepth(s.triplet.target, s.triplet.sources, s.triplet.lidar, s.K, s.triplet.poses, cfg);
  CHECK((r.depth - 12.5).abs().maxCoeff() < 1e-9);
  REQUIRE(r.trace.records.size() == 1);
  CHECK(r.trace.records[0].step == 0);
}

TEST_CASE("apply_pose_scaling")
{
  const std::vector<PoseSE3> poses{PoseSE3::FromAxisAngle({0.01, 0, 0}, {0, 0, 5}),
                                   PoseSE3(Eigen::Matrix3d::Identity(), {1, -2, 3})};
  const ScaledPoses one = ApplyPoseScaling(poses, 1.0);
  CHECK(one.depth_multiplier == 1.0);
  CHECK(one.poses[1].t == poses[1].t);
  const ScaledPoses ten = ApplyPoseScaling(poses, 10.0);
  CHECK(ten.depth_multiplier == 10.0);
  CHECK((ten.poses[0].t - Eigen::Vector3d(0, 0, 0.5)).norm() < 1e-15);
  CHECK(ten.poses[0].R == poses[0].R);

  // Depth d/alpha under the scaled pose projects like d under the original.
  const CameraIntrinsics K = CameraIntrinsics::KittiLike(64, 32);
  const Projection a = ProjectPoint(K, poses[1], 7.0, {10, 20});
  const Projection b = ProjectPoint(K, ApplyPoseScaling(poses, 10.0).poses[1], 0.7, {10, 20});
  CHECK(std::abs(a.pixel.u - b.pixel.u) < 1e-12);
  CHECK(std::abs(a.pixel.v - b.pixel.v) < 1e-12);
  CHECK_THROWS_AS(ApplyPoseScaling(poses, 0.0), InvalidArgument);
}

TEST_CASE("optimize config validation")
{
  OptimizeConfig c;
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.Validate(), InvalidArgument);
  c = OptimizeConfig{};
  c.initial_depth = 500;
  CHECK_THROWS_AS(c.Validate(), InvalidArgument);
  CHECK(ParsePoseSource("pnp") == PoseSource::PnP);
  CHECK_THROWS_AS(ParsePoseSource("imu"), InvalidArgument);
  const SmallScene& s = Fixture();
  OptimizeConfig ok;
  ok.steps = 1;
  CHECK_THROWS_AS(OptimizeDepth(s.triplet.target, {}, s.triplet.lidar, s.K, {}, ok), InvalidArgument);
}

TEST_CASE("masked supervision converges to the LiDAR values")
{
  const SmallScene& s = Fixture();
  OptimizeConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.steps = 200;
  cfg.loss.multiscale_levels = 4;
  cfg.loss.lidar_variant = LidarVariant::Masked;
  const OptimizeResult r =
    OptimizeDepth(s.triplet.target, s.triplet.sources, s.triplet.lidar, s.K, s.triplet.poses, cfg);
  const Mask on_lidar = s.triplet.lidar > 0.0;
  CHECK(MedianRatio(r.depth, s.triplet.lidar, on_lidar) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(r.depth.minCoeff() >= DepthField::kMinDepth);
  CHECK(r.depth.maxCoeff() <= DepthField::kMaxDepth);

  const auto& rec = r.trace.records;
  for (std::size_t i = 1; i < rec.size(); ++i)
    CHECK(rec[i].step > rec[i - 1].step);
  CHECK(rec.back().step == 200);
  CHECK(rec[150].learning_rate == 0.025);
}

namespace
{
// Largest ratio between the total loss 50 steps later and now.
double WorstWindowRise(const LossTrace& trace)
{
  double worst = 0.0;
  for (std::size_t i = 0; i + 50 < trace.records.size(); ++i)
    worst = std::max(worst, trace.records[i + 50].terms.total / trace.records[i].terms.total);
  return worst;
}
} // namespace

TEST_CASE("loss trace does not rise over 50-step windows")
{
  const SmallScene& s = Fixture();
  OptimizeConfig defaults;
  defaults.loss.lidar_variant = LidarVariant::Masked;
  CHECK(WorstWindowRise(OptimizeDepth(s.triplet.target, s.triplet.sources, s.triplet.lidar, s.K,
                                      s.triplet.poses, defaults)
                          .trace) < 1.05);

  OptimizeConfig fast;
  fast.learning_rate = 0.05;
  fast.steps = 200;
  fast.loss.multiscale_levels = 4;
  CHECK(WorstWindowRise(
          OptimizeDepth(s.triplet.target, s.triplet.sources, SparseDepthImage(), s.K, s.triplet.poses, fast)
            .trace) < 1.05);
}

TEST_CASE("photometric-only final loss is invariant under joint pre-scaling")
{
  const SmallScene& s = Fixture();
  auto final_loss = [&](double scale) {
    OptimizeConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.steps = 60;
    cfg.initial_depth = 10.0 * scale;
    std::vector<PoseSE3> poses;
    for (const PoseSE3& p : s.triplet.poses)
      poses.emplace_back(p.R, scale * p.t);
    return OptimizeDepth(s.triplet.target, s.triplet.sources, SparseDepthImage(), s.K, poses, cfg)
      .trace.records.back()
      .terms.total;
  };
  const double base = final_loss(1.0);
  CHECK(std::abs(final_loss(2.0) - base) <= 1e-4);
  CHECK(std::abs(final_loss(0.5) - base) <= 1e-4);
}

TEST_CASE("multiscale spreads the LiDAR gradient to more parameters")
{
  const FrameInputs in = testing::RandomProblem(4, 32);
  auto supervised = [&](int levels) {
    LossConfig cfg;
    cfg.photometric_weight = 0.0;
    cfg.smooth_weight = 0.0;
    cfg.lidar_variant = LidarVariant::Masked;
    cfg.multiscale_levels = levels;
    const LossEvaluation e = Objective(in, cfg).Evaluate(DepthField(32, 32, levels, 20.0));
    Eigen::Index count = 0;
    for (const Plane& g : e.gradient)
      count += (g != 0.0).count();
    return count;
  };
  const Eigen::Index single = supervised(1);
  CHECK(single == (in.lidar > 0.0).count());
  CHECK(supervised(4) > single);
}

TEST_CASE("pnp pose source recovers a metric pose")
{
  const SmallScene& s = Fixture();
  OptimizeConfig cfg;
  cfg.steps = 0;
  cfg.pose_source = PoseSource::PnP;
  const OptimizeResult r = OptimizeDepth(s.triplet.target, s.triplet.sources, s.triplet.lidar, s.K, {}, cfg);
  REQUIRE(r.poses.size() == 2);
  for (const PoseSE3& p : r.poses)
    CHECK(p.t.norm() == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("without the box both supervisions agree on the static scene")
{
  InfiniteDepthConfig cfg;
  cfg.width = 160;
  cfg.height = 48;
  cfg.include_box = false;
  cfg.optimize.learning_rate = 0.05;
  cfg.optimize.steps = 150;
  cfg.optimize.loss.multiscale_levels = 4;
  const InfiniteDepthResult r = RunInfiniteDepthScenario(cfg);
  CHECK_FALSE(r.has_box);
  const Mask all = Mask::Constant(r.ground_truth.rows(), r.ground_truth.cols(), true);
  CHECK(MedianRatio(r.photometric_only, r.lidar_masked, all) == doctest::Approx(1.0).epsilon(0.05));
}
