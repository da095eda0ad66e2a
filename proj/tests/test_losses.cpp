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

#include "fewbeam/losses.hpp"
#include "gradient_check.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace fewbeam;

namespace
{
LossMap Photo(const Plane& values)
{
  return {values, Mask::Constant(values.rows(), values.cols(), true)};
}

WarpResult Perfect(const ImageBuffer& img)
{
  return {img, Mask::Constant(img.Height(), img.Width(), true)};
}
} // namespace

TEST_CASE("ssim")
{
  const ImageBuffer x = testing::RandomTexture(9, 11, 1);
  CHECK((Ssim(x, x) - 1.0).abs().maxCoeff() < 1e-12);

  const Plane s = Ssim(ImageBuffer(6, 6, 0.2), ImageBuffer(6, 6, 0.8));
  const double c1 = 1e-4;
  const double expected = (2 * 0.2 * 0.8 + c1) / (0.04 + 0.64 + c1);
  CHECK((s - expected).abs().maxCoeff() < 1e-12);
  CHECK(expected < 1.0);

  const ImageBuffer y = testing::RandomTexture(9, 11, 2);
  CHECK((Ssim(x, y) - Ssim(y, x)).abs().maxCoeff() == 0.0);
  CHECK(Ssim(x, y).maxCoeff() <= 1.0);
  CHECK(Ssim(x, y).minCoeff() >= -1.0);
  CHECK_THROWS_AS(Ssim(x, ImageBuffer(9, 10, 0.1)), InvalidArgument);
}

TEST_CASE("photometric loss")
{
  const ImageBuffer t = testing::RandomTexture(8, 10, 3);
  CHECK(PhotometricLoss(t, {Perfect(t)}, 0.85).values.abs().maxCoeff() < 1e-12);

  const LossMap two = PhotometricLoss(t, {Perfect(testing::RandomTexture(8, 10, 4)), Perfect(t)}, 0.85);
  CHECK(two.valid.all());
  CHECK(two.values.abs().maxCoeff() < 1e-12);

  ImageBuffer shifted = t;
  for (auto& c : shifted.channels)
    c += 0.1;
  const LossMap l1 = PhotometricLoss(t, {Perfect(shifted)}, 0.0);
  CHECK((l1.values - 0.1).abs().maxCoeff() < 1e-12);

  // Invalid pixels of a source fall back to the other source.
  WarpResult half = Perfect(t);
  half.valid.leftCols(5).setConstant(false);
  const LossMap mixed = PhotometricLoss(t, {half, Perfect(shifted)}, 0.0);
  CHECK(mixed.values.leftCols(5).isApprox(Plane::Constant(8, 5, 0.1)));
  CHECK(mixed.values.rightCols(5).abs().maxCoeff() < 1e-12);

  WarpResult none = Perfect(t);
  none.valid.setConstant(false);
  CHECK_FALSE(PhotometricLoss(t, {none}, 0.5).valid.any());
  CHECK_THROWS_AS(PhotometricLoss(t, {}, 0.85), InvalidArgument);
}

TEST_CASE("automask")
{
  const ImageBuffer t = testing::RandomTexture(8, 10, 5);
  CHECK_FALSE(AutoMask(t, {t, t}, {Perfect(t), Perfect(t)}, 0.85).any());

  // Region where the raw source equals the target (no apparent motion) is
  // rejected; elsewhere the warp is perfect and the raw source differs.
  ImageBuffer raw = testing::RandomTexture(8, 10, 6);
  for (auto& c : raw.channels)
    c.block(2, 2, 4, 4) = t.channels[&c - &raw.channels[0]].block(2, 2, 4, 4);
  WarpResult warped = Perfect(t);
  for (auto& c : warped.image.channels)
    c.block(2, 2, 4, 4) += 0.05;
  const Mask m = AutoMask(t, {raw}, {warped}, 0.0);
  CHECK_FALSE(m.block(2, 2, 4, 4).any());
  CHECK(m.count() >= 80 - 16 - 4);
}

TEST_CASE("lidar loss variants")
{
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int n = 100;
  Plane photo(n, n), hint(n, n), depth(n, n), lidar(n, n);
  for (int i = 0; i < n * n; ++i)
  {
    photo.data()[i] = U(rng);
    hint.data()[i] = U(rng);
    depth.data()[i] = 1 + 50 * U(rng);
    lidar.data()[i] = U(rng) < 0.3 ? 1 + 50 * U(rng) : 0.0;
  }
  const LossMap P = Photo(photo), HP = Photo(hint);
  const Plane zero = Plane::Zero(n, n);
  for (auto v : {LidarVariant::None, LidarVariant::Naive, LidarVariant::Masked, LidarVariant::Hinted})
    CHECK((LidarLoss(depth, zero, P, &HP, v).values == photo).all());

  const LossMap naive = LidarLoss(depth, lidar, P, nullptr, LidarVariant::Naive);
  const LossMap masked = LidarLoss(depth, lidar, P, nullptr, LidarVariant::Masked);
  const LossMap hinted = LidarLoss(depth, lidar, P, &HP, LidarVariant::Hinted);
  for (int i = 0; i < n * n; ++i)
  {
    const double h = lidar.data()[i], p = photo.data()[i], l1 = std::abs(depth.data()[i] - h);
    if (h == 0.0)
    {
      CHECK(naive.values.data()[i] == p);
      CHECK(masked.values.data()[i] == p);
      CHECK(hinted.values.data()[i] == p);
      continue;
    }
    CHECK(naive.values.data()[i] == l1 + p);
    CHECK(masked.values.data()[i] == l1);
    CHECK(naive.values.data()[i] >= masked.values.data()[i]);
    CHECK(hinted.values.data()[i] == (hint.data()[i] < p ? l1 + p : p));
  }

  // Hinted equals naive when the LiDAR-warped loss is always better.
  const Plane strict = photo.max(1e-3);
  const LossMap P2 = Photo(strict), B2 = Photo(strict * 0.5);
  CHECK((LidarLoss(depth, lidar, P2, &B2, LidarVariant::Hinted).values ==
         LidarLoss(depth, lidar, P2, nullptr, LidarVariant::Naive).values)
          .all());

  Plane one_d = Plane::Constant(1, 1, 7.0), one_h = Plane::Constant(1, 1, 5.0);
  CHECK(LidarLoss(one_d, one_h, Photo(Plane::Constant(1, 1, 0.3)), nullptr, LidarVariant::Masked).values(0, 0) ==
        2.0);
  const LossMap hp = Photo(Plane::Constant(1, 1, 0.2));
  CHECK(LidarLoss(one_d, one_h, Photo(Plane::Constant(1, 1, 0.1)), &hp, LidarVariant::Hinted).values(0, 0) == 0.1);
  const LossMap tie = Photo(Plane::Constant(1, 1, 0.1));
  CHECK(LidarLoss(one_d, one_h, Photo(Plane::Constant(1, 1, 0.1)), &tie, LidarVariant::Hinted).values(0, 0) == 0.1);
  CHECK_THROWS_AS(LidarLoss(depth, lidar, P, nullptr, LidarVariant::Hinted), InvalidArgument);
}

TEST_CASE("smoothness")
{
  const ImageBuffer flat(6, 7, 0.5);
  CHECK(SmoothnessLoss(DepthMap::Constant(6, 7, 3.0), flat) == 0.0);

  DepthMap ramp(6, 7);
  for (int v = 0; v < 6; ++v)
    for (int u = 0; u < 7; ++u)
      ramp(v, u) = 2.0 + 0.5 * u;
  ImageBuffer stripes(6, 7);
  for (auto& c : stripes.channels)
    for (int u = 0; u < 7; ++u)
      c.col(u).setConstant(u % 2 ? 0.9 : 0.1);
  CHECK(SmoothnessLoss(ramp, stripes) < SmoothnessLoss(ramp, flat));

  DepthMap d(2, 2);
  d << 1, 2, 1, 2;
  // disparity [1, 0.5], mean 0.75: normalized step 2/3 on both rows, none vertically.
  CHECK(SmoothnessLoss(d, ImageBuffer(2, 2, 0.3)) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("imu pose loss")
{
  const Eigen::Vector3d r(0.3, -1.2, 0.4);
  CHECK(ImuPoseLoss(r, r) == 0.0);
  CHECK(ImuPoseLoss({2, 0, 0}, {0, 3, 0}) == doctest::Approx(1.0));
  CHECK(ImuPoseLoss({1, 0, 0}, {0, 1, 0}) == 0.0);
}

TEST_CASE("objective zero case")
{
  FrameInputs in = testing::RandomProblem(1);
  LossConfig cfg;
  cfg.photometric_weight = 0.0;
  cfg.lidar_weight = 0.0;
  cfg.smooth_weight = 1.0;
  cfg.lidar_variant = LidarVariant::Masked;
  cfg.multiscale_levels = 3;
  const Objective obj(in, cfg);
  const LossEvaluation e = obj.Evaluate(DepthField(16, 16, 3, 7.0));
  CHECK(e.terms.total == 0.0);
  for (const Plane& g : e.gradient)
    CHECK(g.abs().maxCoeff() == 0.0);
}

TEST_CASE("objective gradient matches finite differences")
{
  for (auto variant : {LidarVariant::Naive, LidarVariant::Masked, LidarVariant::Hinted})
    for (int levels : {1, 4})
      for (std::uint64_t seed = 0; seed < 2; ++seed)
      {
        LossConfig cfg;
        cfg.lidar_variant = variant;
        cfg.multiscale_levels = levels;
        cfg.smooth_weight = 0.05;
        const Objective obj(testing::RandomProblem(seed), cfg);
        const testing::GradientCheck r = testing::CheckGradient(obj, testing::RandomField(seed, 16, levels));
        INFO("variant " << ToString(variant) << " levels " << levels << " seed " << seed);
        CHECK(r.relative_error < 1e-4);
        CHECK(r.nonsmooth * 20 <= r.coordinates);
      }
}

TEST_CASE("photometric loss is invariant under joint depth and translation scaling")
{
  FrameInputs in = testing::RandomProblem(9, 20);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(3.0, 9.0);
  DepthMap depth(20, 20);
  for (Eigen::Index i = 0; i < depth.size(); ++i)
    depth.data()[i] = U(rng);
  auto loss = [&](double s) {
    std::vector<WarpResult> warped;
    for (std::size_t k = 0; k < in.sources.size(); ++k)
      warped.push_back(WarpImage(in.sources[k], s * depth, PoseSE3(in.poses[k].R, s * in.poses[k].t), in.K));
    const LossMap l = PhotometricLoss(in.target, warped, 0.85);
    return l.valid.select(l.values, 0.0).eval();
  };
  const Plane base = loss(1.0);
  for (double s : {0.5, 2.0, 4.0})
    CHECK((loss(s) - base).abs().maxCoeff() < 1e-6);
}

TEST_CASE("loss config validation")
{
  LossConfig cfg;
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(cfg.Validate(), InvalidArgument);
  cfg = LossConfig{};
  cfg.multiscale_levels = 5;
  CHECK_THROWS_AS(cfg.Validate(), InvalidArgument);
  cfg = LossConfig{};
  cfg.smooth_weight = -1;
  CHECK_THROWS_AS(cfg.Validate(), InvalidArgument);
  CHECK(ParseLidarVariant("masked") == LidarVariant::Masked);
  CHECK_THROWS_AS(ParseLidarVariant("L4"), InvalidArgument);
}
