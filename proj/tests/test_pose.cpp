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

#include "fewbeam/pose.hpp"
#include "pnp_fixture.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace fewbeam;

namespace
{
double Median(std::vector<double> x)
{
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

// Blocky random texture with strong corners.
ImageBuffer Checkers(int h, int w, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.05, 0.95);
  const int cell = 4;
  Plane gray(h, w);
  std::vector<double> cells(((h + cell - 1) / cell) * ((w + cell - 1) / cell));
  for (double& c : cells)
    c = U(rng);
  const int cols = (w + cell - 1) / cell;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      gray(v, u) = cells[(v / cell) * cols + u / cell];
  return ImageBuffer::FromGray(gray);
}
} // namespace

TEST_CASE("detect_and_match")
{
  const ImageBuffer t = Checkers(48, 64, 1);
  const auto same = DetectAndMatch(t, t);
  REQUIRE_FALSE(same.empty());
  for (const Match& m : same)
  {
    // Integer peak at zero displacement; parabolic refinement stays inside the pixel.
    CHECK(std::abs(m.source.u - m.target.u) < 0.5);
    CHECK(std::abs(m.source.v - m.target.v) < 0.5);
    CHECK(m.score == doctest::Approx(1.0));
  }

  ImageBuffer s(48, 64);
  for (int c = 0; c < 3; ++c)
    for (int v = 0; v < 48; ++v)
      for (int u = 0; u < 64; ++u)
        s.channels[c](v, u) = t.channels[c](v, std::max(u - 3, 0));
  const auto shifted = DetectAndMatch(t, s);
  REQUIRE(shifted.size() >= 10);
  std::vector<double> du, dv;
  for (const Match& m : shifted)
  {
    du.push_back(m.source.u - m.target.u);
    dv.push_back(m.source.v - m.target.v);
  }
  CHECK(std::abs(Median(du) - 3.0) <= 0.5);
  CHECK(std::abs(Median(dv)) <= 0.5);

  CHECK(DetectAndMatch(ImageBuffer(32, 32, 0.5), ImageBuffer(32, 32, 0.5)).empty());
  CHECK_THROWS_AS(DetectAndMatch(t, ImageBuffer(48, 63, 0.5)), InvalidArgument);
}

TEST_CASE("attach_depth")
{
  std::vector<Match> matches;
  for (int i = 0; i < 10; ++i)
    matches.push_back({{i + 0.3, 2.0}, {i + 1.0, 2.0}, 1.0});
  CHECK(AttachDepth(matches, SparseDepthImage::Zero(5, 12)).empty());
  CHECK(AttachDepth(matches, SparseDepthImage::Constant(5, 12, 8.0)).size() == 10);
  SparseDepthImage h = SparseDepthImage::Zero(5, 12);
  for (int u : {0, 3, 4, 9})
    h(2, u) = 1.0 + u;
  const CorrespondenceSet c = AttachDepth(matches, h);
  REQUIRE(c.size() == 4);
  CHECK(c[1].depth == 4.0);
  CHECK(c[1].target.u == doctest::Approx(3.3));
}

TEST_CASE("solve_pnp on exact data")
{
  const CameraIntrinsics K = testing::KittiRawIntrinsics();
  for (std::uint64_t seed = 0; seed < 10; ++seed)
  {
    const auto p = testing::MakePnPProblem(seed, K, 40, 0, 0.0);
    const PoseSE3 est = SolvePnP(p.corr, K);
    CHECK(RotationAngle(est.R, p.pose.R) < 1e-6);
    CHECK((est.t - p.pose.t).norm() < 1e-6);
  }
  // Identity.
  auto p = testing::MakePnPProblem(3, K, 20, 0, 0.0);
  for (auto& c : p.corr)
    c.source = c.target;
  const PoseSE3 id = SolvePnP(p.corr, K);
  CHECK(RotationAngle(id.R, Eigen::Matrix3d::Identity()) < 1e-9);
  CHECK(id.t.norm() < 1e-9);

  p.corr.resize(5);
  CHECK_THROWS_AS(SolvePnP(p.corr, K), NonConvergence);
}

TEST_CASE("solve_pnp is covariant and metric")
{
  const CameraIntrinsics K = testing::KittiRawIntrinsics();
  const auto p = testing::MakePnPProblem(11, K, 50, 0, 0.0);

  // Rotating the target frame by Q conjugates the pose: R' = R Q^T, t' = t.
  const Eigen::Matrix3d Q = PoseSE3::FromAxisAngle({0.02, -0.03, 0.01}, Eigen::Vector3d::Zero()).R;
  CorrespondenceSet rotated;
  for (const auto& c : p.corr)
  {
    const Eigen::Vector3d X = c.depth * Eigen::Vector3d((c.target.u - K.cx) / K.fx, (c.target.v - K.cy) / K.fy, 1);
    const Eigen::Vector3d Y = Q * X;
    rotated.push_back({{K.fx * Y.x() / Y.z() + K.cx, K.fy * Y.y() / Y.z() + K.cy}, Y.z(), c.source});
  }
  const PoseSE3 r = SolvePnP(rotated, K);
  CHECK(RotationAngle(r.R, p.pose.R * Q.transpose()) < 1e-6);
  CHECK((r.t - p.pose.t).norm() < 1e-6);

  // Depth scale s scales the translation by s.
  CorrespondenceSet scaled = p.corr;
  for (auto& c : scaled)
    c.depth *= 2.5;
  const PoseSE3 base = SolvePnP(p.corr, K);
  // Observations must stay consistent, so rebuild them from the scaled geometry.
  const PoseSE3 scaled_gt(p.pose.R, 2.5 * p.pose.t);
  for (auto& c : scaled)
  {
    const Eigen::Vector3d X = c.depth * Eigen::Vector3d((c.target.u - K.cx) / K.fx, (c.target.v - K.cy) / K.fy, 1);
    const Eigen::Vector3d Y = scaled_gt * X;
    c.source = {K.fx * Y.x() / Y.z() + K.cx, K.fy * Y.y() / Y.z() + K.cy};
  }
  const PoseSE3 s = SolvePnP(scaled, K);
  CHECK(s.t.norm() == doctest::Approx(2.5 * base.t.norm()).epsilon(1e-8));
}

TEST_CASE("pnp_ransac")
{
  const CameraIntrinsics K = testing::KittiRawIntrinsics();
  const auto clean = testing::MakePnPProblem(21, K, 60, 0, 0.0);
  const PnPResult a = PnPRansac(clean.corr, K);
  CHECK(a.num_inliers == 60);
  CHECK(RotationAngle(a.pose.R, clean.pose.R) < 1e-6);
  CHECK((a.pose.t - clean.pose.t).norm() < 1e-6);

  const auto noisy = testing::MakePnPProblem(22, K, 100, 30, 0.5);
  const PnPResult b = PnPRansac(noisy.corr, K, {100, 2.0, 5});
  CHECK(RotationAngle(b.pose.R, noisy.pose.R) * 180 / M_PI < 0.5);
  CHECK((b.pose.t - noisy.pose.t).norm() < 0.01 * noisy.pose.t.norm());
  int flagged = 0;
  for (std::size_t i = 0; i < noisy.corr.size(); ++i)
    flagged += noisy.outlier[i] && !b.inliers[i];
  CHECK(flagged >= 28);
  CHECK(b.refined_rms <= b.hypothesis_rms);

  // Same seed, same answer, bit for bit.
  const PnPResult c = PnPRansac(noisy.corr, K, {100, 2.0, 5});
  CHECK(c.pose.R == b.pose.R);
  CHECK(c.pose.t == b.pose.t);
  CHECK(c.inliers == b.inliers);

  // 90% outliers: failing to converge is an accepted outcome.
  const auto hopeless = testing::MakePnPProblem(23, K, 100, 90, 0.5);
  try
  {
    const PnPResult d = PnPRansac(hopeless.corr, K);
    CHECK(d.num_inliers >= 6);
  }
  catch (const NonConvergence&)
  {
  }
}

TEST_CASE("p3p returns the generating pose")
{
  const PoseSE3 gt = PoseSE3::FromAxisAngle({0.1, -0.05, 0.2}, {0.3, -0.2, 1.0});
  const std::array<Eigen::Vector3d, 3> X{Eigen::Vector3d(1, 0.5, 6), Eigen::Vector3d(-1, 0.2, 8),
                                         Eigen::Vector3d(0.3, -1, 5)};
  std::array<Eigen::Vector3d, 3> b;
  for (int i = 0; i < 3; ++i)
    b[i] = (gt * X[i]).normalized();
  const auto sols = SolveP3P(X, b);
  bool found = false;
  for (const PoseSE3& s : sols)
    found = found || (RotationAngle(s.R, gt.R) < 1e-8 && (s.t - gt.t).norm() < 1e-8);
  CHECK(found);
}

TEST_CASE("filter_by_translation_median")
{
  CHECK(FilterByTranslationMedian({2, 2, 2, 2}) == std::vector<bool>{true, true, true, true});
  CHECK(FilterByTranslationMedian({1, 1, 1, 1, 10}, 3.0) == std::vector<bool>{true, true, true, true, false});
  CHECK(FilterByTranslationMedian({7.5}) == std::vector<bool>{true});
  CHECK(FilterByTranslationMedian({1, 3, 1}, 3.0) == std::vector<bool>{true, true, true});
  CHECK_THROWS_AS(FilterByTranslationMedian({}), InvalidArgument);
}
