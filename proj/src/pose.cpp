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

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace fewbeam
{

namespace
{
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Matrix3d Skew(const Eigen::Vector3d& v)
{
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Vector3d TargetPoint(const Correspondence& c, const CameraIntrinsics& K)
{
  return c.depth * Eigen::Vector3d((c.target.u - K.cx) / K.fx, (c.target.v - K.cy) / K.fy, 1.0);
}

double ReprojectionError(const Eigen::Vector3d& x, const PixelCoord& obs, const CameraIntrinsics& K,
                         const PoseSE3& pose)
{
  const Eigen::Vector3d y = pose * x;
  if (!(y.z() > 0.0))
    return kInf;
  const double du = K.fx * y.x() / y.z() + K.cx - obs.u;
  const double dv = K.fy * y.y() / y.z() + K.cy - obs.v;
  return std::hypot(du, dv);
}

//------------------------------------------------------------------------------
// Feature matching helpers
//------------------------------------------------------------------------------
Plane HarrisResponse(const Plane& img, double k)
{
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  Plane ixx = Plane::Zero(h, w), iyy = Plane::Zero(h, w), ixy = Plane::Zero(h, w);
  for (int v = 1; v + 1 < h; ++v)
    for (int u = 1; u + 1 < w; ++u)
    {
      // Sobel
      const double gx = (img(v - 1, u + 1) + 2.0 * img(v, u + 1) + img(v + 1, u + 1)) -
                        (img(v - 1, u - 1) + 2.0 * img(v, u - 1) + img(v + 1, u - 1));
      const double gy = (img(v + 1, u - 1) + 2.0 * img(v + 1, u) + img(v + 1, u + 1)) -
                        (img(v - 1, u - 1) + 2.0 * img(v - 1, u) + img(v - 1, u + 1));
      ixx(v, u) = gx * gx;
      iyy(v, u) = gy * gy;
      ixy(v, u) = gx * gy;
    }
  Plane r = Plane::Zero(h, w);
  for (int v = 2; v + 2 < h; ++v)
    for (int u = 2; u + 2 < w; ++u)
    {
      const double a = ixx.block(v - 1, u - 1, 3, 3).sum();
      const double b = iyy.block(v - 1, u - 1, 3, 3).sum();
      const double c = ixy.block(v - 1, u - 1, 3, 3).sum();
      r(v, u) = a * b - c * c - k * (a + b) * (a + b);
    }
  return r;
}

// Zero-mean, unit-norm patch; false when the patch is flat.
bool NormalizedPatch(const Plane& img, int v, int u, int r, Eigen::VectorXd& out)
{
  const int side = 2 * r + 1;
  out.resize(side * side);
  int n = 0;
  for (int dv = -r; dv <= r; ++dv)
    for (int du = -r; du <= r; ++du)
      out(n++) = img(v + dv, u + du);
  out.array() -= out.mean();
  const double norm = out.norm();
  if (norm < 1e-9)
    return false;
  out /= norm;
  return true;
}

// Vertex offset of the parabola through (-1, a), (0, b), (1, c).
double ParabolaPeak(double a, double b, double c)
{
  const double den = a - 2.0 * b + c;
  if (std::abs(den) < 1e-12)
    return 0.0;
  return std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
}

//------------------------------------------------------------------------------
// Pose helpers
//------------------------------------------------------------------------------
// Rigid transform mapping points a_i onto b_i in the least-squares sense.
PoseSE3 AlignPoints(const std::array<Eigen::Vector3d, 3>& a, const std::array<Eigen::Vector3d, 3>& b)
{
  const Eigen::Vector3d ca = (a[0] + a[1] + a[2]) / 3.0;
  const Eigen::Vector3d cb = (b[0] + b[1] + b[2]) / 3.0;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i)
    cov += (b[i] - cb) * (a[i] - ca).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0)
    d(2, 2) = -1.0;
  const Eigen::Matrix3d r = svd.matrixU() * d * svd.matrixV().transpose();
  return {r, cb - r * ca};
}

std::vector<double> RealQuarticRoots(const std::array<double, 5>& c)
{
  // c[4] x^4 + c[3] x^3 + c[2] x^2 + c[1] x + c[0]
  std::vector<double> roots;
  int degree = 4;
  while (degree > 0 && std::abs(c[degree]) < 1e-14 * (std::abs(c[0]) + std::abs(c[1]) + std::abs(c[2]) + 1e-300))
    --degree;
  if (degree == 0)
    return roots;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 0; i < degree; ++i)
    companion(0, i) = -c[degree - 1 - i] / c[degree];
  for (int i = 1; i < degree; ++i)
    companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  for (int i = 0; i < degree; ++i)
  {
    const std::complex<double> z = es.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-6 * std::max(1.0, std::abs(z.real())))
      continue;
    double x = z.real();
    // Newton polish
    for (int it = 0; it < 5; ++it)
    {
      double f = 0.0, df = 0.0;
      for (int p = degree; p >= 0; --p)
      {
        df = df * x + f;
        f = f * x + c[p];
      }
      if (std::abs(df) < 1e-300)
        break;
      x -= f / df;
    }
    roots.push_back(x);
  }
  return roots;
}

// Dense LM refinement of reprojection error.
PoseSE3 RefinePose(const std::vector<Eigen::Vector3d>& pts, const std::vector<PixelCoord>& obs,
                   const CameraIntrinsics& K, PoseSE3 pose)
{
  auto cost = [&](const PoseSE3& p) {
    double c = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
    {
      const Eigen::Vector3d y = p * pts[i];
      if (!(y.z() > 0.0))
        return kInf;
      const double du = K.fx * y.x() / y.z() + K.cx - obs[i].u;
      const double dv = K.fy * y.y() / y.z() + K.cy - obs[i].v;
      c += du * du + dv * dv;
    }
    return c;
  };

  double current = cost(pose);
  if (!std::isfinite(current))
    return pose;
  double lambda = 1e-3;
  for (int iter = 0; iter < 100; ++iter)
  {
    Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t i = 0; i < pts.size(); ++i)
    {
      const Eigen::Vector3d y = pose * pts[i];
      const double iz = 1.0 / y.z();
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << K.fx * iz, 0.0, -K.fx * y.x() * iz * iz, 0.0, K.fy * iz, -K.fy * y.y() * iz * iz;
      Eigen::Matrix<double, 3, 6> dy;
      dy.leftCols<3>() = -Skew(y);
      dy.rightCols<3>() = Eigen::Matrix3d::Identity();
      const Eigen::Matrix<double, 2, 6> j = dproj * dy;
      const Eigen::Vector2d r(K.fx * y.x() * iz + K.cx - obs[i].u, K.fy * y.y() * iz + K.cy - obs[i].v);
      jtj += j.transpose() * j;
      jtr += j.transpose() * r;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 10; ++attempt)
    {
      Eigen::Matrix<double, 6, 6> a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Matrix<double, 6, 1> step = a.ldlt().solve(-jtr);
      if (!step.allFinite())
        break;
      const PoseSE3 delta = PoseSE3::FromAxisAngle(step.head<3>(), step.tail<3>());
      const PoseSE3 candidate = delta * pose;
      const double c = cost(candidate);
      if (c <= current)
      {
        const double gain = current - c;
        pose = candidate;
        current = c;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (step.norm() < 1e-12 || gain <= 1e-15 * (1.0 + current))
          return pose;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved)
      break;
  }
  return pose;
}

PoseSE3 DltInitialization(const std::vector<Eigen::Vector3d>& pts, const std::vector<PixelCoord>& obs,
                          const CameraIntrinsics& K)
{
  const std::size_t n = pts.size();
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : pts)
    centroid += p;
  centroid /= static_cast<double>(n);
  double spread = 0.0;
  for (const auto& p : pts)
    spread += (p - centroid).norm();
  spread /= static_cast<double>(n);
  if (spread < 1e-12)
    throw NonConvergence("SolvePnP: degenerate point configuration");
  const double s = 1.0 / spread;

  Eigen::MatrixXd a(2 * n, 12);
  for (std::size_t i = 0; i < n; ++i)
  {
    const Eigen::Vector3d xn = (pts[i] - centroid) * s;
    Eigen::Matrix<double, 1, 4> xh(xn.x(), xn.y(), xn.z(), 1.0);
    const double x = (obs[i].u - K.cx) / K.fx;
    const double y = (obs[i].v - K.cy) / K.fy;
    a.row(2 * i) << xh, Eigen::Matrix<double, 1, 4>::Zero(), -x * xh;
    a.row(2 * i + 1) << Eigen::Matrix<double, 1, 4>::Zero(), xh, -y * xh;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(10) / sv(0) < 1e-10)
    throw NonConvergence("SolvePnP: rank-deficient system");
  const Eigen::VectorXd p = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> proj;
  proj << p.segment<4>(0).transpose(), p.segment<4>(4).transpose(), p.segment<4>(8).transpose();
  // Undo the normalization: X_n = s (X - c).
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() *= s;
  t.topRightCorner<3, 1>() = -s * centroid;
  proj = proj * t;

  Eigen::Matrix3d m = proj.leftCols<3>();
  if (m.determinant() < 0.0)
  {
    proj = -proj;
    m = -m;
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> msvd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d r = msvd.matrixU() * msvd.matrixV().transpose();
  const double scale = msvd.singularValues().mean();
  if (!(scale > 0.0))
    throw NonConvergence("SolvePnP: degenerate projection matrix");
  return {r, proj.col(3) / scale};
}
} // namespace

//------------------------------------------------------------------------------
std::vector<Match> DetectAndMatch(const ImageBuffer& target, const ImageBuffer& source,
                                  const MatchOptions& options)
{
  if (target.Height() != source.Height() || target.Width() != source.Width())
    throw InvalidArgument("DetectAndMatch: image sizes differ");
  const int h = target.Height(), w = target.Width();
  const Plane gt = target.Gray();
  const Plane gs = source.Gray();
  const Plane response = HarrisResponse(gt, options.harris_k);
  const double max_response = response.maxCoeff();
  std::vector<Match> matches;
  if (!(max_response > 1e-12))
    return matches;
  const double threshold = options.min_response_ratio * max_response;
  const int r = options.window_radius;
  const int margin = std::max(r, 2);
  const Mask* cand = options.candidates ? &*options.candidates : nullptr;
  if (cand && (cand->rows() != h || cand->cols() != w))
    throw InvalidArgument("DetectAndMatch: candidate mask size differs");

  struct Keypoint
  {
    int v, u;
    double response;
  };
  std::vector<Keypoint> keypoints;
  const int nr = options.nms_radius;
  for (int v = margin; v < h - margin; ++v)
    for (int u = margin; u < w - margin; ++u)
    {
      const double rv = response(v, u);
      if (!(rv > threshold) || (cand && !(*cand)(v, u)))
        continue;
      bool is_max = true;
      for (int dv = -nr; dv <= nr && is_max; ++dv)
        for (int du = -nr; du <= nr; ++du)
        {
          const int vv = v + dv, uu = u + du;
          if ((dv == 0 && du == 0) || vv < 0 || uu < 0 || vv >= h || uu >= w)
            continue;
          if (cand && !(*cand)(vv, uu))
            continue;
          const double o = response(vv, uu);
          // ties resolved toward the earlier pixel in raster order
          if (o > rv || (o == rv && (dv < 0 || (dv == 0 && du < 0))))
          {
            is_max = false;
            break;
          }
        }
      if (is_max)
        keypoints.push_back({v, u, rv});
    }
  std::stable_sort(keypoints.begin(), keypoints.end(),
                   [](const Keypoint& a, const Keypoint& b) { return a.response > b.response; });
  if (static_cast<int>(keypoints.size()) > options.max_keypoints)
    keypoints.resize(options.max_keypoints);
  std::stable_sort(keypoints.begin(), keypoints.end(), [](const Keypoint& a, const Keypoint& b) {
    return a.v != b.v ? a.v < b.v : a.u < b.u;
  });

  const int sr = options.search_radius;
  const int side = 2 * sr + 1;
  Eigen::VectorXd ref, cur;
  std::vector<double> scores(static_cast<std::size_t>(side) * side);
  for (const Keypoint& kp : keypoints)
  {
    if (!NormalizedPatch(gt, kp.v, kp.u, r, ref))
      continue;
    std::fill(scores.begin(), scores.end(), -kInf);
    double best = -kInf;
    int best_dv = 0, best_du = 0;
    for (int dv = -sr; dv <= sr; ++dv)
    {
      const int vs = kp.v + dv;
      if (vs < r || vs >= h - r)
        continue;
      for (int du = -sr; du <= sr; ++du)
      {
        const int us = kp.u + du;
        if (us < r || us >= w - r)
          continue;
        if (!NormalizedPatch(gs, vs, us, r, cur))
          continue;
        const double score = ref.dot(cur);
        scores[static_cast<std::size_t>(dv + sr) * side + (du + sr)] = score;
        if (score > best)
        {
          best = score;
          best_dv = dv;
          best_du = du;
        }
      }
    }
    if (!(best >= options.min_ncc))
      continue;
    auto at = [&](int dv, int du) {
      if (std::abs(dv) > sr || std::abs(du) > sr)
        return -kInf;
      return scores[static_cast<std::size_t>(dv + sr) * side + (du + sr)];
    };
    double off_u = 0.0, off_v = 0.0;
    const double l = at(best_dv, best_du - 1), rr = at(best_dv, best_du + 1);
    if (std::isfinite(l) && std::isfinite(rr))
      off_u = ParabolaPeak(l, best, rr);
    const double up = at(best_dv - 1, best_du), dn = at(best_dv + 1, best_du);
    if (std::isfinite(up) && std::isfinite(dn))
      off_v = ParabolaPeak(up, best, dn);
    Match m;
    m.target = {static_cast<double>(kp.u), static_cast<double>(kp.v)};
    m.source = {kp.u + best_du + off_u, kp.v + best_dv + off_v};
    m.score = best;
    matches.push_back(m);
  }
  return matches;
}

CorrespondenceSet AttachDepth(const std::vector<Match>& matches, const SparseDepthImage& lidar)
{
  CorrespondenceSet out;
  for (const Match& m : matches)
  {
    const long u = std::lround(m.target.u);
    const long v = std::lround(m.target.v);
    if (u < 0 || v < 0 || u >= lidar.cols() || v >= lidar.rows())
      continue;
    const double d = lidar(v, u);
    if (d > 0.0)
      out.push_back({m.target, d, m.source});
  }
  return out;
}

std::vector<PoseSE3> SolveP3P(const std::array<Eigen::Vector3d, 3>& points,
                              const std::array<Eigen::Vector3d, 3>& bearings)
{
  // Grunert's formulation: distances s_i along unit bearings j_i with
  // s2 = u s1 and s3 = v s1 reduce to a quartic in v.
  const Eigen::Vector3d j1 = bearings[0].normalized();
  const Eigen::Vector3d j2 = bearings[1].normalized();
  const Eigen::Vector3d j3 = bearings[2].normalized();
  const double a = (points[1] - points[2]).norm();
  const double b = (points[0] - points[2]).norm();
  const double c = (points[0] - points[1]).norm();
  std::vector<PoseSE3> poses;
  if (a < 1e-12 || b < 1e-12 || c < 1e-12)
    return poses;
  const double ca = j2.dot(j3), cb = j1.dot(j3), cg = j1.dot(j2);
  const double a2 = a * a, b2 = b * b, c2 = c * c;
  const double amc = (a2 - c2) / b2;
  const double apc = (a2 + c2) / b2;

  std::array<double, 5> coef;
  coef[4] = (amc - 1.0) * (amc - 1.0) - 4.0 * c2 / b2 * ca * ca;
  coef[3] = 4.0 * (amc * (1.0 - amc) * cb - (1.0 - apc) * ca * cg + 2.0 * c2 / b2 * ca * ca * cb);
  coef[2] = 2.0 * (amc * amc - 1.0 + 2.0 * amc * amc * cb * cb + 2.0 * (b2 - c2) / b2 * ca * ca -
                   4.0 * apc * ca * cb * cg + 2.0 * (b2 - a2) / b2 * cg * cg);
  coef[1] = 4.0 * (-amc * (1.0 + amc) * cb + 2.0 * a2 / b2 * cg * cg * cb - (1.0 - apc) * ca * cg);
  coef[0] = (1.0 + amc) * (1.0 + amc) - 4.0 * a2 / b2 * cg * cg;

  for (double v : RealQuarticRoots(coef))
  {
    if (!(v > 0.0))
      continue;
    const double den = 2.0 * (cg - v * ca);
    if (std::abs(den) < 1e-14)
      continue;
    const double u = ((-1.0 + amc) * v * v - 2.0 * amc * cb * v + 1.0 + amc) / den;
    if (!(u > 0.0))
      continue;
    const double q = 1.0 + u * u - 2.0 * u * cg;
    if (!(q > 0.0))
      continue;
    const double s1 = std::sqrt(c2 / q);
    const std::array<Eigen::Vector3d, 3> cam = {s1 * j1, u * s1 * j2, v * s1 * j3};
    const PoseSE3 pose = AlignPoints(points, cam);
    if (pose.R.allFinite() && pose.t.allFinite())
      poses.push_back(pose);
  }
  return poses;
}

std::vector<double> ReprojectionErrors(const CorrespondenceSet& corr, const CameraIntrinsics& K,
                                       const PoseSE3& pose)
{
  std::vector<double> err(corr.size());
  for (std::size_t i = 0; i < corr.size(); ++i)
    err[i] = ReprojectionError(TargetPoint(corr[i], K), corr[i].source, K, pose);
  return err;
}

PoseSE3 SolvePnP(const CorrespondenceSet& corr, const CameraIntrinsics& K,
                 const std::optional<PoseSE3>& initial)
{
  if (corr.size() < 6)
    throw NonConvergence("SolvePnP: at least 6 correspondences are required");
  std::vector<Eigen::Vector3d> pts;
  std::vector<PixelCoord> obs;
  for (const auto& c : corr)
  {
    if (!(c.depth > 0.0))
      throw InvalidArgument("SolvePnP: correspondence depth must be positive");
    pts.push_back(TargetPoint(c, K));
    obs.push_back(c.source);
  }
  PoseSE3 pose = initial ? *initial : DltInitialization(pts, obs, K);
  pose = RefinePose(pts, obs, K, pose);
  if (!pose.R.allFinite() || !pose.t.allFinite())
    throw NonConvergence("SolvePnP: refinement diverged");
  return pose;
}

PnPResult PnPRansac(const CorrespondenceSet& corr, const CameraIntrinsics& K, const RansacOptions& options)
{
  const int n = static_cast<int>(corr.size());
  if (n < 6)
    throw NonConvergence("PnPRansac: at least 6 correspondences are required");
  std::vector<Eigen::Vector3d> pts(n);
  for (int i = 0; i < n; ++i)
    pts[i] = TargetPoint(corr[i], K);
  auto bearing = [&](int i) {
    return Eigen::Vector3d((corr[i].source.u - K.cx) / K.fx, (corr[i].source.v - K.cy) / K.fy, 1.0).normalized();
  };

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  const double thr = options.reprojection_threshold;

  int best_count = -1;
  double best_rms = kInf;
  PoseSE3 best_pose;
  int best_iter = -1;
  for (int it = 0; it < options.iterations; ++it)
  {
    std::array<int, 4> idx;
    for (int k = 0; k < 4; ++k)
    {
      int cand;
      do
        cand = pick(rng);
      while (std::find(idx.begin(), idx.begin() + k, cand) != idx.begin() + k);
      idx[k] = cand;
    }
    const auto hyps = SolveP3P({pts[idx[0]], pts[idx[1]], pts[idx[2]]},
                               {bearing(idx[0]), bearing(idx[1]), bearing(idx[2])});
    // The fourth point picks among the P3P solutions.
    double best_fourth = kInf;
    const PoseSE3* chosen = nullptr;
    for (const auto& p : hyps)
    {
      const double e = ReprojectionError(pts[idx[3]], corr[idx[3]].source, K, p);
      if (e < best_fourth)
      {
        best_fourth = e;
        chosen = &p;
      }
    }
    if (!chosen)
      continue;
    int count = 0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i)
    {
      const double e = ReprojectionError(pts[i], corr[i].source, K, *chosen);
      if (e < thr)
      {
        ++count;
        sq += e * e;
      }
    }
    const double rms = count > 0 ? std::sqrt(sq / count) : kInf;
    if (count > best_count || (count == best_count && rms < best_rms))
    {
      best_count = count;
      best_rms = rms;
      best_pose = *chosen;
      best_iter = it;
    }
  }
  if (best_count < 6)
    throw NonConvergence("PnPRansac: no consensus set of at least 6 correspondences");

  CorrespondenceSet consensus;
  std::vector<int> consensus_idx;
  for (int i = 0; i < n; ++i)
    if (ReprojectionError(pts[i], corr[i].source, K, best_pose) < thr)
    {
      consensus.push_back(corr[i]);
      consensus_idx.push_back(i);
    }
  PnPResult result;
  result.pose = SolvePnP(consensus, K, best_pose);
  result.winning_iteration = best_iter;
  result.hypothesis_rms = best_rms;
  double sq = 0.0;
  for (int i : consensus_idx)
  {
    const double e = ReprojectionError(pts[i], corr[i].source, K, result.pose);
    sq += e * e;
  }
  result.refined_rms = std::sqrt(sq / static_cast<double>(consensus_idx.size()));
  if (!(result.refined_rms <= result.hypothesis_rms))
  {
    result.pose = best_pose;
    result.refined_rms = result.hypothesis_rms;
  }

  result.inliers.assign(n, false);
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
  {
    const double e = ReprojectionError(pts[i], corr[i].source, K, result.pose);
    if (e < thr)
    {
      result.inliers[i] = true;
      ++result.num_inliers;
      sum += e;
    }
  }
  if (result.num_inliers < 6)
    throw NonConvergence("PnPRansac: refined pose lost its consensus");
  result.mean_reprojection_error = sum / result.num_inliers;
  return result;
}

std::vector<bool> FilterByTranslationMedian(const std::vector<double>& magnitudes, double factor)
{
  if (magnitudes.empty())
    throw InvalidArgument("FilterByTranslationMedian: no estimates");
  if (!(factor > 0.0))
    throw InvalidArgument("FilterByTranslationMedian: factor must be positive");
  std::vector<double> sorted = magnitudes;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  std::vector<bool> keep(m);
  for (std::size_t i = 0; i < m; ++i)
    keep[i] = magnitudes[i] <= factor * median;
  return keep;
}

PnPResult EstimatePose(const ImageBuffer& target, const ImageBuffer& source,
                       const SparseDepthImage& lidar, const CameraIntrinsics& K,
                       const RansacOptions& ransac, MatchOptions matching)
{
  if (!matching.candidates)
    matching.candidates = Mask(lidar > 0.0);
  const auto matches = DetectAndMatch(target, source, matching);
  return PnPRansac(AttachDepth(matches, lidar), K, ransac);
}

} // namespace fewbeam
