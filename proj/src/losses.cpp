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

#include <algorithm>
#include <cmath>
#include <limits>

namespace fewbeam
{

namespace
{
constexpr double kInf = std::numeric_limits<double>::infinity();

inline int Reflect(int i, int n)
{
  if (n == 1)
    return 0;
  if (i < 0)
    return -i;
  if (i >= n)
    return 2 * n - 2 - i;
  return i;
}

inline double Sign(double x)
{
  return (x > 0.0) - (x < 0.0);
}

// 3x3 mean with reflect-101 borders.
Plane BoxMean3(const Plane& x)
{
  const int h = static_cast<int>(x.rows());
  const int w = static_cast<int>(x.cols());
  Plane rows(h, w);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      rows(v, u) = x(v, Reflect(u - 1, w)) + x(v, u) + x(v, Reflect(u + 1, w));
  Plane out(h, w);
  for (int v = 0; v < h; ++v)
  {
    const int vm = Reflect(v - 1, h), vp = Reflect(v + 1, h);
    for (int u = 0; u < w; ++u)
      out(v, u) = (rows(vm, u) + rows(v, u) + rows(vp, u)) * (1.0 / 9.0);
  }
  return out;
}

// Adjoint of BoxMean3.
Plane BoxMean3Transpose(const Plane& g)
{
  const int h = static_cast<int>(g.rows());
  const int w = static_cast<int>(g.cols());
  Plane cols = Plane::Zero(h, w);
  for (int v = 0; v < h; ++v)
  {
    const int vm = Reflect(v - 1, h), vp = Reflect(v + 1, h);
    for (int u = 0; u < w; ++u)
    {
      const double gv = g(v, u) * (1.0 / 9.0);
      cols(vm, u) += gv;
      cols(v, u) += gv;
      cols(vp, u) += gv;
    }
  }
  Plane out = Plane::Zero(h, w);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      const double gv = cols(v, u);
      out(v, Reflect(u - 1, w)) += gv;
      out(v, u) += gv;
      out(v, Reflect(u + 1, w)) += gv;
    }
  return out;
}

// Local moments of a reconstruction y against a fixed target x.
struct ChannelSsim
{
  Plane mu_y, e_yy, e_xy, ssim;
};

ChannelSsim ComputeChannelSsim(const Plane& x, const Plane& y, const Plane& mu_x, const Plane& e_xx)
{
  ChannelSsim s;
  s.mu_y = BoxMean3(y);
  s.e_yy = BoxMean3(y * y);
  s.e_xy = BoxMean3(x * y);
  const auto& my = s.mu_y;
  const Plane n1 = 2.0 * mu_x * my + kSsimC1;
  const Plane n2 = 2.0 * (s.e_xy - mu_x * my) + kSsimC2;
  const Plane d1 = mu_x * mu_x + my * my + kSsimC1;
  const Plane d2 = (e_xx - mu_x * mu_x) + (s.e_yy - my * my) + kSsimC2;
  s.ssim = (n1 * n2) / (d1 * d2);
  return s;
}

// Gradient of sum_p g(p) * SSIM(p) with respect to y.
Plane SsimBackward(const Plane& x, const Plane& y, const Plane& mu_x, const Plane& e_xx,
                   const ChannelSsim& s, const Plane& g)
{
  const auto& my = s.mu_y;
  const Plane n1 = 2.0 * mu_x * my + kSsimC1;
  const Plane n2 = 2.0 * (s.e_xy - mu_x * my) + kSsimC2;
  const Plane d1 = mu_x * mu_x + my * my + kSsimC1;
  const Plane d2 = (e_xx - mu_x * mu_x) + (s.e_yy - my * my) + kSsimC2;
  const Plane den = d1 * d2;
  const Plane ds_dmu = (2.0 * mu_x * n2 - 2.0 * mu_x * n1) / den -
                       s.ssim * (2.0 * my / d1 - 2.0 * my / d2);
  const Plane ds_deyy = -s.ssim / d2;
  const Plane ds_dexy = 2.0 * n1 / den;
  const Plane a = BoxMean3Transpose(g * ds_dmu);
  const Plane b = BoxMean3Transpose(g * ds_deyy);
  const Plane c = BoxMean3Transpose(g * ds_dexy);
  return a + 2.0 * y * b + x * c;
}

void CheckSameShape(const ImageBuffer& a, const ImageBuffer& b, const char* what)
{
  if (a.Height() != b.Height() || a.Width() != b.Width())
    throw InvalidArgument(std::string(what) + ": image dimensions differ");
}

// Target-only quantities shared by every evaluation.
struct TargetMoments
{
  std::array<Plane, 3> mean, sq_mean;
};

TargetMoments ComputeTargetMoments(const ImageBuffer& target)
{
  TargetMoments m;
  for (int c = 0; c < 3; ++c)
  {
    m.mean[c] = BoxMean3(target.channels[c]);
    m.sq_mean[c] = BoxMean3(target.channels[c] * target.channels[c]);
  }
  return m;
}

Plane ErrorWithMoments(const ImageBuffer& target, const std::array<Plane, 3>& mean,
                       const std::array<Plane, 3>& sq_mean, const ImageBuffer& recon, double alpha,
                       std::array<ChannelSsim, 3>* parts)
{
  Plane ssim_sum = Plane::Zero(target.Height(), target.Width());
  Plane l1_sum = Plane::Zero(target.Height(), target.Width());
  for (int c = 0; c < 3; ++c)
  {
    ChannelSsim s = ComputeChannelSsim(target.channels[c], recon.channels[c], mean[c], sq_mean[c]);
    ssim_sum += s.ssim;
    l1_sum += (target.channels[c] - recon.channels[c]).abs();
    if (parts)
      (*parts)[c] = std::move(s);
  }
  return 0.5 * alpha * (1.0 - ssim_sum / 3.0) + (1.0 - alpha) * l1_sum / 3.0;
}

// Edge weights exp(-sum_c |dI_c|) along x (H x (W-1)) and y ((H-1) x W).
void EdgeWeights(const ImageBuffer& image, Plane& wx, Plane& wy)
{
  const int h = image.Height();
  const int w = image.Width();
  wx = Plane::Zero(h, std::max(w - 1, 0));
  wy = Plane::Zero(std::max(h - 1, 0), w);
  for (const auto& c : image.channels)
  {
    if (w > 1)
      wx += (c.rightCols(w - 1) - c.leftCols(w - 1)).abs();
    if (h > 1)
      wy += (c.bottomRows(h - 1) - c.topRows(h - 1)).abs();
  }
  wx = (-wx).exp();
  wy = (-wy).exp();
}

// Smoothness of disparity / mean(disparity); optionally adds d/d(disparity).
double SmoothnessOfDisparity(const Plane& disp, const Plane& wx, const Plane& wy, double weight,
                             Plane* grad)
{
  const int h = static_cast<int>(disp.rows());
  const int w = static_cast<int>(disp.cols());
  const double n = static_cast<double>(disp.size());
  const double mean = disp.sum() / n;
  const Plane nd = disp / mean;
  double loss = 0.0;
  Plane g_nd;
  if (grad)
    g_nd = Plane::Zero(h, w);

  if (w > 1)
  {
    const double nx = static_cast<double>(h) * (w - 1);
    const Plane dx = nd.rightCols(w - 1) - nd.leftCols(w - 1);
    loss += (dx.abs() * wx).sum() / nx;
    if (grad)
    {
      const Plane s = dx.unaryExpr([](double d) { return Sign(d); }) * wx / nx;
      g_nd.rightCols(w - 1) += s;
      g_nd.leftCols(w - 1) -= s;
    }
  }
  if (h > 1)
  {
    const double ny = static_cast<double>(h - 1) * w;
    const Plane dy = nd.bottomRows(h - 1) - nd.topRows(h - 1);
    loss += (dy.abs() * wy).sum() / ny;
    if (grad)
    {
      const Plane s = dy.unaryExpr([](double d) { return Sign(d); }) * wy / ny;
      g_nd.bottomRows(h - 1) += s;
      g_nd.topRows(h - 1) -= s;
    }
  }
  if (grad)
  {
    // nd_i = disp_i / m with m = mean(disp).
    const double coupling = (g_nd * disp).sum() / (mean * mean * n);
    *grad += weight * (g_nd / mean - coupling);
  }
  return loss;
}

// Minimum over valid sources with the index of the winner (-1 if none).
void MinOverSources(const std::vector<Plane>& errors, const std::vector<const Mask*>& valid,
                    Plane& best, Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& arg)
{
  const Eigen::Index h = errors.front().rows(), w = errors.front().cols();
  best = Plane::Constant(h, w, kInf);
  arg.setConstant(h, w, -1);
  for (std::size_t s = 0; s < errors.size(); ++s)
    for (Eigen::Index v = 0; v < h; ++v)
      for (Eigen::Index u = 0; u < w; ++u)
        if ((!valid[s] || (*valid[s])(v, u)) && errors[s](v, u) < best(v, u))
        {
          best(v, u) = errors[s](v, u);
          arg(v, u) = static_cast<int>(s);
        }
}
} // namespace

//------------------------------------------------------------------------------
std::string ToString(LidarVariant variant)
{
  switch (variant)
  {
    case LidarVariant::None:
      return "photometric-only";
    case LidarVariant::Naive:
      return "naive";
    case LidarVariant::Masked:
      return "masked";
    case LidarVariant::Hinted:
      return "hinted";
  }
  return "unknown";
}

LidarVariant ParseLidarVariant(const std::string& name)
{
  if (name == "none" || name == "photometric-only" || name == "P")
    return LidarVariant::None;
  if (name == "naive")
    return LidarVariant::Naive;
  if (name == "masked")
    return LidarVariant::Masked;
  if (name == "hinted")
    return LidarVariant::Hinted;
  throw InvalidArgument("unknown LiDAR supervision variant '" + name + "'");
}

void LossConfig::Validate() const
{
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidArgument("LossConfig: alpha must be in [0, 1]");
  if (!(photometric_weight >= 0.0) || !(smooth_weight >= 0.0) || !(lidar_weight >= 0.0))
    throw InvalidArgument("LossConfig: weights must be non-negative");
  if (multiscale_levels < 1 || multiscale_levels > 4)
    throw InvalidArgument("LossConfig: multiscale_levels must be in 1..4");
}

Plane Ssim(const ImageBuffer& a, const ImageBuffer& b)
{
  CheckSameShape(a, b, "Ssim");
  Plane sum = Plane::Zero(a.Height(), a.Width());
  for (int c = 0; c < 3; ++c)
  {
    const Plane mu = BoxMean3(a.channels[c]);
    const Plane sq = BoxMean3(a.channels[c] * a.channels[c]);
    sum += ComputeChannelSsim(a.channels[c], b.channels[c], mu, sq).ssim;
  }
  return sum / 3.0;
}

Plane ReconstructionError(const ImageBuffer& target, const ImageBuffer& reconstruction, double alpha)
{
  CheckSameShape(target, reconstruction, "ReconstructionError");
  const TargetMoments m = ComputeTargetMoments(target);
  return ErrorWithMoments(target, m.mean, m.sq_mean, reconstruction, alpha, nullptr);
}

LossMap PhotometricLoss(const ImageBuffer& target, const std::vector<WarpResult>& warped, double alpha)
{
  if (warped.empty())
    throw InvalidArgument("PhotometricLoss: at least one source is required");
  const TargetMoments m = ComputeTargetMoments(target);
  std::vector<Plane> errors;
  std::vector<const Mask*> valid;
  for (const auto& w : warped)
  {
    CheckSameShape(target, w.image, "PhotometricLoss");
    errors.push_back(ErrorWithMoments(target, m.mean, m.sq_mean, w.image, alpha, nullptr));
    valid.push_back(&w.valid);
  }
  LossMap out;
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> arg;
  MinOverSources(errors, valid, out.values, arg);
  out.valid = arg >= 0;
  out.values = out.valid.select(out.values, 0.0);
  return out;
}

Mask AutoMask(const ImageBuffer& target, const std::vector<ImageBuffer>& raw_sources,
              const std::vector<WarpResult>& warped, double alpha)
{
  if (raw_sources.empty() || raw_sources.size() != warped.size())
    throw InvalidArgument("AutoMask: raw and warped source lists must be non-empty and aligned");
  const LossMap photo = PhotometricLoss(target, warped, alpha);
  Plane identity = Plane::Constant(target.Height(), target.Width(), kInf);
  for (const auto& s : raw_sources)
    identity = identity.min(ReconstructionError(target, s, alpha));
  return photo.valid && (photo.values < identity);
}

LossMap LidarLoss(const DepthMap& depth, const SparseDepthImage& lidar, const LossMap& photo,
                  const LossMap* photo_hint, LidarVariant variant)
{
  if (depth.rows() != lidar.rows() || depth.cols() != lidar.cols() ||
      photo.values.rows() != depth.rows() || photo.values.cols() != depth.cols())
    throw InvalidArgument("LidarLoss: resolutions differ");
  if (variant == LidarVariant::Hinted && !photo_hint)
    throw InvalidArgument("LidarLoss: the hinted variant needs the LiDAR-warped photometric loss");

  LossMap out{photo.valid.select(photo.values, 0.0), photo.valid};
  if (variant == LidarVariant::None)
    return out;
  for (Eigen::Index v = 0; v < depth.rows(); ++v)
    for (Eigen::Index u = 0; u < depth.cols(); ++u)
    {
      const double hv = lidar(v, u);
      if (!(hv > 0.0))
        continue;
      const double l1 = std::abs(depth(v, u) - hv);
      const double ph = photo.valid(v, u) ? photo.values(v, u) : 0.0;
      switch (variant)
      {
        case LidarVariant::Naive:
          out.values(v, u) = l1 + ph;
          out.valid(v, u) = true;
          break;
        case LidarVariant::Masked:
          out.values(v, u) = l1;
          out.valid(v, u) = true;
          break;
        case LidarVariant::Hinted:
          if (photo.valid(v, u) && photo_hint->valid(v, u) &&
              photo_hint->values(v, u) < photo.values(v, u))
            out.values(v, u) = l1 + ph;
          break;
        case LidarVariant::None:
          break;
      }
    }
  return out;
}

double SmoothnessLoss(const DepthMap& depth, const ImageBuffer& image)
{
  if (depth.rows() != image.Height() || depth.cols() != image.Width())
    throw InvalidArgument("SmoothnessLoss: resolutions differ");
  ValidateDenseDepth(depth);
  Plane wx, wy;
  EdgeWeights(image, wx, wy);
  return SmoothnessOfDisparity(depth.inverse(), wx, wy, 1.0, nullptr);
}

double ImuPoseLoss(const Eigen::Vector3d& r, const Eigen::Vector3d& r_hat)
{
  return std::abs(r.norm() - r_hat.norm());
}

//------------------------------------------------------------------------------
void FrameInputs::Validate() const
{
  K.Validate();
  target.Validate();
  if (target.Height() != K.height || target.Width() != K.width)
    throw InvalidArgument("FrameInputs: target size does not match intrinsics");
  if (sources.empty())
    throw InvalidArgument("FrameInputs: at least one source image is required");
  if (sources.size() != poses.size())
    throw InvalidArgument("FrameInputs: one pose per source is required");
  for (const auto& s : sources)
  {
    s.Validate();
    CheckSameShape(target, s, "FrameInputs");
  }
  for (const auto& p : poses)
    p.Validate(1e-6);
  if (lidar.size() > 0)
  {
    if (lidar.rows() != K.height || lidar.cols() != K.width)
      throw InvalidArgument("FrameInputs: LiDAR image size does not match intrinsics");
    ValidateSparseDepth(lidar);
  }
}

Objective::Objective(FrameInputs inputs, LossConfig config)
  : inputs_(std::move(inputs))
  , config_(config)
{
  inputs_.Validate();
  config_.Validate();
  const int h = inputs_.K.height, w = inputs_.K.width;
  if (inputs_.lidar.size() == 0)
    inputs_.lidar = SparseDepthImage::Zero(h, w);
  has_lidar_ = (inputs_.lidar > 0.0).any();

  const TargetMoments m = ComputeTargetMoments(inputs_.target);
  target_mean_ = m.mean;
  target_sq_mean_ = m.sq_mean;
  identity_min_ = Plane::Constant(h, w, kInf);
  for (const auto& s : inputs_.sources)
    identity_min_ = identity_min_.min(
      ErrorWithMoments(inputs_.target, target_mean_, target_sq_mean_, s, config_.alpha, nullptr));
  EdgeWeights(inputs_.target, smooth_wx_, smooth_wy_);
}

LossTerms Objective::EvaluateScale(const DepthMap& depth, Plane* grad_depth, Plane* grad_disp) const
{
  const FrameInputs& in = inputs_;
  const LossConfig& cfg = config_;
  const int h = in.K.height, w = in.K.width;
  const std::size_t ns = in.sources.size();
  const bool want_grad = grad_depth != nullptr;
  const LidarVariant variant = has_lidar_ ? cfg.lidar_variant : LidarVariant::None;

  std::vector<WarpResult> warped(ns);
  std::vector<WarpJacobian> jac(ns);
  std::vector<std::array<ChannelSsim, 3>> parts(ns);
  std::vector<Plane> errors(ns);
  std::vector<const Mask*> valid(ns);
  for (std::size_t s = 0; s < ns; ++s)
  {
    warped[s] = WarpImageWithJacobian(in.sources[s], depth, in.poses[s], in.K,
                                      want_grad ? &jac[s] : nullptr);
    errors[s] = ErrorWithMoments(in.target, target_mean_, target_sq_mean_, warped[s].image,
                                 cfg.alpha, &parts[s]);
    valid[s] = &warped[s].valid;
  }
  Plane photo;
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> arg;
  MinOverSources(errors, valid, photo, arg);

  Plane hint;
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> hint_arg;
  if (variant == LidarVariant::Hinted)
  {
    // Reconstruction with the LiDAR depth substituted on LiDAR pixels; the
    // hint only gates the L1 term and carries no gradient.
    const DepthMap hint_depth = (in.lidar > 0.0).select(in.lidar, depth);
    std::vector<Plane> hint_errors(ns);
    std::vector<WarpResult> hint_warped(ns);
    std::vector<const Mask*> hint_valid(ns);
    for (std::size_t s = 0; s < ns; ++s)
    {
      hint_warped[s] = WarpImage(in.sources[s], hint_depth, in.poses[s], in.K);
      hint_errors[s] = ErrorWithMoments(in.target, target_mean_, target_sq_mean_,
                                        hint_warped[s].image, cfg.alpha, nullptr);
      hint_valid[s] = &hint_warped[s].valid;
    }
    MinOverSources(hint_errors, hint_valid, hint, hint_arg);
  }

  Mask photo_set(h, w), lidar_set(h, w);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      const bool any = arg(v, u) >= 0;
      const bool on_lidar = in.lidar(v, u) > 0.0;
      bool p = any && (!cfg.automask || photo(v, u) < identity_min_(v, u));
      if (variant == LidarVariant::Masked && on_lidar)
        p = false;
      bool l = false;
      if (on_lidar)
      {
        if (variant == LidarVariant::Naive || variant == LidarVariant::Masked)
          l = true;
        else if (variant == LidarVariant::Hinted)
          l = any && hint_arg(v, u) >= 0 && hint(v, u) < photo(v, u);
      }
      photo_set(v, u) = p;
      lidar_set(v, u) = l;
    }

  const Eigen::Index n_photo = photo_set.count();
  const Eigen::Index n_lidar = lidar_set.count();
  LossTerms t;
  if (n_photo > 0)
    t.photometric = cfg.photometric_weight * photo_set.select(photo, 0.0).sum() / n_photo;
  if (n_lidar > 0)
    t.lidar = cfg.lidar_weight * lidar_set.select((depth - in.lidar).abs(), 0.0).sum() / n_lidar;
  if (cfg.smooth_weight > 0.0)
    t.smoothness = cfg.smooth_weight *
                   SmoothnessOfDisparity(depth.inverse(), smooth_wx_, smooth_wy_, cfg.smooth_weight,
                                         want_grad ? grad_disp : nullptr);
  t.total = t.photometric + t.lidar + t.smoothness;
  if (!want_grad)
    return t;

  if (n_photo > 0 && cfg.photometric_weight > 0.0)
  {
    const double scale = cfg.photometric_weight / static_cast<double>(n_photo);
    const double alpha = cfg.alpha;
    for (std::size_t s = 0; s < ns; ++s)
    {
      const Plane g = (photo_set && (arg == static_cast<int>(s))).select(Plane::Constant(h, w, scale), 0.0);
      if ((g == 0.0).all())
        continue;
      for (int c = 0; c < 3; ++c)
      {
        const Plane& x = in.target.channels[c];
        const Plane& y = warped[s].image.channels[c];
        // e = alpha/2 (1 - mean_c SSIM_c) + (1 - alpha) mean_c |x - y|
        Plane dy = SsimBackward(x, y, target_mean_[c], target_sq_mean_[c], parts[s][c],
                                g * (-alpha / 6.0));
        dy += (1.0 - alpha) / 3.0 * g * (y - x).unaryExpr([](double d) { return Sign(d); });
        *grad_depth += dy * jac[s][c];
      }
    }
  }
  if (n_lidar > 0 && cfg.lidar_weight > 0.0)
  {
    const double scale = cfg.lidar_weight / static_cast<double>(n_lidar);
    *grad_depth += lidar_set.select((depth - in.lidar).unaryExpr([](double d) { return Sign(d); }) * scale, 0.0);
  }
  return t;
}

LossEvaluation Objective::Evaluate(const DepthField& field, bool with_gradient) const
{
  if (field.Height() != inputs_.K.height || field.Width() != inputs_.K.width)
    throw InvalidArgument("Objective: depth field size does not match the inputs");
  if (field.Levels() != config_.multiscale_levels)
    throw InvalidArgument("Objective: depth field levels differ from multiscale_levels");

  LossEvaluation out;
  if (with_gradient)
    out.gradient = field.ZeroGradient();
  const int h = field.Height(), w = field.Width();
  for (int scale = 0; scale < field.Levels(); ++scale)
  {
    const Plane logits = field.Logits(scale);
    const Plane disparity = logits.unaryExpr([](double y) { return DepthField::LogitToDisparity(y); });
    const DepthMap depth = disparity.inverse();
    Plane g_depth, g_disp;
    if (with_gradient)
    {
      g_depth = Plane::Zero(h, w);
      g_disp = Plane::Zero(h, w);
    }
    const LossTerms t = EvaluateScale(depth, with_gradient ? &g_depth : nullptr,
                                      with_gradient ? &g_disp : nullptr);
    out.terms.total += t.total;
    out.terms.photometric += t.photometric;
    out.terms.lidar += t.lidar;
    out.terms.smoothness += t.smoothness;
    if (with_gradient)
    {
      const Plane slope = logits.unaryExpr([](double y) { return DepthField::DisparitySlope(y); });
      // depth = 1 / disparity
      const Plane g_logits = (g_disp - depth * depth * g_depth) * slope;
      field.AccumulateGradient(scale, g_logits, out.gradient);
    }
  }
  return out;
}

LossEvaluation TotalLossAndGradient(const DepthField& field, const FrameInputs& inputs,
                                    const LossConfig& config)
{
  return Objective(inputs, config).Evaluate(field, true);
}

} // namespace fewbeam
