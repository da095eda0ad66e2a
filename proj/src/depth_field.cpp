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

#include "fewbeam/depth_field.hpp"

#include <algorithm>
#include <cmath>

namespace fewbeam
{

namespace
{
constexpr double kMinDisparity = 1.0 / DepthField::kMaxDepth;
constexpr double kMaxDisparity = 1.0 / DepthField::kMinDepth;
constexpr double kDisparitySpan = kMaxDisparity - kMinDisparity;

inline double Sigmoid(double y)
{
  return 1.0 / (1.0 + std::exp(-y));
}
} // namespace

DepthField::DepthField(int height, int width, int levels, double initial_depth)
  : height_(height)
  , width_(width)
{
  if (height < 1 || width < 1)
    throw InvalidArgument("DepthField: size must be positive");
  if (levels < 1 || levels > 4)
    throw InvalidArgument("DepthField: levels must be in 1..4");
  for (int k = 0; k < levels; ++k)
  {
    const int f = 1 << k;
    const int h = (height + f - 1) / f;
    const int w = (width + f - 1) / f;
    params_.push_back(Plane::Zero(h, w));
    rows_.push_back(MakeAxis(height, h, f));
    cols_.push_back(MakeAxis(width, w, f));
  }
  params_.back().setConstant(DepthToLogit(initial_depth));
}

Eigen::Index DepthField::NumParameters() const
{
  Eigen::Index n = 0;
  for (const auto& p : params_)
    n += p.size();
  return n;
}

DepthField::Axis DepthField::MakeAxis(int full, int coarse, int factor)
{
  Axis a;
  a.i0.resize(full);
  a.i1.resize(full);
  a.w.resize(full);
  for (int i = 0; i < full; ++i)
  {
    if (factor == 1)
    {
      a.i0[i] = a.i1[i] = i;
      a.w[i] = 0.0;
      continue;
    }
    double src = (i + 0.5) / factor - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(coarse - 1));
    int lo = static_cast<int>(std::floor(src));
    lo = std::min(lo, std::max(coarse - 2, 0));
    a.i0[i] = lo;
    a.i1[i] = std::min(lo + 1, coarse - 1);
    a.w[i] = src - lo;
  }
  return a;
}

Plane DepthField::Upsample(int k) const
{
  const Plane& x = params_[k];
  if (k == 0)
    return x;
  const Axis& ra = rows_[k];
  const Axis& ca = cols_[k];
  Plane out(height_, width_);
  for (int v = 0; v < height_; ++v)
  {
    const double wy = ra.w[v];
    for (int u = 0; u < width_; ++u)
    {
      const double wx = ca.w[u];
      const double top = x(ra.i0[v], ca.i0[u]) * (1.0 - wx) + x(ra.i0[v], ca.i1[u]) * wx;
      const double bot = x(ra.i1[v], ca.i0[u]) * (1.0 - wx) + x(ra.i1[v], ca.i1[u]) * wx;
      out(v, u) = top * (1.0 - wy) + bot * wy;
    }
  }
  return out;
}

Plane DepthField::Logits(int scale) const
{
  if (scale < 0 || scale >= Levels())
    throw InvalidArgument("DepthField: scale out of range");
  Plane y = Plane::Zero(height_, width_);
  for (int k = scale; k < Levels(); ++k)
    y += Upsample(k);
  return y;
}

DepthMap DepthField::Decode(int scale) const
{
  return Logits(scale).unaryExpr([](double y) { return 1.0 / LogitToDisparity(y); });
}

void DepthField::AccumulateGradient(int scale, const Plane& grad, std::vector<Plane>& grads) const
{
  for (int k = scale; k < Levels(); ++k)
  {
    Plane& g = grads[k];
    if (k == 0)
    {
      g += grad;
      continue;
    }
    const Axis& ra = rows_[k];
    const Axis& ca = cols_[k];
    for (int v = 0; v < height_; ++v)
    {
      const double wy = ra.w[v];
      for (int u = 0; u < width_; ++u)
      {
        const double wx = ca.w[u];
        const double gv = grad(v, u);
        g(ra.i0[v], ca.i0[u]) += gv * (1.0 - wy) * (1.0 - wx);
        g(ra.i0[v], ca.i1[u]) += gv * (1.0 - wy) * wx;
        g(ra.i1[v], ca.i0[u]) += gv * wy * (1.0 - wx);
        g(ra.i1[v], ca.i1[u]) += gv * wy * wx;
      }
    }
  }
}

std::vector<Plane> DepthField::ZeroGradient() const
{
  std::vector<Plane> g;
  for (const auto& p : params_)
    g.push_back(Plane::Zero(p.rows(), p.cols()));
  return g;
}

double DepthField::LogitToDisparity(double y)
{
  return kMinDisparity + kDisparitySpan * Sigmoid(y);
}

double DepthField::DisparitySlope(double y)
{
  const double s = Sigmoid(y);
  return kDisparitySpan * s * (1.0 - s);
}

double DepthField::DepthToLogit(double depth)
{
  if (!(depth >= kMinDepth && depth <= kMaxDepth))
    throw InvalidArgument("DepthField: depth outside [0.1, 100] m");
  const double s = std::clamp((1.0 / depth - kMinDisparity) / kDisparitySpan, 1e-12, 1.0 - 1e-12);
  return std::log(s / (1.0 - s));
}

} // namespace fewbeam
