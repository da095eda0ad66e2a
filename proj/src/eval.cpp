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

#include "fewbeam/eval.hpp"

#include "fewbeam/morphology.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace fewbeam
{

namespace
{
void CheckSameShape(const DepthMap& a, const DepthMap& b, const char* where)
{
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument(std::string(where) + ": resolution mismatch");
}

double Median(std::vector<double> v)
{
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1)
    return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + n / 2);
  return 0.5 * (lo + hi);
}

// (dv, du), clockwise on screen starting east.
constexpr std::array<std::array<int, 2>, 8> kDirs = {
  {{0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}}};

int DirectionIndex(int dv, int du)
{
  for (int d = 0; d < 8; ++d)
    if (kDirs[d][0] == dv && kDirs[d][1] == du)
      return d;
  return -1;
}

int CountComponents(const Mask& mask)
{
  const int h = static_cast<int>(mask.rows()), w = static_cast<int>(mask.cols());
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label;
  label.setZero(h, w);
  int count = 0;
  std::vector<std::pair<int, int>> stack;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      if (!mask(v, u) || label(v, u))
        continue;
      ++count;
      stack.push_back({v, u});
      label(v, u) = count;
      while (!stack.empty())
      {
        const auto [cv, cu] = stack.back();
        stack.pop_back();
        for (const auto& d : kDirs)
        {
          const int nv = cv + d[0], nu = cu + d[1];
          if (nv >= 0 && nu >= 0 && nv < h && nu < w && mask(nv, nu) && !label(nv, nu))
          {
            label(nv, nu) = count;
            stack.push_back({nv, nu});
          }
        }
      }
    }
  return count;
}

double PointSegmentDistance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0)
    return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

void DouglasPeucker(const std::vector<Eigen::Vector2d>& pts, std::size_t first, std::size_t last, double eps,
                    std::vector<bool>& keep)
{
  if (last <= first + 1)
    return;
  double best = -1.0;
  std::size_t index = first;
  for (std::size_t i = first + 1; i < last; ++i)
  {
    const double d = PointSegmentDistance(pts[i], pts[first], pts[last]);
    if (d > best)
    {
      best = d;
      index = i;
    }
  }
  if (best > eps)
  {
    keep[index] = true;
    DouglasPeucker(pts, first, index, eps, keep);
    DouglasPeucker(pts, index, last, eps, keep);
  }
}

double Cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }
} // namespace

EvalReport EigenMetrics(const DepthMap& pred, const DepthMap& gt, double cap)
{
  CheckSameShape(pred, gt, "EigenMetrics");
  if (!(cap > 0.0))
    throw InvalidArgument("EigenMetrics: cap must be positive");
  EvalReport r;
  double abs_rel = 0.0, sq_rel = 0.0, sq = 0.0, sq_log = 0.0;
  long a1 = 0, a2 = 0, a3 = 0;
  for (Eigen::Index i = 0; i < gt.size(); ++i)
  {
    const double g = gt.data()[i];
    if (!(g > 0.0) || g > cap)
      continue;
    const double p = pred.data()[i];
    if (!(p > 0.0) || !std::isfinite(p))
      throw InvalidArgument("EigenMetrics: prediction must be positive where ground truth is valid");
    const double diff = p - g;
    abs_rel += std::abs(diff) / g;
    sq_rel += diff * diff / g;
    sq += diff * diff;
    const double dl = std::log(p) - std::log(g);
    sq_log += dl * dl;
    const double ratio = std::max(p / g, g / p);
    a1 += ratio < 1.25;
    a2 += ratio < 1.25 * 1.25;
    a3 += ratio < 1.25 * 1.25 * 1.25;
    ++r.count;
  }
  if (r.count == 0)
    throw InvalidArgument("EigenMetrics: no valid ground-truth pixel");
  const double n = static_cast<double>(r.count);
  r.abs_rel = abs_rel / n;
  r.sq_rel = sq_rel / n;
  r.rmse = std::sqrt(sq / n);
  r.rmse_log = std::sqrt(sq_log / n);
  r.a1 = a1 / n;
  r.a2 = a2 / n;
  r.a3 = a3 / n;
  return r;
}

std::string ToString(RescaleMode mode) { return mode == RescaleMode::Median ? "median" : "mean"; }

RescaleMode ParseRescaleMode(const std::string& name)
{
  if (name == "median")
    return RescaleMode::Median;
  if (name == "mean")
    return RescaleMode::Mean;
  throw InvalidArgument("unknown rescale mode '" + name + "' (expected median or mean)");
}

DepthMap RescaleToGt(const DepthMap& pred, const DepthMap& gt, RescaleMode mode, double* ratio)
{
  CheckSameShape(pred, gt, "RescaleToGt");
  std::vector<double> p, g;
  for (Eigen::Index i = 0; i < gt.size(); ++i)
    if (gt.data()[i] > 0.0)
    {
      g.push_back(gt.data()[i]);
      p.push_back(pred.data()[i]);
    }
  if (g.empty())
    throw InvalidArgument("RescaleToGt: no valid ground-truth pixel");
  double sg, sp;
  if (mode == RescaleMode::Median)
  {
    sg = Median(g);
    sp = Median(p);
  }
  else
  {
    sg = 0.0;
    sp = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
    {
      sg += g[i];
      sp += p[i];
    }
  }
  if (!(sp > 0.0) || !std::isfinite(sp))
    throw InvalidArgument("RescaleToGt: prediction statistic must be positive");
  const double r = sg / sp;
  if (ratio)
    *ratio = r;
  return pred * r;
}

std::vector<Eigen::Vector2d> TraceContour(const Mask& mask)
{
  const int h = static_cast<int>(mask.rows()), w = static_cast<int>(mask.cols());
  auto set = [&](int v, int u) { return v >= 0 && u >= 0 && v < h && u < w && mask(v, u); };
  int sv = -1, su = -1;
  for (int v = 0; v < h && sv < 0; ++v)
    for (int u = 0; u < w; ++u)
      if (mask(v, u))
      {
        sv = v;
        su = u;
        break;
      }
  std::vector<Eigen::Vector2d> contour;
  if (sv < 0)
    return contour;

  // Moore-neighbor tracing with Jacob's stopping criterion.
  int pv = sv, pu = su;
  int bv = sv, bu = su - 1;
  const int start_bv = bv, start_bu = bu;
  contour.emplace_back(pu, pv);
  const long limit = 8L * mask.size() + 16;
  for (long step = 0; step < limit; ++step)
  {
    const int db = DirectionIndex(bv - pv, bu - pu);
    bool found = false;
    for (int k = 1; k <= 8; ++k)
    {
      const int d = (db + k) % 8;
      const int cv = pv + kDirs[d][0], cu = pu + kDirs[d][1];
      if (set(cv, cu))
      {
        const int prev = (d + 7) % 8;
        bv = pv + kDirs[prev][0];
        bu = pu + kDirs[prev][1];
        pv = cv;
        pu = cu;
        found = true;
        break;
      }
    }
    if (!found)
      return contour; // isolated pixel
    if (pv == sv && pu == su && bv == start_bv && bu == start_bu)
      return contour;
    if (!(pv == sv && pu == su))
      contour.emplace_back(pu, pv);
  }
  return contour;
}

std::vector<Eigen::Vector2d> SimplifyClosedPolygon(const std::vector<Eigen::Vector2d>& contour, double epsilon)
{
  const std::size_t n = contour.size();
  if (n <= 3)
    return contour;
  std::size_t far = 0;
  double best = -1.0;
  for (std::size_t i = 1; i < n; ++i)
  {
    const double d = (contour[i] - contour[0]).norm();
    if (d > best)
    {
      best = d;
      far = i;
    }
  }
  std::vector<Eigen::Vector2d> closed = contour;
  closed.push_back(contour[0]);
  std::vector<bool> keep(closed.size(), false);
  keep[0] = keep[far] = keep[n] = true;
  DouglasPeucker(closed, 0, far, epsilon, keep);
  DouglasPeucker(closed, far, n, epsilon, keep);
  std::vector<Eigen::Vector2d> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i])
      out.push_back(closed[i]);
  return out;
}

bool IsApproximatelyConvex(const std::vector<Eigen::Vector2d>& polygon, double slack)
{
  const std::size_t m = polygon.size();
  if (m < 4)
    return true;
  std::vector<double> cross(m);
  double total = 0.0, largest = 0.0;
  for (std::size_t i = 0; i < m; ++i)
  {
    const Eigen::Vector2d& a = polygon[(i + m - 1) % m];
    const Eigen::Vector2d& b = polygon[i];
    const Eigen::Vector2d& c = polygon[(i + 1) % m];
    cross[i] = Cross(b - a, c - b);
    total += cross[i];
    largest = std::max(largest, std::abs(cross[i]));
  }
  const double sign = total >= 0.0 ? 1.0 : -1.0;
  for (double c : cross)
    if (sign * c < -slack * largest)
      return false;
  return true;
}

std::vector<InstanceMask> FilterInstanceMasks(const std::vector<InstanceMask>& masks, int image_width,
                                              const MaskFilterOptions& options, MaskFilterStats* stats)
{
  if (image_width < 1)
    throw InvalidArgument("FilterInstanceMasks: image width must be positive");
  MaskFilterStats s;
  std::vector<InstanceMask> out;
  const double center = 0.5 * (image_width - 1);
  const double half_band = 0.5 * options.band_fraction * image_width;
  for (const InstanceMask& m : masks)
  {
    ++s.input;
    if (m.mask.cols() != image_width)
      throw InvalidArgument("FilterInstanceMasks: mask width differs from the image width");
    const long count = m.mask.count();
    if (count == 0)
      continue;
    double cu = 0.0;
    for (Eigen::Index v = 0; v < m.mask.rows(); ++v)
      for (Eigen::Index u = 0; u < m.mask.cols(); ++u)
        if (m.mask(v, u))
          cu += static_cast<double>(u);
    cu /= static_cast<double>(count);
    if (std::abs(cu - center) > half_band)
      continue;
    ++s.central;
    if (count < options.min_pixels)
      continue;
    ++s.large_enough;
    const Mask smooth = DilateMask(m.mask, options.dilation_kernel, options.dilation_iterations);
    if (CountComponents(smooth) != 1)
      continue;
    const auto contour = TraceContour(smooth);
    double length = 0.0;
    for (std::size_t i = 0; i < contour.size(); ++i)
      length += (contour[(i + 1) % contour.size()] - contour[i]).norm();
    const auto polygon = SimplifyClosedPolygon(contour, options.simplify_fraction * length);
    if (!IsApproximatelyConvex(polygon, options.convexity_slack))
      continue;
    ++s.convex;
    out.push_back(m);
  }
  if (stats)
    *stats = s;
  return out;
}

std::optional<double> InstanceSignedError(const DepthMap& pred, const DepthMap& gt, const Mask& mask)
{
  CheckSameShape(pred, gt, "InstanceSignedError");
  if (mask.rows() != gt.rows() || mask.cols() != gt.cols())
    throw InvalidArgument("InstanceSignedError: mask resolution mismatch");
  double sum = 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < gt.size(); ++i)
  {
    const double g = gt.data()[i];
    if (mask.data()[i] && g > 0.0)
    {
      sum += (pred.data()[i] - g) / g;
      ++n;
    }
  }
  if (n == 0)
    return std::nullopt;
  return sum / static_cast<double>(n);
}

double Cdr(const std::vector<double>& errors, double tau)
{
  if (errors.empty())
    throw InvalidArgument("Cdr: no instance");
  long above = 0;
  for (double e : errors)
    above += e > tau;
  return static_cast<double>(above) / static_cast<double>(errors.size());
}

CdrReport ComputeCdrReport(const std::vector<CdrFrame>& frames, const std::vector<double>& taus,
                           const MaskFilterOptions& options)
{
  if (taus.empty())
    throw InvalidArgument("ComputeCdrReport: empty threshold grid");
  CdrReport report;
  report.taus = taus;
  std::sort(report.taus.begin(), report.taus.end());
  std::vector<double> errors;
  for (const CdrFrame& f : frames)
  {
    MaskFilterStats s;
    const auto kept = FilterInstanceMasks(f.masks, static_cast<int>(f.gt.cols()), options, &s);
    report.stats.input += s.input;
    report.stats.central += s.central;
    report.stats.large_enough += s.large_enough;
    report.stats.convex += s.convex;
    for (const InstanceMask& m : kept)
    {
      const auto r = InstanceSignedError(f.pred, f.gt, m.mask);
      if (!r)
      {
        report.skipped.push_back({f.name, m.id, 0.0});
        continue;
      }
      report.instances.push_back({f.name, m.id, *r});
      errors.push_back(*r);
    }
  }
  if (errors.empty())
    throw InvalidArgument("ComputeCdrReport: no instance survived filtering");
  for (double t : report.taus)
    report.cdr.push_back(Cdr(errors, t));
  return report;
}

} // namespace fewbeam
