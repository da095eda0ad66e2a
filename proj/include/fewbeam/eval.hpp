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

#include <optional>
#include <string>
#include <vector>

namespace fewbeam
{

struct EvalReport
{
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double a1 = 0.0; ///< fraction with max(p/g, g/p) < 1.25
  double a2 = 0.0; ///< ... < 1.25^2
  double a3 = 0.0; ///< ... < 1.25^3
  long count = 0;
};

/// Standard depth metrics over pixels with 0 < gt <= cap. Predictions must be
/// positive there. Throws InvalidArgument when no pixel qualifies.
EvalReport EigenMetrics(const DepthMap& pred, const DepthMap& gt, double cap = 80.0);

enum class RescaleMode
{
  Median,
  Mean,
};

std::string ToString(RescaleMode mode);
RescaleMode ParseRescaleMode(const std::string& name);

/// Multiplies `pred` by stat(gt) / stat(pred), both statistics taken over the
/// pixels with gt > 0. The applied factor is stored in `ratio` when given.
DepthMap RescaleToGt(const DepthMap& pred, const DepthMap& gt, RescaleMode mode, double* ratio = nullptr);

struct InstanceMask
{
  Mask mask;
  int id = 0;
};

struct MaskFilterOptions
{
  /// Width of the central band, as a fraction of the image width, that must
  /// contain the mask centroid.
  double band_fraction = 0.2;
  int min_pixels = 20;
  int dilation_kernel = 10;
  int dilation_iterations = 4;
  /// Douglas-Peucker tolerance as a fraction of the contour length.
  double simplify_fraction = 0.02;
  /// Turns against the majority orientation are tolerated up to this
  /// fraction of the largest |cross product|.
  double convexity_slack = 0.05;
};

/// Masks remaining after each stage of FilterInstanceMasks.
struct MaskFilterStats
{
  int input = 0;
  int central = 0;
  int large_enough = 0;
  int convex = 0;
};

/// Keeps the masks of plausibly unoccluded, front-facing objects: centroid in
/// the central band, enough pixels, and an approximately convex outline after
/// dilation and Douglas-Peucker simplification. Returns the original
/// (undilated) masks.
std::vector<InstanceMask> FilterInstanceMasks(const std::vector<InstanceMask>& masks, int image_width,
                                              const MaskFilterOptions& options = {},
                                              MaskFilterStats* stats = nullptr);

/// Outer boundary (pixel centers, clockwise in image coordinates) of the
/// connected component containing the first set pixel in raster order.
std::vector<Eigen::Vector2d> TraceContour(const Mask& mask);

/// Douglas-Peucker simplification of a closed polygon.
std::vector<Eigen::Vector2d> SimplifyClosedPolygon(const std::vector<Eigen::Vector2d>& contour, double epsilon);

/// Convexity with the slack rule of MaskFilterOptions::convexity_slack.
bool IsApproximatelyConvex(const std::vector<Eigen::Vector2d>& polygon, double slack);

/// Mean of (pred - gt) / gt over mask pixels with gt > 0; nullopt when there
/// are none.
std::optional<double> InstanceSignedError(const DepthMap& pred, const DepthMap& gt, const Mask& mask);

/// Fraction of errors strictly above tau. Throws InvalidArgument when empty.
double Cdr(const std::vector<double>& errors, double tau);

struct CdrReport
{
  struct Instance
  {
    std::string frame;
    int id = 0;
    double error = 0.0;
  };
  std::vector<Instance> instances;
  /// Instances that passed filtering but had no GT pixel.
  std::vector<Instance> skipped;
  std::vector<double> taus;
  std::vector<double> cdr;
  MaskFilterStats stats;
};

/// One evaluated frame for CDR aggregation.
struct CdrFrame
{
  std::string name;
  DepthMap pred;
  DepthMap gt;
  std::vector<InstanceMask> masks;
};

/// Filters masks, computes R_k per surviving instance and CDR over `taus`.
/// Throws InvalidArgument when no instance survives.
CdrReport ComputeCdrReport(const std::vector<CdrFrame>& frames, const std::vector<double>& taus,
                           const MaskFilterOptions& options = {});

} // namespace fewbeam
