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

#include "fewbeam/morphology.hpp"

#include <algorithm>
#include <limits>

namespace fewbeam
{

namespace
{
constexpr double kEmpty = std::numeric_limits<double>::infinity();

// One separable pass of running minimum; `along_rows` selects the axis.
Plane MinPass(const Plane& in, int k, bool along_rows)
{
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  const int lo = k / 2;
  const int hi = k - 1 - lo;
  Plane out = Plane::Constant(h, w, kEmpty);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      double best = kEmpty;
      // out(p) = min over sources q with p - q in [-lo, hi], i.e. q in [p - hi, p + lo].
      if (along_rows)
      {
        for (int q = std::max(0, u - hi); q <= std::min(w - 1, u + lo); ++q)
          best = std::min(best, in(v, q));
      }
      else
      {
        for (int q = std::max(0, v - hi); q <= std::min(h - 1, v + lo); ++q)
          best = std::min(best, in(q, u));
      }
      out(v, u) = best;
    }
  return out;
}

void CheckKernel(int kernel_side, int iterations)
{
  if (kernel_side < 1)
    throw InvalidArgument("dilation: kernel side must be >= 1");
  if (iterations < 0)
    throw InvalidArgument("dilation: iterations must be >= 0");
}
} // namespace

Plane DilateMinPositive(const Plane& values, int kernel_side, int iterations)
{
  CheckKernel(kernel_side, iterations);
  if (iterations == 0)
    return values;
  Plane work = (values > 0.0).select(values, kEmpty);
  for (int it = 0; it < iterations; ++it)
    work = MinPass(MinPass(work, kernel_side, true), kernel_side, false);
  return (work == kEmpty).select(0.0, work);
}

Mask DilateMask(const Mask& mask, int kernel_side, int iterations)
{
  Plane as_depth = mask.cast<double>();
  return DilateMinPositive(as_depth, kernel_side, iterations) > 0.0;
}

} // namespace fewbeam
