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

namespace fewbeam
{

// Square structuring element of side k anchored at k / 2: a set pixel at q
// reaches every p with p - q in [-(k / 2), k - 1 - k / 2] on both axes.

/// Binary dilation.
Mask DilateMask(const Mask& mask, int kernel_side, int iterations);

/// Dilation of a sparse map (0 = empty) where competing values resolve to the
/// smallest positive one.
Plane DilateMinPositive(const Plane& values, int kernel_side, int iterations);

} // namespace fewbeam
