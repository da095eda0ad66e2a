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

#include "fewbeam/eval.hpp"
#include "fewbeam/optimizer.hpp"
#include "fewbeam/pose.hpp"
#include "fewbeam/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fewbeam
{

using LabelImage = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

//------------------------------------------------------------------------------
// Point clouds
//------------------------------------------------------------------------------

/// KITTI velodyne layout: little-endian float32 (x, y, z, intensity) records.
PointCloud ReadVelodyneBin(const std::string& path);
/// Values are narrowed to float32.
void WriteVelodyneBin(const std::string& path, const PointCloud& cloud);

//------------------------------------------------------------------------------
// Images
//------------------------------------------------------------------------------

/// 16-bit grayscale PNG, stored value round(depth * 256), 0 = no depth.
/// Throws InvalidArgument for depths that do not fit (>= 256 m) or are
/// negative or non-finite.
void WriteDepthPng16(const std::string& path, const DepthMap& depth);
/// Throws FormatError unless the file is a 16-bit grayscale PNG.
DepthMap ReadDepthPng16(const std::string& path);

/// 8-bit RGB PNG.
void WriteRgbPng(const std::string& path, const ImageBuffer& image);
/// Accepts 8/16-bit gray, gray+alpha, RGB and RGBA (alpha is dropped).
ImageBuffer ReadRgbPng(const std::string& path);

/// Integer label map as 8-bit (max label < 256) or 16-bit grayscale PNG.
void WriteLabelPng(const std::string& path, const LabelImage& labels);
LabelImage ReadLabelPng(const std::string& path);

/// One mask per distinct positive label, id = label, in increasing order.
std::vector<InstanceMask> MasksFromLabels(const LabelImage& labels);

//------------------------------------------------------------------------------
// Text formats
//------------------------------------------------------------------------------

/// Single line "fx fy cx cy width height".
std::string FormatIntrinsics(const CameraIntrinsics& K);
CameraIntrinsics ParseIntrinsics(const std::string& text);

/// One pose per line as the 12 entries of the row-major 3x4 matrix [R | t].
std::string FormatPoses(const std::vector<PoseSE3>& poses);
std::vector<PoseSE3> ParsePoses(const std::string& text);

/// CSV with header u_t,v_t,depth,u_s,v_s.
std::string FormatCorrespondences(const CorrespondenceSet& corr);
CorrespondenceSet ParseCorrespondences(const std::string& text);

/// CSV with header step,learning_rate,total,photometric,lidar,smoothness.
std::string FormatLossTrace(const LossTrace& trace);

std::string EvalReportJson(const EvalReport& report);
std::string EvalReportCsv(const EvalReport& report);
std::string CdrReportJson(const CdrReport& report);
/// Two columns: tau,cdr.
std::string CdrCurveCsv(const CdrReport& report);

//------------------------------------------------------------------------------
// Run configuration
//------------------------------------------------------------------------------

/// Plain-text `key value` configuration of an optimization run.
struct RunConfig
{
  OptimizeConfig optimize;
  std::uint64_t seed = 0;
  std::string triplet;
  std::string output;
};

/// Keys: learning_rate, steps, halve_at_midpoint, initial_depth, supervision,
/// pose_source, pose_scale_divisor, multiscale_levels, alpha,
/// photometric_weight, smooth_weight, lidar_weight, automask,
/// dilation_kernel, dilation_iterations, ransac_iterations,
/// ransac_threshold, seed, triplet, output. Unknown keys, repeated keys and
/// malformed values throw FormatError naming the line.
RunConfig ParseRunConfig(const std::string& text);
std::string FormatRunConfig(const RunConfig& config);

//------------------------------------------------------------------------------
// Files
//------------------------------------------------------------------------------

std::string ReadTextFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& text);

/// Shortest decimal text that reads back to the same double.
std::string FormatDouble(double value);

} // namespace fewbeam
