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

#include "fewbeam/io.hpp"

#include <json.hpp>
#include <png.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace fewbeam
{

namespace
{
//------------------------------------------------------------------------------
// PNG plumbing
//------------------------------------------------------------------------------
struct FileCloser
{
  void operator()(std::FILE* f) const
  {
    if (f)
      std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr OpenFile(const std::string& path, const char* mode)
{
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f)
    throw Error("cannot open '" + path + "': " + std::strerror(errno));
  return f;
}

[[noreturn]] void PngErrorHandler(png_structp png, png_const_charp message)
{
  auto* buffer = static_cast<std::string*>(png_get_error_ptr(png));
  if (buffer)
    *buffer = message;
  png_longjmp(png, 1);
}

void PngWarningHandler(png_structp, png_const_charp) {}

struct RawPng
{
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int channels = 0;
  std::vector<std::uint8_t> data; // rows as stored (16-bit big-endian)
};

RawPng ReadRawPng(const std::string& path)
{
  FilePtr f = OpenFile(path, "rb");
  std::uint8_t sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError("'" + path + "' is not a PNG file (bad signature at offset 0)");
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, PngErrorHandler, PngWarningHandler);
  if (!png)
    throw Error("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  RawPng out;
  std::vector<png_bytep> rows;
  if (!info)
  {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png)))
  {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("'" + path + "': " + message);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);
  if (out.color_type == PNG_COLOR_TYPE_PALETTE)
    png_set_palette_to_rgb(png);
  if (out.color_type == PNG_COLOR_TYPE_GRAY && out.bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  out.channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.data.resize(stride * out.height);
  rows.resize(out.height);
  for (int r = 0; r < out.height; ++r)
    rows[r] = out.data.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  if (out.color_type == PNG_COLOR_TYPE_PALETTE)
  {
    out.color_type = PNG_COLOR_TYPE_RGB;
    out.bit_depth = 8;
  }
  if (out.bit_depth < 8)
    out.bit_depth = 8;
  return out;
}

void WriteRawPng(const std::string& path, int width, int height, int bit_depth, int color_type,
                 const std::vector<std::uint8_t>& data)
{
  FilePtr f = OpenFile(path, "wb");
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, PngErrorHandler, PngWarningHandler);
  if (!png)
    throw Error("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info)
  {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng initialization failed");
  }
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t stride = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r)
    rows[r] = const_cast<png_bytep>(data.data() + r * stride);
  if (setjmp(png_jmpbuf(png)))
  {
    png_destroy_write_struct(&png, &info);
    throw Error("writing '" + path + "' failed: " + message);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0)
    throw Error("writing '" + path + "' failed");
}

int Sample(const RawPng& raw, int v, int u, int c)
{
  const std::size_t index = (static_cast<std::size_t>(v) * raw.width + u) * raw.channels + c;
  if (raw.bit_depth == 16)
    return (raw.data[2 * index] << 8) | raw.data[2 * index + 1];
  return raw.data[index];
}

//------------------------------------------------------------------------------
// Text helpers
//------------------------------------------------------------------------------
[[noreturn]] void LineError(const std::string& what, int line, const std::string& detail)
{
  throw FormatError(what + " line " + std::to_string(line) + ": " + detail);
}

double ParseDouble(const std::string& token, const std::string& what, int line)
{
  double value = 0.0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    LineError(what, line, "'" + token + "' is not a finite number");
  return value;
}

long long ParseInteger(const std::string& token, const std::string& what, int line)
{
  long long value = 0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end)
    LineError(what, line, "'" + token + "' is not an integer");
  return value;
}

std::vector<std::string> SplitWhitespace(const std::string& line)
{
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string t;
  while (in >> t)
    out.push_back(t);
  return out;
}

std::vector<std::string> SplitComma(const std::string& line)
{
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ','))
  {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',')
    out.push_back("");
  return out;
}

std::string StripComment(std::string line)
{
  if (const auto hash = line.find('#'); hash != std::string::npos)
    line.erase(hash);
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  return line;
}

bool ParseBool(const std::string& token, const std::string& what, int line)
{
  if (token == "true" || token == "1" || token == "on" || token == "yes")
    return true;
  if (token == "false" || token == "0" || token == "off" || token == "no")
    return false;
  LineError(what, line, "'" + token + "' is not a boolean");
}

nlohmann::ordered_json EvalJson(const EvalReport& r)
{
  nlohmann::ordered_json j;
  j["abs_rel"] = r.abs_rel;
  j["sq_rel"] = r.sq_rel;
  j["rmse"] = r.rmse;
  j["rmse_log"] = r.rmse_log;
  j["a1"] = r.a1;
  j["a2"] = r.a2;
  j["a3"] = r.a3;
  j["count"] = r.count;
  return j;
}
} // namespace

std::string FormatDouble(double value)
{
  if (value == 0.0)
    value = 0.0; // no "-0"
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc())
    throw Error("FormatDouble: conversion failed");
  return std::string(buffer, ptr);
}

std::string ReadTextFile(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::string& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out)
    throw Error("writing '" + path + "' failed");
}

//------------------------------------------------------------------------------
PointCloud ReadVelodyneBin(const std::string& path)
{
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  const std::string bytes = ReadTextFile(path);
  if (bytes.size() % 16 != 0)
    throw FormatError("'" + path + "': size " + std::to_string(bytes.size()) +
                      " is not a multiple of 16 bytes; trailing record starts at offset " +
                      std::to_string(bytes.size() / 16 * 16));
  const std::size_t n = bytes.size() / 16;
  PointCloud::Storage data(static_cast<Eigen::Index>(n), 4);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 4; ++c)
    {
      const std::size_t offset = 16 * i + 4 * c;
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[offset + b])) << (8 * b);
      const float value = std::bit_cast<float>(bits);
      if (!std::isfinite(value))
        throw FormatError("'" + path + "': non-finite value at byte offset " + std::to_string(offset) + " (point " +
                          std::to_string(i) + ", field " + std::to_string(c) + ")");
      data(static_cast<Eigen::Index>(i), c) = value;
    }
  return PointCloud(std::move(data));
}

void WriteVelodyneBin(const std::string& path, const PointCloud& cloud)
{
  std::string bytes(static_cast<std::size_t>(cloud.Size()) * 16, '\0');
  for (int i = 0; i < cloud.Size(); ++i)
    for (int c = 0; c < 4; ++c)
    {
      const double value = cloud.data(i, c);
      if (!std::isfinite(value))
        throw InvalidArgument("WriteVelodyneBin: non-finite value in point " + std::to_string(i));
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
      for (int b = 0; b < 4; ++b)
        bytes[16 * i + 4 * c + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
  WriteTextFile(path, bytes);
}

void WriteDepthPng16(const std::string& path, const DepthMap& depth)
{
  const int h = static_cast<int>(depth.rows()), w = static_cast<int>(depth.cols());
  if (h < 1 || w < 1)
    throw InvalidArgument("WriteDepthPng16: empty depth map");
  std::vector<std::uint8_t> data(static_cast<std::size_t>(h) * w * 2);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      const double d = depth(v, u);
      if (!std::isfinite(d) || d < 0.0)
        throw InvalidArgument("WriteDepthPng16: invalid depth at (" + std::to_string(v) + ", " + std::to_string(u) + ")");
      const long stored = std::lround(d * 256.0);
      if (d >= 256.0 || stored > 65535)
        throw InvalidArgument("WriteDepthPng16: depth " + FormatDouble(d) + " m at (" + std::to_string(v) + ", " +
                              std::to_string(u) + ") does not fit (must be < 256 m)");
      const std::size_t i = 2 * (static_cast<std::size_t>(v) * w + u);
      data[i] = static_cast<std::uint8_t>(stored >> 8);
      data[i + 1] = static_cast<std::uint8_t>(stored & 0xFF);
    }
  WriteRawPng(path, w, h, 16, PNG_COLOR_TYPE_GRAY, data);
}

DepthMap ReadDepthPng16(const std::string& path)
{
  const RawPng raw = ReadRawPng(path);
  if (raw.bit_depth != 16 || raw.color_type != PNG_COLOR_TYPE_GRAY)
    throw FormatError("'" + path + "': expected a 16-bit grayscale PNG (bit depth " + std::to_string(raw.bit_depth) +
                      ", color type " + std::to_string(raw.color_type) + ")");
  DepthMap out(raw.height, raw.width);
  for (int v = 0; v < raw.height; ++v)
    for (int u = 0; u < raw.width; ++u)
      out(v, u) = Sample(raw, v, u, 0) / 256.0;
  return out;
}

void WriteRgbPng(const std::string& path, const ImageBuffer& image)
{
  image.Validate();
  const int h = image.Height(), w = image.Width();
  std::vector<std::uint8_t> data(static_cast<std::size_t>(h) * w * 3);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      for (int c = 0; c < 3; ++c)
        data[(static_cast<std::size_t>(v) * w + u) * 3 + c] =
          static_cast<std::uint8_t>(std::lround(image.channels[c](v, u) * 255.0));
  WriteRawPng(path, w, h, 8, PNG_COLOR_TYPE_RGB, data);
}

ImageBuffer ReadRgbPng(const std::string& path)
{
  const RawPng raw = ReadRawPng(path);
  const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
  ImageBuffer out(raw.height, raw.width);
  const bool gray = raw.channels <= 2;
  for (int v = 0; v < raw.height; ++v)
    for (int u = 0; u < raw.width; ++u)
      for (int c = 0; c < 3; ++c)
        out.channels[c](v, u) = Sample(raw, v, u, gray ? 0 : c) / scale;
  return out;
}

void WriteLabelPng(const std::string& path, const LabelImage& labels)
{
  const int h = static_cast<int>(labels.rows()), w = static_cast<int>(labels.cols());
  if (h < 1 || w < 1)
    throw InvalidArgument("WriteLabelPng: empty label map");
  if (labels.minCoeff() < 0 || labels.maxCoeff() > 65535)
    throw InvalidArgument("WriteLabelPng: labels must lie in [0, 65535]");
  const int depth = labels.maxCoeff() < 256 ? 8 : 16;
  std::vector<std::uint8_t> data(static_cast<std::size_t>(h) * w * (depth / 8));
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      if (depth == 8)
        data[i] = static_cast<std::uint8_t>(labels(v, u));
      else
      {
        data[2 * i] = static_cast<std::uint8_t>(labels(v, u) >> 8);
        data[2 * i + 1] = static_cast<std::uint8_t>(labels(v, u) & 0xFF);
      }
    }
  WriteRawPng(path, w, h, depth, PNG_COLOR_TYPE_GRAY, data);
}

LabelImage ReadLabelPng(const std::string& path)
{
  const RawPng raw = ReadRawPng(path);
  if (raw.color_type != PNG_COLOR_TYPE_GRAY)
    throw FormatError("'" + path + "': expected a grayscale label PNG (color type " + std::to_string(raw.color_type) +
                      ")");
  LabelImage out(raw.height, raw.width);
  for (int v = 0; v < raw.height; ++v)
    for (int u = 0; u < raw.width; ++u)
      out(v, u) = Sample(raw, v, u, 0);
  return out;
}

std::vector<InstanceMask> MasksFromLabels(const LabelImage& labels)
{
  std::set<int> ids;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels.data()[i] > 0)
      ids.insert(labels.data()[i]);
  std::vector<InstanceMask> out;
  for (int id : ids)
    out.push_back({labels == id, id});
  return out;
}

//------------------------------------------------------------------------------
std::string FormatIntrinsics(const CameraIntrinsics& K)
{
  return FormatDouble(K.fx) + " " + FormatDouble(K.fy) + " " + FormatDouble(K.cx) + " " + FormatDouble(K.cy) + " " +
         std::to_string(K.width) + " " + std::to_string(K.height) + "\n";
}

CameraIntrinsics ParseIntrinsics(const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::optional<CameraIntrinsics> out;
  while (std::getline(in, line))
  {
    ++line_no;
    const auto tokens = SplitWhitespace(StripComment(line));
    if (tokens.empty())
      continue;
    if (out)
      LineError("intrinsics", line_no, "unexpected extra content");
    if (tokens.size() != 6)
      LineError("intrinsics", line_no, "expected 6 fields (fx fy cx cy width height), got " +
                                         std::to_string(tokens.size()));
    CameraIntrinsics K;
    K.fx = ParseDouble(tokens[0], "intrinsics", line_no);
    K.fy = ParseDouble(tokens[1], "intrinsics", line_no);
    K.cx = ParseDouble(tokens[2], "intrinsics", line_no);
    K.cy = ParseDouble(tokens[3], "intrinsics", line_no);
    const long long w = ParseInteger(tokens[4], "intrinsics", line_no);
    const long long h = ParseInteger(tokens[5], "intrinsics", line_no);
    if (w < 1 || h < 1 || w > 1 << 20 || h > 1 << 20)
      LineError("intrinsics", line_no, "image size out of range");
    K.width = static_cast<int>(w);
    K.height = static_cast<int>(h);
    try
    {
      K.Validate();
    }
    catch (const InvalidArgument& e)
    {
      LineError("intrinsics", line_no, e.what());
    }
    out = K;
  }
  if (!out)
    throw FormatError("intrinsics: no data line");
  return *out;
}

std::string FormatPoses(const std::vector<PoseSE3>& poses)
{
  std::string out;
  for (const PoseSE3& p : poses)
  {
    for (int r = 0; r < 3; ++r)
    {
      for (int c = 0; c < 3; ++c)
        out += FormatDouble(p.R(r, c)) + " ";
      out += FormatDouble(p.t(r));
      out += r < 2 ? " " : "\n";
    }
  }
  return out;
}

std::vector<PoseSE3> ParsePoses(const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<PoseSE3> out;
  while (std::getline(in, line))
  {
    ++line_no;
    const auto tokens = SplitWhitespace(StripComment(line));
    if (tokens.empty())
      continue;
    if (tokens.size() != 12)
      LineError("poses", line_no, "expected 12 values, got " + std::to_string(tokens.size()));
    PoseSE3 p;
    for (int r = 0; r < 3; ++r)
    {
      for (int c = 0; c < 3; ++c)
        p.R(r, c) = ParseDouble(tokens[4 * r + c], "poses", line_no);
      p.t(r) = ParseDouble(tokens[4 * r + 3], "poses", line_no);
    }
    try
    {
      p.Validate(1e-6);
    }
    catch (const InvalidArgument& e)
    {
      LineError("poses", line_no, e.what());
    }
    out.push_back(p);
  }
  return out;
}

std::string FormatCorrespondences(const CorrespondenceSet& corr)
{
  std::string out = "u_t,v_t,depth,u_s,v_s\n";
  for (const auto& c : corr)
    out += FormatDouble(c.target.u) + "," + FormatDouble(c.target.v) + "," + FormatDouble(c.depth) + "," +
           FormatDouble(c.source.u) + "," + FormatDouble(c.source.v) + "\n";
  return out;
}

CorrespondenceSet ParseCorrespondences(const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header = false;
  CorrespondenceSet out;
  while (std::getline(in, line))
  {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos)
      continue;
    const auto fields = SplitComma(line);
    if (!header)
    {
      if (fields != std::vector<std::string>{"u_t", "v_t", "depth", "u_s", "v_s"})
        LineError("correspondences", line_no, "expected header u_t,v_t,depth,u_s,v_s");
      header = true;
      continue;
    }
    if (fields.size() != 5)
      LineError("correspondences", line_no, "expected 5 fields, got " + std::to_string(fields.size()));
    Correspondence c;
    c.target.u = ParseDouble(fields[0], "correspondences", line_no);
    c.target.v = ParseDouble(fields[1], "correspondences", line_no);
    c.depth = ParseDouble(fields[2], "correspondences", line_no);
    c.source.u = ParseDouble(fields[3], "correspondences", line_no);
    c.source.v = ParseDouble(fields[4], "correspondences", line_no);
    if (!(c.depth > 0.0))
      LineError("correspondences", line_no, "depth must be positive");
    out.push_back(c);
  }
  if (!header)
    throw FormatError("correspondences: missing header");
  return out;
}

std::string FormatLossTrace(const LossTrace& trace)
{
  std::string out = "step,learning_rate,total,photometric,lidar,smoothness\n";
  for (const auto& r : trace.records)
    out += std::to_string(r.step) + "," + FormatDouble(r.learning_rate) + "," + FormatDouble(r.terms.total) + "," +
           FormatDouble(r.terms.photometric) + "," + FormatDouble(r.terms.lidar) + "," +
           FormatDouble(r.terms.smoothness) + "\n";
  return out;
}

std::string EvalReportJson(const EvalReport& report) { return EvalJson(report).dump(2) + "\n"; }

std::string EvalReportCsv(const EvalReport& r)
{
  return "abs_rel,sq_rel,rmse,rmse_log,a1,a2,a3,count\n" + FormatDouble(r.abs_rel) + "," + FormatDouble(r.sq_rel) +
         "," + FormatDouble(r.rmse) + "," + FormatDouble(r.rmse_log) + "," + FormatDouble(r.a1) + "," +
         FormatDouble(r.a2) + "," + FormatDouble(r.a3) + "," + std::to_string(r.count) + "\n";
}

std::string CdrReportJson(const CdrReport& report)
{
  nlohmann::ordered_json j;
  auto instances = nlohmann::ordered_json::array();
  for (const auto& i : report.instances)
    instances.push_back({{"frame", i.frame}, {"id", i.id}, {"error", i.error}});
  auto skipped = nlohmann::ordered_json::array();
  for (const auto& i : report.skipped)
    skipped.push_back({{"frame", i.frame}, {"id", i.id}});
  auto curve = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < report.taus.size(); ++k)
    curve.push_back({{"tau", report.taus[k]}, {"cdr", report.cdr[k]}});
  j["instances"] = instances;
  j["skipped"] = skipped;
  j["curve"] = curve;
  j["filter"] = {{"input", report.stats.input},
                 {"central", report.stats.central},
                 {"large_enough", report.stats.large_enough},
                 {"convex", report.stats.convex}};
  return j.dump(2) + "\n";
}

std::string CdrCurveCsv(const CdrReport& report)
{
  std::string out = "tau,cdr\n";
  for (std::size_t k = 0; k < report.taus.size(); ++k)
    out += FormatDouble(report.taus[k]) + "," + FormatDouble(report.cdr[k]) + "\n";
  return out;
}

//------------------------------------------------------------------------------
RunConfig ParseRunConfig(const std::string& text)
{
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  const std::string what = "run config";
  while (std::getline(in, line))
  {
    ++line_no;
    const auto tokens = SplitWhitespace(StripComment(line));
    if (tokens.empty())
      continue;
    const std::string& key = tokens[0];
    if (tokens.size() != 2)
      LineError(what, line_no, "'" + key + "' expects exactly one value");
    if (!seen.insert(key).second)
      LineError(what, line_no, "repeated key '" + key + "'");
    const std::string& value = tokens[1];
    auto real = [&]() { return ParseDouble(value, what, line_no); };
    auto integer = [&]() {
      const long long v = ParseInteger(value, what, line_no);
      if (v < 0 || v > (1LL << 31) - 1)
        LineError(what, line_no, "'" + key + "' out of range");
      return static_cast<int>(v);
    };
    OptimizeConfig& o = cfg.optimize;
    try
    {
      if (key == "learning_rate")
        o.learning_rate = real();
      else if (key == "steps")
        o.steps = integer();
      else if (key == "halve_at_midpoint")
        o.halve_at_midpoint = ParseBool(value, what, line_no);
      else if (key == "initial_depth")
        o.initial_depth = real();
      else if (key == "supervision")
        o.loss.lidar_variant = ParseLidarVariant(value);
      else if (key == "pose_source")
        o.pose_source = ParsePoseSource(value);
      else if (key == "pose_scale_divisor")
        o.pose_scale_divisor = real();
      else if (key == "multiscale_levels")
        o.loss.multiscale_levels = integer();
      else if (key == "alpha")
        o.loss.alpha = real();
      else if (key == "photometric_weight")
        o.loss.photometric_weight = real();
      else if (key == "smooth_weight")
        o.loss.smooth_weight = real();
      else if (key == "lidar_weight")
        o.loss.lidar_weight = real();
      else if (key == "automask")
        o.loss.automask = ParseBool(value, what, line_no);
      else if (key == "dilation_kernel")
        o.dilation_kernel = integer();
      else if (key == "dilation_iterations")
        o.dilation_iterations = integer();
      else if (key == "ransac_iterations")
        o.ransac.iterations = integer();
      else if (key == "ransac_threshold")
        o.ransac.reprojection_threshold = real();
      else if (key == "seed")
      {
        const long long v = ParseInteger(value, what, line_no);
        if (v < 0)
          LineError(what, line_no, "seed must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(v);
      }
      else if (key == "triplet")
        cfg.triplet = value;
      else if (key == "output")
        cfg.output = value;
      else
        LineError(what, line_no, "unknown key '" + key + "'");
    }
    catch (const InvalidArgument& e)
    {
      LineError(what, line_no, e.what());
    }
  }
  cfg.optimize.ransac.seed = cfg.seed;
  try
  {
    cfg.optimize.Validate();
  }
  catch (const InvalidArgument& e)
  {
    throw FormatError(what + ": " + e.what());
  }
  return cfg;
}

std::string FormatRunConfig(const RunConfig& c)
{
  const OptimizeConfig& o = c.optimize;
  std::ostringstream out;
  out << "learning_rate " << FormatDouble(o.learning_rate) << "\n"
      << "steps " << o.steps << "\n"
      << "halve_at_midpoint " << (o.halve_at_midpoint ? "true" : "false") << "\n"
      << "initial_depth " << FormatDouble(o.initial_depth) << "\n"
      << "supervision " << ToString(o.loss.lidar_variant) << "\n"
      << "pose_source " << ToString(o.pose_source) << "\n"
      << "pose_scale_divisor " << FormatDouble(o.pose_scale_divisor) << "\n"
      << "multiscale_levels " << o.loss.multiscale_levels << "\n"
      << "alpha " << FormatDouble(o.loss.alpha) << "\n"
      << "photometric_weight " << FormatDouble(o.loss.photometric_weight) << "\n"
      << "smooth_weight " << FormatDouble(o.loss.smooth_weight) << "\n"
      << "lidar_weight " << FormatDouble(o.loss.lidar_weight) << "\n"
      << "automask " << (o.loss.automask ? "true" : "false") << "\n"
      << "dilation_kernel " << o.dilation_kernel << "\n"
      << "dilation_iterations " << o.dilation_iterations << "\n"
      << "ransac_iterations " << o.ransac.iterations << "\n"
      << "ransac_threshold " << FormatDouble(o.ransac.reprojection_threshold) << "\n"
      << "seed " << c.seed << "\n";
  if (!c.triplet.empty())
    out << "triplet " << c.triplet << "\n";
  if (!c.output.empty())
    out << "output " << c.output << "\n";
  return out.str();
}

} // namespace fewbeam
