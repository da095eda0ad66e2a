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

#include "fewbeam/cli.hpp"
#include "fewbeam/eval.hpp"
#include "fewbeam/geometry.hpp"
#include "fewbeam/io.hpp"
#include "fewbeam/lidar.hpp"
#include "fewbeam/optimizer.hpp"
#include "fewbeam/pose.hpp"
#include "fewbeam/synthetic.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace fewbeam;

namespace
{
using ImageArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

ImageBuffer ToImage(const ImageArray& a)
{
  if (a.ndim() != 3 || a.shape(2) != 3)
    throw InvalidArgument("expected an H x W x 3 image");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  ImageBuffer img(h, w);
  auto r = a.unchecked<3>();
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      for (int c = 0; c < 3; ++c)
        img.channels[c](v, u) = r(v, u, c);
  return img;
}

ImageArray FromImage(const ImageBuffer& img)
{
  ImageArray a({img.Height(), img.Width(), 3});
  auto r = a.mutable_unchecked<3>();
  for (int v = 0; v < img.Height(); ++v)
    for (int u = 0; u < img.Width(); ++u)
      for (int c = 0; c < 3; ++c)
        r(v, u, c) = img.channels[c](v, u);
  return a;
}

py::dict MetricsDict(const EvalReport& r)
{
  py::dict d;
  d["abs_rel"] = r.abs_rel;
  d["sq_rel"] = r.sq_rel;
  d["rmse"] = r.rmse;
  d["rmse_log"] = r.rmse_log;
  d["a1"] = r.a1;
  d["a2"] = r.a2;
  d["a3"] = r.a3;
  d["count"] = r.count;
  return d;
}

CorrespondenceSet ToCorrespondences(const Eigen::Matrix<double, Eigen::Dynamic, 5, Eigen::RowMajor>& rows)
{
  CorrespondenceSet corr(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    corr[i] = {{rows(i, 0), rows(i, 1)}, rows(i, 2), {rows(i, 3), rows(i, 4)}};
  return corr;
}
} // namespace

PYBIND11_MODULE(_fewbeam, m)
{
  m.doc() = "Depth estimation from monocular video with few-beam LiDAR supervision";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<NonConvergence>(m, "NonConvergence", base.ptr());

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
    .def(py::init([](double fx, double fy, double cx, double cy, int width, int height) {
           CameraIntrinsics K{fx, fy, cx, cy, width, height};
           K.Validate();
           return K;
         }),
         py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"), py::arg("height"))
    .def_readwrite("fx", &CameraIntrinsics::fx)
    .def_readwrite("fy", &CameraIntrinsics::fy)
    .def_readwrite("cx", &CameraIntrinsics::cx)
    .def_readwrite("cy", &CameraIntrinsics::cy)
    .def_readwrite("width", &CameraIntrinsics::width)
    .def_readwrite("height", &CameraIntrinsics::height)
    .def("matrix", &CameraIntrinsics::Matrix)
    .def_static("kitti_like", &CameraIntrinsics::KittiLike, py::arg("width"), py::arg("height"))
    .def("__repr__", [](const CameraIntrinsics& K) { return "CameraIntrinsics(" + FormatIntrinsics(K) + ")"; });

  py::class_<PoseSE3>(m, "PoseSE3")
    .def(py::init<>())
    .def(py::init<const Eigen::Matrix3d&, const Eigen::Vector3d&>(), py::arg("R"), py::arg("t"))
    .def_readwrite("R", &PoseSE3::R)
    .def_readwrite("t", &PoseSE3::t)
    .def_static("from_axis_angle", &PoseSE3::FromAxisAngle, py::arg("omega"), py::arg("t"))
    .def("matrix", &PoseSE3::Matrix)
    .def("inverse", &PoseSE3::Inverse)
    .def("__mul__", [](const PoseSE3& a, const PoseSE3& b) { return a * b; })
    .def("apply", [](const PoseSE3& p, const Eigen::Vector3d& x) { return Eigen::Vector3d(p * x); });

  m.def("rotation_angle", &RotationAngle, py::arg("a"), py::arg("b"));

  // geometry
  m.def(
    "project_point",
    [](const CameraIntrinsics& K, const PoseSE3& pose, double depth, double u, double v) {
      const Projection p = ProjectPoint(K, pose, depth, {u, v});
      return py::make_tuple(p.pixel.u, p.pixel.v, p.depth, p.valid);
    },
    py::arg("K"), py::arg("pose"), py::arg("depth"), py::arg("u"), py::arg("v"),
    "Returns (u', v', depth', valid) of the target pixel seen from the source camera.");
  m.def(
    "warp_image",
    [](const ImageArray& source, const DepthMap& depth, const PoseSE3& pose, const CameraIntrinsics& K) {
      const WarpResult w = WarpImage(ToImage(source), depth, pose, K);
      return py::make_tuple(FromImage(w.image), Mask(w.valid));
    },
    py::arg("source"), py::arg("target_depth"), py::arg("pose"), py::arg("K"));
  m.def(
    "project_point_cloud",
    [](const PointCloud::Storage& points, const PoseSE3& extrinsics, const CameraIntrinsics& K) {
      return ProjectPointCloud(PointCloud(points), extrinsics, K);
    },
    py::arg("points"), py::arg("extrinsics"), py::arg("K"));
  m.def("lidar_to_camera_extrinsics", &LidarToCameraExtrinsics,
        py::arg("sensor_in_camera") = Eigen::Vector3d::Zero().eval());

  // lidar
  m.def(
    "segment_beams", [](const PointCloud::Storage& points) { return SegmentBeams(PointCloud(points)).ring; },
    py::arg("points"), "Ring index of every point of an N x 4 sweep.");
  m.def(
    "subsample_beams",
    [](const PointCloud::Storage& points, int keep_every) {
      const BeamSegmentedCloud kept = SubsampleBeamsLabeled(SegmentBeams(PointCloud(points)), keep_every);
      return py::make_tuple(kept.cloud.data, kept.ring);
    },
    py::arg("points"), py::arg("keep_every") = 16, "Returns (points, rings) of the kept beams.");
  m.def("dilate_sparse_depth", &DilateSparseDepth, py::arg("depth"), py::arg("kernel_side"),
        py::arg("iterations"));

  // eval
  m.def(
    "eigen_metrics",
    [](const DepthMap& pred, const DepthMap& gt, double cap) { return MetricsDict(EigenMetrics(pred, gt, cap)); },
    py::arg("pred"), py::arg("gt"), py::arg("cap") = 80.0);
  m.def(
    "rescale_to_gt",
    [](const DepthMap& pred, const DepthMap& gt, const std::string& mode) {
      double ratio = 0.0;
      DepthMap out = RescaleToGt(pred, gt, ParseRescaleMode(mode), &ratio);
      return py::make_tuple(out, ratio);
    },
    py::arg("pred"), py::arg("gt"), py::arg("mode") = "median");
  m.def("instance_signed_error", &InstanceSignedError, py::arg("pred"), py::arg("gt"), py::arg("mask"));
  m.def("cdr", &Cdr, py::arg("errors"), py::arg("tau"));

  // pose
  m.def(
    "pnp_ransac",
    [](const Eigen::Matrix<double, Eigen::Dynamic, 5, Eigen::RowMajor>& corr, const CameraIntrinsics& K,
       int iterations, double threshold, std::uint64_t seed) {
      const PnPResult r = PnPRansac(ToCorrespondences(corr), K, {iterations, threshold, seed});
      py::dict d;
      d["pose"] = r.pose;
      d["inliers"] = r.inliers;
      d["num_inliers"] = r.num_inliers;
      d["mean_reprojection_error"] = r.mean_reprojection_error;
      return d;
    },
    py::arg("correspondences"), py::arg("K"), py::arg("iterations") = 100, py::arg("threshold") = 2.0,
    py::arg("seed") = 0, "Correspondences are rows (u_t, v_t, depth, u_s, v_s).");

  // synthetic data and optimization
  m.def(
    "synthesize",
    [](const std::string& config_text, std::optional<std::uint64_t> seed) {
      const SynthConfig cfg = ParseSynthConfig(config_text, seed);
      const FrameTriplet t = MakeTriplet(cfg.scene, cfg.Intrinsics(), cfg.ego_motion, cfg.lidar, cfg.supersample);
      py::dict d;
      d["K"] = t.K;
      d["target"] = FromImage(t.target);
      py::list sources;
      for (const ImageBuffer& s : t.sources)
        sources.append(FromImage(s));
      d["sources"] = sources;
      d["gt_depth"] = t.target_depth;
      d["lidar"] = t.lidar;
      d["poses"] = t.poses;
      d["points"] = t.cloud.data;
      d["lidar_to_camera"] = t.lidar_to_camera;
      d["box_masks"] = t.box_masks;
      return d;
    },
    py::arg("config_text") = "", py::arg("seed") = py::none(),
    "Renders a triplet from the plain-text scene format.");

  m.def(
    "optimize_depth",
    [](const ImageArray& target, const std::vector<ImageArray>& sources, const SparseDepthImage& lidar,
       const CameraIntrinsics& K, const std::vector<PoseSE3>& poses, const std::string& supervision,
       double learning_rate, int steps, int multiscale_levels, double smooth_weight, bool automask,
       const std::string& pose_source, std::uint64_t seed) {
      OptimizeConfig cfg;
      cfg.learning_rate = learning_rate;
      cfg.steps = steps;
      cfg.loss.multiscale_levels = multiscale_levels;
      cfg.loss.smooth_weight = smooth_weight;
      cfg.loss.automask = automask;
      cfg.loss.lidar_variant = ParseLidarVariant(supervision);
      cfg.pose_source = ParsePoseSource(pose_source);
      cfg.ransac.seed = seed;
      std::vector<ImageBuffer> src;
      for (const ImageArray& s : sources)
        src.push_back(ToImage(s));
      OptimizeResult r;
      {
        py::gil_scoped_release release;
        r = OptimizeDepth(ToImage(target), src, lidar, K, poses, cfg);
      }
      Eigen::MatrixXd trace(r.trace.records.size(), 5);
      for (std::size_t i = 0; i < r.trace.records.size(); ++i)
      {
        const LossTraceRecord& rec = r.trace.records[i];
        trace.row(i) << rec.step, rec.terms.total, rec.terms.photometric, rec.terms.lidar, rec.terms.smoothness;
      }
      py::dict d;
      d["depth"] = r.depth;
      d["trace"] = trace;
      d["poses"] = r.poses;
      return d;
    },
    py::arg("target"), py::arg("sources"), py::arg("lidar"), py::arg("K"), py::arg("poses"),
    py::arg("supervision") = "masked", py::arg("learning_rate") = 1e-4, py::arg("steps") = 2000,
    py::arg("multiscale_levels") = 1, py::arg("smooth_weight") = 1e-3, py::arg("automask") = true,
    py::arg("pose_source") = "given", py::arg("seed") = 0,
    "Trace columns: step, total, photometric, lidar, smoothness.");

  // io
  m.def(
    "read_velodyne_bin", [](const std::string& path) { return ReadVelodyneBin(path).data; }, py::arg("path"));
  m.def(
    "write_velodyne_bin",
    [](const std::string& path, const PointCloud::Storage& points) { WriteVelodyneBin(path, PointCloud(points)); },
    py::arg("path"), py::arg("points"));
  m.def("read_depth_png", &ReadDepthPng16, py::arg("path"));
  m.def("write_depth_png", &WriteDepthPng16, py::arg("path"), py::arg("depth"));

  m.def(
    "run_cli",
    [](const std::vector<std::string>& args) {
      std::ostringstream out, err;
      const int code = RunCli(args, out, err);
      return py::make_tuple(code, out.str(), err.str());
    },
    py::arg("args"), "Runs the command line in-process; returns (exit_code, stdout, stderr).");
}
