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

// Acceptance runner: one PASS/FAIL line per criterion. argv[1] is the path of
// the fewbeam executable used by the reproducibility check.

#include "fewbeam/eval.hpp"
#include "fewbeam/geometry.hpp"
#include "fewbeam/lidar.hpp"
#include "fewbeam/losses.hpp"
#include "fewbeam/optimizer.hpp"
#include "fewbeam/pose.hpp"
#include "fewbeam/synthetic.hpp"
#include "gradient_check.hpp"
#include "pnp_fixture.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace fewbeam;
namespace fs = std::filesystem;

namespace
{
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since)
{
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* format, double value)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, value);
  return buf;
}

int failures = 0;

void Report(int id, const std::string& name, bool pass, const std::string& detail)
{
  if (!pass)
    ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
}

double MedianRatio(const DepthMap& a, const DepthMap& b)
{
  std::vector<double> r(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    r[i] = a.data()[i] / b.data()[i];
  std::nth_element(r.begin(), r.begin() + r.size() / 2, r.end());
  return r[r.size() / 2];
}

//------------------------------------------------------------------------------
void GradientCorrectness()
{
  const auto start = Clock::now();
  double worst = 0.0;
  int nonsmooth = 0, coordinates = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
  {
    const FrameInputs in = testing::RandomProblem(seed);
    for (LidarVariant v : {LidarVariant::Naive, LidarVariant::Masked, LidarVariant::Hinted})
      for (int levels : {1, 4})
      {
        LossConfig cfg;
        cfg.lidar_variant = v;
        cfg.multiscale_levels = levels;
        cfg.smooth_weight = 0.05;
        const auto check = testing::CheckGradient(Objective(in, cfg), testing::RandomField(seed, 16, levels));
        worst = std::max(worst, check.relative_error);
        nonsmooth += check.nonsmooth;
        coordinates += check.coordinates;
      }
  }
  const double elapsed = Seconds(start);
  const double nonsmooth_fraction = double(nonsmooth) / coordinates;
  Report(1, "gradient correctness", worst < 1e-4 && elapsed < 60.0 && nonsmooth_fraction <= 0.05,
         "max relative error " + Fmt("%.2e", worst) + " over 120 checks, " + std::to_string(nonsmooth) + "/" +
           std::to_string(coordinates) + " coordinates skipped at kinks, " + Fmt("%.1f s", elapsed));
}

//------------------------------------------------------------------------------
void ScaleAmbiguity()
{
  const CameraIntrinsics K = CameraIntrinsics::KittiLike(320, 96);
  const FrameTriplet tri = MakeTriplet(Scene::Street(3, 15.0), K, {0, 0, 1}, LidarSpec{});
  OptimizeConfig base;
  base.learning_rate = 0.05;
  base.steps = 300;
  base.loss.multiscale_levels = 4;

  bool pass = true;
  double slowest = 0.0;
  std::ostringstream detail;
  for (double s : {0.5, 2.0, 4.0})
  {
    std::vector<PoseSE3> poses;
    for (const PoseSE3& p : tri.poses)
      poses.emplace_back(p.R, s * p.t);

    OptimizeConfig photo = base;
    photo.loss.lidar_variant = LidarVariant::None;
    auto t0 = Clock::now();
    const double rp = MedianRatio(OptimizeDepth(tri.target, tri.sources, tri.lidar, K, poses, photo).depth,
                                  tri.target_depth);
    slowest = std::max(slowest, Seconds(t0));

    OptimizeConfig masked = base;
    masked.loss.lidar_variant = LidarVariant::Masked;
    masked.pose_source = PoseSource::PnP;
    t0 = Clock::now();
    const double rm = MedianRatio(OptimizeDepth(tri.target, tri.sources, tri.lidar, K, poses, masked).depth,
                                  tri.target_depth);
    slowest = std::max(slowest, Seconds(t0));

    pass = pass && std::abs(rp / s - 1.0) <= 0.05 && std::abs(rm - 1.0) <= 0.05;
    detail << "s=" << s << " photometric " << Fmt("%.4f", rp) << " masked " << Fmt("%.4f", rm) << "; ";
  }
  pass = pass && slowest < 300.0;
  detail << "slowest run " << Fmt("%.1f s", slowest);
  Report(2, "scale ambiguity", pass, detail.str());
}

//------------------------------------------------------------------------------
void InfiniteDepth()
{
  std::vector<double> rp, rm;
  std::ostringstream detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
  {
    InfiniteDepthConfig cfg;
    cfg.seed = seed;
    cfg.optimize.learning_rate = 0.05;
    cfg.optimize.steps = 300;
    cfg.optimize.loss.multiscale_levels = 4;
    cfg.optimize.loss.smooth_weight = 0.1;
    const InfiniteDepthResult r = RunInfiniteDepthScenario(cfg);
    if (!r.has_box)
    {
      detail << "seed " << seed << " box not visible; ";
      continue;
    }
    rp.push_back(r.error_photometric_only);
    rm.push_back(r.error_lidar_masked);
    detail << "seed " << seed << " " << Fmt("%.3f", rp.back()) << "/" << Fmt("%.3f", rm.back()) << "; ";
  }
  if (rp.size() != 10)
  {
    Report(3, "infinite depth", false, detail.str());
    return;
  }
  const double cdr_p = Cdr(rp, 0.5), cdr_m = Cdr(rm, 0.5);
  const long below = std::count_if(rm.begin(), rm.end(), [](double e) { return e < 0.1; });
  const bool pass = rp[0] > 0.5 && rm[0] < 0.1 && cdr_p >= 0.8 && cdr_m == 0.0;
  detail << "scenario (seed 1) R_box " << Fmt("%.3f", rp[0]) << " vs " << Fmt("%.3f", rm[0])
         << ", CDR(0.5) " << Fmt("%.0f%%", 100 * cdr_p) << " -> " << Fmt("%.0f%%", 100 * cdr_m) << ", masked R_box < 0.1 on "
         << below << "/10 seeds";
  Report(3, "infinite depth (photometric/masked R_box per seed)", pass, detail.str());
}

//------------------------------------------------------------------------------
void PnPAccuracy()
{
  const CameraIntrinsics K = testing::KittiRawIntrinsics();
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial)
  {
    const testing::PnPProblem p = testing::MakePnPProblem(1000 + trial, K, 100, 30, 0.5);
    RansacOptions opt;
    opt.iterations = 100;
    opt.reprojection_threshold = 2.0;
    opt.seed = trial;
    try
    {
      const PnPResult r = PnPRansac(p.corr, K, opt);
      const double rot = RotationAngle(r.pose.R, p.pose.R) * 180.0 / std::numbers::pi;
      const double trans = (r.pose.t - p.pose.t).norm() / p.pose.t.norm();
      ok += rot < 0.5 && trans < 0.01;
    }
    catch (const NonConvergence&)
    {
    }
  }
  Report(4, "pnp accuracy", ok >= 95, std::to_string(ok) + "/100 trials within 0.5 deg and 1%");
}

//------------------------------------------------------------------------------
void BeamMachinery()
{
  const LidarSpec spec;
  const PoseSE3 extrinsics = LidarToCameraExtrinsics(spec.sensor_in_camera);
  const PointCloud sweep = SimulateLidar(Scene::Street(4), extrinsics, spec.elevations, spec.azimuth_step);
  const BeamSegmentedCloud segmented = SegmentBeams(sweep);
  const BeamSegmentedCloud kept = SubsampleBeamsLabeled(segmented, 16);
  const std::set<int> rings(kept.ring.begin(), kept.ring.end());
  const std::vector<int> in_view = RingsInView(kept, extrinsics, CameraIntrinsics::KittiLike(320, 96));
  std::ostringstream detail;
  detail << segmented.NumRings() << " rings, kept {";
  for (int r : rings)
    detail << (r == *rings.begin() ? "" : ",") << r;
  detail << "}, " << in_view.size() << " in view";
  Report(5, "beam machinery",
         segmented.NumRings() == 64 && rings == std::set<int>{0, 16, 32, 48} && in_view.size() <= 3,
         detail.str());
}

//------------------------------------------------------------------------------
// Naive re-implementations used only as oracles.
std::map<std::string, double> NaiveMetrics(const DepthMap& pred, const DepthMap& gt, double cap)
{
  double n = 0, abs_rel = 0, sq_rel = 0, se = 0, sle = 0, d1 = 0, d2 = 0, d3 = 0;
  for (int v = 0; v < gt.rows(); ++v)
    for (int u = 0; u < gt.cols(); ++u)
    {
      const double g = gt(v, u), p = pred(v, u);
      if (!(g > 0 && g <= cap))
        continue;
      n += 1;
      abs_rel += std::fabs(p - g) / g;
      sq_rel += (p - g) * (p - g) / g;
      se += (p - g) * (p - g);
      sle += (std::log(p) - std::log(g)) * (std::log(p) - std::log(g));
      const double t = p / g > g / p ? p / g : g / p;
      d1 += t < 1.25;
      d2 += t < 1.25 * 1.25;
      d3 += t < 1.25 * 1.25 * 1.25;
    }
  return {{"abs_rel", abs_rel / n}, {"sq_rel", sq_rel / n}, {"rmse", std::sqrt(se / n)},
          {"rmse_log", std::sqrt(sle / n)}, {"a1", d1 / n}, {"a2", d2 / n}, {"a3", d3 / n}, {"count", n}};
}

double NaiveSignedError(const DepthMap& pred, const DepthMap& gt, const Mask& mask, bool* any)
{
  double sum = 0;
  int n = 0;
  for (int v = 0; v < gt.rows(); ++v)
    for (int u = 0; u < gt.cols(); ++u)
      if (mask(v, u) && gt(v, u) > 0)
      {
        sum += (pred(v, u) - gt(v, u)) / gt(v, u);
        ++n;
      }
  *any = n > 0;
  return n ? sum / n : 0.0;
}

bool Close(double a, double b)
{
  return std::fabs(a - b) <= 1e-12 * std::max({std::fabs(a), std::fabs(b), 1e-300}) || a == b;
}

void MetricOracle()
{
  int mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed)
  {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int h = 8 + int(24 * U(rng)), w = 8 + int(40 * U(rng));
    DepthMap gt(h, w), pred(h, w);
    Mask mask(h, w);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u)
      {
        gt(v, u) = U(rng) < 0.3 ? 0.0 : 0.5 + 99.5 * U(rng);
        pred(v, u) = 0.1 + 99.9 * U(rng);
        mask(v, u) = U(rng) < 0.4;
      }
    const EvalReport r = EigenMetrics(pred, gt, 80.0);
    const auto o = NaiveMetrics(pred, gt, 80.0);
    mismatches += !Close(r.abs_rel, o.at("abs_rel")) + !Close(r.sq_rel, o.at("sq_rel")) +
                  !Close(r.rmse, o.at("rmse")) + !Close(r.rmse_log, o.at("rmse_log")) + !Close(r.a1, o.at("a1")) +
                  !Close(r.a2, o.at("a2")) + !Close(r.a3, o.at("a3")) + (double(r.count) != o.at("count"));

    bool any = false;
    const double naive = NaiveSignedError(pred, gt, mask, &any);
    const auto e = InstanceSignedError(pred, gt, mask);
    mismatches += e.has_value() != any || (any && !Close(*e, naive));

    std::vector<double> errors(1 + int(30 * U(rng)));
    for (double& x : errors)
      x = 4 * U(rng) - 2;
    for (double tau : {-1.0, 0.0, 0.1, 0.5, 1.0, errors[0]})
    {
      int above = 0;
      for (double x : errors)
        above += x > tau ? 1 : 0;
      mismatches += !Close(Cdr(errors, tau), double(above) / errors.size());
    }
  }
  Report(6, "metric oracle equivalence", mismatches == 0,
         std::to_string(mismatches) + " mismatches over 50 instances (metrics, signed error, cdr)");
}

//------------------------------------------------------------------------------
void LossAlgebra()
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int n = 100;
  Plane photo(n, n), hint(n, n), depth(n, n), lidar(n, n);
  for (int i = 0; i < n * n; ++i)
  {
    photo.data()[i] = U(rng);
    hint.data()[i] = U(rng);
    depth.data()[i] = 0.1 + 99.9 * U(rng);
    lidar.data()[i] = U(rng) < 0.3 ? 0.1 + 99.9 * U(rng) : 0.0;
  }
  const Mask all = Mask::Constant(n, n, true);
  const LossMap P{photo, all}, HP{hint, all};
  const LossMap naive = LidarLoss(depth, lidar, P, nullptr, LidarVariant::Naive);
  const LossMap masked = LidarLoss(depth, lidar, P, nullptr, LidarVariant::Masked);
  const LossMap hinted = LidarLoss(depth, lidar, P, &HP, LidarVariant::Hinted);

  int coincide_bad = 0, order_bad = 0, lidar_pixels = 0;
  for (int i = 0; i < n * n; ++i)
  {
    if (lidar.data()[i] == 0.0)
    {
      const double p = naive.values.data()[i];
      coincide_bad += !(p == masked.values.data()[i] && p == hinted.values.data()[i]);
      continue;
    }
    ++lidar_pixels;
    order_bad += !(naive.values.data()[i] >= masked.values.data()[i]);
  }
  // Hint strictly better than the predicted-depth loss everywhere.
  const LossMap better{photo * 0.5 - 1e-3, all};
  const bool reduces = (LidarLoss(depth, lidar, P, &better, LidarVariant::Hinted).values == naive.values).all();
  Report(7, "loss-variant algebra", coincide_bad == 0 && order_bad == 0 && reduces,
         std::to_string(n * n - lidar_pixels) + " empty pixels coincide (" + std::to_string(coincide_bad) +
           " bad), naive >= masked on " + std::to_string(lidar_pixels - order_bad) + "/" +
           std::to_string(lidar_pixels) + " LiDAR pixels, hinted == naive: " + (reduces ? "yes" : "no"));
}

//------------------------------------------------------------------------------
std::string Slurp(const fs::path& p)
{
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

bool RunPipeline(const std::string& exe, const fs::path& dir, std::string* failed)
{
  fs::create_directories(dir);
  std::ofstream(dir / "scene.txt") << "seed 3\nbackground_depth 15\nbox\n  center 0.5 0.85 9\n  size 1.8 1.6 4\n"
                                      "  velocity 0 0 1\nend\n";
  std::ofstream(dir / "run.txt") << "learning_rate 0.05\nsteps 40\nsupervision masked\nmultiscale_levels 4\n";
  const std::string d = dir.string(), t = d + "/triplet";
  const std::vector<std::string> commands{
    "synth " + d + "/scene.txt " + t,
    "sparsify " + t + "/velodyne.bin " + d + "/four.bin",
    "project --cloud " + d + "/four.bin --intrinsics " + t + "/intrinsics.txt --extrinsics " + t +
      "/extrinsics.txt --output " + d + "/four.png",
    "pnp --target " + t + "/target.png --source " + t + "/source_next.png --lidar " + t +
      "/lidar.png --intrinsics " + t + "/intrinsics.txt --output " + d + "/pnp_pose.txt --export-correspondences " +
      d + "/corr.csv",
    "optimize --triplet " + t + " --config " + d + "/run.txt --output " + d + "/opt",
    "eval --pred " + d + "/opt/depth.png --gt " + t + "/gt_depth.png --rescale median --output " + d +
      "/eval.json --csv " + d + "/eval.csv",
    "cdr --pred " + d + "/opt/depth.png --gt " + t + "/gt_depth.png --masks " + t + "/box_masks.png --output " + d +
      "/cdr.json --csv " + d + "/cdr.csv",
  };
  for (const std::string& c : commands)
  {
    const std::string line = "\"" + exe + "\" " + c + " --seed 7 > \"" + d + "/stdout_" +
                             c.substr(0, c.find(' ')) + ".txt\" 2>&1";
    if (std::system(line.c_str()) != 0)
    {
      *failed = c.substr(0, c.find(' '));
      return false;
    }
  }
  return true;
}

void Reproducibility(const std::string& exe)
{
  // Both runs use the same paths, since run_config.txt records them.
  const fs::path root = fs::temp_directory_path() / "fewbeam_acceptance_repro";
  const fs::path run = root / "run", first = root / "first";
  fs::remove_all(root);
  std::string failed;
  bool ok = RunPipeline(exe, run, &failed);
  if (ok)
  {
    fs::rename(run, first);
    ok = RunPipeline(exe, run, &failed);
  }
  if (!ok)
  {
    Report(8, "reproducibility", false, "pipeline step '" + failed + "' failed");
    return;
  }
  int files = 0, differing = 0;
  std::string first_diff;
  for (const auto& entry : fs::recursive_directory_iterator(first))
  {
    if (!entry.is_regular_file())
      continue;
    const fs::path rel = fs::relative(entry.path(), first);
    ++files;
    if (Slurp(entry.path()) != Slurp(run / rel))
    {
      ++differing;
      if (first_diff.empty())
        first_diff = rel.string();
    }
  }
  Report(8, "reproducibility", differing == 0 && files > 0,
         "synth/sparsify/project/pnp/optimize/eval/cdr run twice, " + std::to_string(files) + " files compared, " +
           std::to_string(differing) + " differ" + (first_diff.empty() ? "" : " (first: " + first_diff + ")"));
}
} // namespace

int main(int argc, char** argv)
{
  if (argc < 2)
  {
    std::cerr << "usage: fewbeam_acceptance <path-to-fewbeam>\n";
    return 2;
  }
  try
  {
    GradientCorrectness();
    ScaleAmbiguity();
    InfiniteDepth();
    PnPAccuracy();
    BeamMachinery();
    MetricOracle();
    LossAlgebra();
    Reproducibility(argv[1]);
  }
  catch (const std::exception& e)
  {
    std::cout << "FAIL: unexpected exception: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
