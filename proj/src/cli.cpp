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

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <optional>

namespace fs = std::filesystem;

namespace fewbeam
{

namespace
{
// Triplet directory layout shared by `synth` and `optimize`.
constexpr const char* kTarget = "target.png";
constexpr const char* kSourcePrev = "source_prev.png";
constexpr const char* kSourceNext = "source_next.png";
constexpr const char* kGtDepth = "gt_depth.png";
constexpr const char* kLidar = "lidar.png";
constexpr const char* kVelodyne = "velodyne.bin";
constexpr const char* kIntrinsics = "intrinsics.txt";
constexpr const char* kPoses = "poses.txt";
constexpr const char* kExtrinsics = "extrinsics.txt";
constexpr const char* kBoxMasks = "box_masks.png";

std::uint64_t DefaultSeed()
{
  const char* env = std::getenv("FEWBEAM_SEED");
  if (!env || !*env)
    return 0;
  std::uint64_t value = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc() || ptr != end)
    throw CLI::ValidationError("FEWBEAM_SEED", std::string("not a non-negative integer: '") + env + "'");
  return value;
}

PoseSE3 ReadSinglePose(const std::string& path)
{
  const auto poses = ParsePoses(ReadTextFile(path));
  if (poses.size() != 1)
    throw FormatError("'" + path + "': expected exactly one pose line, got " + std::to_string(poses.size()));
  return poses.front();
}

void EnsureDirectory(const std::string& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error("cannot create directory '" + dir + "'");
}

std::string Join(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

void RequireFile(const std::string& path)
{
  if (!fs::is_regular_file(path))
    throw Error("missing input file '" + path + "'");
}

/// Sorted `*.png` names in a directory, or the single file itself.
std::vector<std::pair<std::string, std::string>> ListPngs(const std::string& path)
{
  std::vector<std::pair<std::string, std::string>> out;
  if (fs::is_regular_file(path))
  {
    out.emplace_back(fs::path(path).filename().string(), path);
    return out;
  }
  if (!fs::is_directory(path))
    throw Error("'" + path + "' is neither a file nor a directory");
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      out.emplace_back(entry.path().filename().string(), entry.path().string());
  std::sort(out.begin(), out.end());
  if (out.empty())
    throw Error("no PNG files in '" + path + "'");
  return out;
}

std::string Counterpart(const std::string& dir_or_file, const std::string& name)
{
  if (fs::is_regular_file(dir_or_file))
    return dir_or_file;
  const std::string p = (fs::path(dir_or_file) / name).string();
  RequireFile(p);
  return p;
}

std::vector<double> ParseTaus(const std::string& text)
{
  std::vector<double> taus;
  std::size_t start = 0;
  while (start <= text.size())
  {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string token = text.substr(start, comma - start);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v))
      throw CLI::ValidationError("--taus", "'" + token + "' is not a number");
    taus.push_back(v);
    start = comma + 1;
  }
  return taus;
}

//------------------------------------------------------------------------------
// Subcommands
//------------------------------------------------------------------------------
struct SparsifyArgs
{
  std::string input, output;
  int keep_every = 16;
};

void RunSparsify(const SparsifyArgs& a, std::ostream& out)
{
  const PointCloud cloud = ReadVelodyneBin(a.input);
  const BeamSegmentedCloud segmented = SegmentBeams(cloud);
  const BeamSegmentedCloud kept = SubsampleBeamsLabeled(segmented, a.keep_every);
  WriteVelodyneBin(a.output, kept.cloud);
  std::vector<int> rings = kept.ring;
  std::sort(rings.begin(), rings.end());
  rings.erase(std::unique(rings.begin(), rings.end()), rings.end());
  out << "points_in " << cloud.Size() << "\nrings_in " << segmented.NumRings() << "\npoints_out "
      << kept.cloud.Size() << "\nrings_out";
  for (int r : rings)
    out << " " << r;
  out << "\n";
}

struct ProjectArgs
{
  std::string cloud, intrinsics, extrinsics, output;
};

void RunProject(const ProjectArgs& a, std::ostream& out)
{
  const PointCloud cloud = ReadVelodyneBin(a.cloud);
  const CameraIntrinsics K = ParseIntrinsics(ReadTextFile(a.intrinsics));
  const PoseSE3 extrinsics = ReadSinglePose(a.extrinsics);
  const SparseDepthImage depth = ProjectPointCloud(cloud, extrinsics, K);
  WriteDepthPng16(a.output, depth);
  out << "valid_pixels " << (depth > 0.0).count() << "\n";
}

struct SynthArgs
{
  std::string config, output;
};

void RunSynth(const SynthArgs& a, std::optional<std::uint64_t> seed, std::ostream& out)
{
  const SynthConfig cfg = ParseSynthConfig(ReadTextFile(a.config), seed);
  const CameraIntrinsics K = cfg.Intrinsics();
  const FrameTriplet t = MakeTriplet(cfg.scene, K, cfg.ego_motion, cfg.lidar, cfg.supersample);
  EnsureDirectory(a.output);
  WriteRgbPng(Join(a.output, kTarget), t.target);
  WriteRgbPng(Join(a.output, kSourcePrev), t.sources[0]);
  WriteRgbPng(Join(a.output, kSourceNext), t.sources[1]);
  WriteDepthPng16(Join(a.output, kGtDepth), t.target_depth);
  WriteDepthPng16(Join(a.output, kLidar), t.lidar);
  WriteVelodyneBin(Join(a.output, kVelodyne), t.cloud);
  WriteTextFile(Join(a.output, kIntrinsics), FormatIntrinsics(K));
  WriteTextFile(Join(a.output, kPoses), FormatPoses(t.poses));
  WriteTextFile(Join(a.output, kExtrinsics), FormatPoses({t.lidar_to_camera}));
  LabelImage labels = LabelImage::Zero(K.height, K.width);
  for (std::size_t i = 0; i < t.box_masks.size(); ++i)
    labels = t.box_masks[i].select(static_cast<int>(i) + 1, labels);
  WriteLabelPng(Join(a.output, kBoxMasks), labels);
  out << "seed " << cfg.seed << "\nsize " << K.width << "x" << K.height << "\nlidar_pixels " << (t.lidar > 0.0).count()
      << "\nboxes " << t.box_masks.size() << "\n";
}

struct OptimizeArgs
{
  std::string triplet, config, output;
  std::string supervision, pose_source;
  int multiscale = 0;
  int steps = -1;
  double learning_rate = 0.0;
};

void RunOptimize(const OptimizeArgs& a, std::optional<std::uint64_t> seed, std::ostream& out)
{
  RunConfig cfg;
  if (!a.config.empty())
    cfg = ParseRunConfig(ReadTextFile(a.config));
  if (!a.triplet.empty())
    cfg.triplet = a.triplet;
  if (!a.output.empty())
    cfg.output = a.output;
  if (cfg.triplet.empty() || cfg.output.empty())
    throw CLI::ValidationError("optimize", "a triplet directory and an output directory are required");
  if (seed)
    cfg.seed = *seed;
  OptimizeConfig& o = cfg.optimize;
  if (!a.supervision.empty())
    o.loss.lidar_variant = ParseLidarVariant(a.supervision);
  if (!a.pose_source.empty())
    o.pose_source = ParsePoseSource(a.pose_source);
  if (a.multiscale > 0)
    o.loss.multiscale_levels = a.multiscale;
  if (a.steps >= 0)
    o.steps = a.steps;
  if (a.learning_rate > 0.0)
    o.learning_rate = a.learning_rate;
  o.ransac.seed = cfg.seed;
  o.Validate();

  const std::string& dir = cfg.triplet;
  for (const char* name : {kTarget, kSourcePrev, kSourceNext, kIntrinsics})
    RequireFile(Join(dir, name));
  const CameraIntrinsics K = ParseIntrinsics(ReadTextFile(Join(dir, kIntrinsics)));
  const ImageBuffer target = ReadRgbPng(Join(dir, kTarget));
  const std::vector<ImageBuffer> sources{ReadRgbPng(Join(dir, kSourcePrev)), ReadRgbPng(Join(dir, kSourceNext))};
  if (target.Height() != K.height || target.Width() != K.width)
    throw FormatError("target image size does not match the intrinsics");
  SparseDepthImage lidar;
  const bool needs_lidar = o.loss.lidar_variant != LidarVariant::None || o.pose_source == PoseSource::PnP;
  if (fs::is_regular_file(Join(dir, kLidar)))
    lidar = ReadDepthPng16(Join(dir, kLidar));
  else if (needs_lidar)
    throw Error("missing input file '" + Join(dir, kLidar) + "'");
  std::vector<PoseSE3> poses;
  if (o.pose_source == PoseSource::Given)
  {
    RequireFile(Join(dir, kPoses));
    poses = ParsePoses(ReadTextFile(Join(dir, kPoses)));
  }

  const OptimizeResult result = OptimizeDepth(target, sources, lidar, K, poses, o);
  EnsureDirectory(cfg.output);
  WriteDepthPng16(Join(cfg.output, "depth.png"), result.depth);
  WriteTextFile(Join(cfg.output, "trace.csv"), FormatLossTrace(result.trace));
  WriteTextFile(Join(cfg.output, "poses.txt"), FormatPoses(result.poses));
  WriteTextFile(Join(cfg.output, "run_config.txt"), FormatRunConfig(cfg));
  const LossTerms& last = result.trace.records.back().terms;
  out << "supervision " << ToString(o.loss.lidar_variant) << "\npose_source " << ToString(o.pose_source)
      << "\nsteps " << o.steps << "\nfinal_loss " << FormatDouble(last.total) << "\n";
}

struct PnpArgs
{
  std::string target, source, lidar, intrinsics, correspondences, output, export_correspondences;
  int iterations = 100;
  double threshold = 2.0;
};

void RunPnp(const PnpArgs& a, std::uint64_t seed, std::ostream& out)
{
  const CameraIntrinsics K = ParseIntrinsics(ReadTextFile(a.intrinsics));
  RansacOptions ransac;
  ransac.iterations = a.iterations;
  ransac.reprojection_threshold = a.threshold;
  ransac.seed = seed;
  CorrespondenceSet corr;
  if (!a.correspondences.empty())
    corr = ParseCorrespondences(ReadTextFile(a.correspondences));
  else
  {
    if (a.target.empty() || a.source.empty() || a.lidar.empty())
      throw CLI::ValidationError("pnp", "give --correspondences or all of --target, --source, --lidar");
    const ImageBuffer target = ReadRgbPng(a.target);
    const ImageBuffer source = ReadRgbPng(a.source);
    const SparseDepthImage lidar = ReadDepthPng16(a.lidar);
    MatchOptions matching;
    matching.candidates = Mask(lidar > 0.0);
    corr = AttachDepth(DetectAndMatch(target, source, matching), lidar);
  }
  if (!a.export_correspondences.empty())
    WriteTextFile(a.export_correspondences, FormatCorrespondences(corr));
  const PnPResult r = PnPRansac(corr, K, ransac);
  WriteTextFile(a.output, FormatPoses({r.pose}));
  out << "correspondences " << corr.size() << "\ninliers " << r.num_inliers << "\nmean_reprojection_error "
      << FormatDouble(r.mean_reprojection_error) << "\n";
}

struct EvalArgs
{
  std::string pred, gt, output, csv;
  std::string rescale = "none";
  double cap = 80.0;
};

void RunEval(const EvalArgs& a, std::ostream& out)
{
  std::optional<RescaleMode> mode;
  if (a.rescale != "none")
    mode = ParseRescaleMode(a.rescale);
  EvalReport sum;
  int frames = 0;
  for (const auto& [name, path] : ListPngs(a.pred))
  {
    const DepthMap gt = ReadDepthPng16(Counterpart(a.gt, name));
    DepthMap pred = ReadDepthPng16(path);
    if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
      throw FormatError("'" + path + "': size differs from its ground truth");
    if (mode)
      pred = RescaleToGt(pred, gt, *mode);
    const EvalReport r = EigenMetrics(pred, gt, a.cap);
    sum.abs_rel += r.abs_rel;
    sum.sq_rel += r.sq_rel;
    sum.rmse += r.rmse;
    sum.rmse_log += r.rmse_log;
    sum.a1 += r.a1;
    sum.a2 += r.a2;
    sum.a3 += r.a3;
    sum.count += r.count;
    ++frames;
  }
  // Per-frame metrics averaged over frames; `count` is the pixel total.
  EvalReport mean = sum;
  for (double* v : {&mean.abs_rel, &mean.sq_rel, &mean.rmse, &mean.rmse_log, &mean.a1, &mean.a2, &mean.a3})
    *v /= frames;
  const std::string json = EvalReportJson(mean);
  if (a.output.empty())
    out << json;
  else
    WriteTextFile(a.output, json);
  if (!a.csv.empty())
    WriteTextFile(a.csv, EvalReportCsv(mean));
}

struct CdrArgs
{
  std::string pred, gt, masks, output, csv;
  std::string taus = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
};

void RunCdr(const CdrArgs& a, std::ostream& out)
{
  std::vector<CdrFrame> frames;
  for (const auto& [name, path] : ListPngs(a.pred))
  {
    CdrFrame f;
    f.name = name;
    f.pred = ReadDepthPng16(path);
    f.gt = ReadDepthPng16(Counterpart(a.gt, name));
    f.masks = MasksFromLabels(ReadLabelPng(Counterpart(a.masks, name)));
    frames.push_back(std::move(f));
  }
  const CdrReport report = ComputeCdrReport(frames, ParseTaus(a.taus), MaskFilterOptions{});
  const std::string json = CdrReportJson(report);
  if (a.output.empty())
    out << json;
  else
    WriteTextFile(a.output, json);
  if (!a.csv.empty())
    WriteTextFile(a.csv, CdrCurveCsv(report));
}

} // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Sparse-LiDAR self-supervised depth toolkit", "fewbeam"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::uint64_t seed = 0;
  std::optional<std::uint64_t> explicit_seed;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { explicit_seed = s; },
                                            "Random seed (default: $FEWBEAM_SEED, else 0)");
  };

  SparsifyArgs sparsify;
  auto* sp = app.add_subcommand("sparsify", "Keep one beam out of every N of a velodyne sweep");
  sp->add_option("input", sparsify.input, "Input velodyne .bin")->required()->check(CLI::ExistingFile);
  sp->add_option("output", sparsify.output, "Output velodyne .bin")->required();
  sp->add_option("--keep-every", sparsify.keep_every, "Keep rings with index divisible by this")
    ->capture_default_str()
    ->check(CLI::PositiveNumber);
  add_seed(sp);

  ProjectArgs project;
  auto* pr = app.add_subcommand("project", "Project a velodyne sweep into a 16-bit depth PNG");
  pr->add_option("--cloud", project.cloud, "Velodyne .bin")->required()->check(CLI::ExistingFile);
  pr->add_option("--intrinsics", project.intrinsics, "Intrinsics text (fx fy cx cy width height)")
    ->required()
    ->check(CLI::ExistingFile);
  pr->add_option("--extrinsics", project.extrinsics, "Sensor-to-camera pose, one 12-value line")
    ->required()
    ->check(CLI::ExistingFile);
  pr->add_option("--output", project.output, "Output depth PNG")->required();
  add_seed(pr);

  SynthArgs synth;
  auto* sy = app.add_subcommand("synth", "Render a synthetic triplet directory from a scene config");
  sy->add_option("config", synth.config, "Scene config file")->required()->check(CLI::ExistingFile);
  sy->add_option("output", synth.output, "Output directory")->required();
  add_seed(sy);

  OptimizeArgs optimize;
  auto* op = app.add_subcommand("optimize", "Optimize a per-pixel depth map for a triplet directory");
  op->add_option("--triplet", optimize.triplet, "Triplet directory (overrides the config)");
  op->add_option("--config", optimize.config, "Run config file")->check(CLI::ExistingFile);
  op->add_option("--output", optimize.output, "Output directory (overrides the config)");
  op->add_option("--supervision", optimize.supervision, "photometric-only | naive | masked | hinted")
    ->check(CLI::IsMember({"photometric-only", "none", "naive", "masked", "hinted"}));
  op->add_option("--pose-source", optimize.pose_source, "given | pnp")->check(CLI::IsMember({"given", "pnp"}));
  op->add_option("--multiscale", optimize.multiscale, "Number of scales (1-4)")->check(CLI::Range(1, 4));
  op->add_option("--steps", optimize.steps, "Adam steps")->check(CLI::NonNegativeNumber);
  op->add_option("--lr", optimize.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  add_seed(op);

  PnpArgs pnp;
  auto* pn = app.add_subcommand("pnp", "Estimate a metric relative pose with RANSAC PnP");
  pn->add_option("--target", pnp.target, "Target image PNG")->check(CLI::ExistingFile);
  pn->add_option("--source", pnp.source, "Source image PNG")->check(CLI::ExistingFile);
  pn->add_option("--lidar", pnp.lidar, "Sparse target depth PNG")->check(CLI::ExistingFile);
  pn->add_option("--correspondences", pnp.correspondences, "CSV u_t,v_t,depth,u_s,v_s instead of images")
    ->check(CLI::ExistingFile);
  pn->add_option("--intrinsics", pnp.intrinsics, "Intrinsics text")->required()->check(CLI::ExistingFile);
  pn->add_option("--output", pnp.output, "Output pose text")->required();
  pn->add_option("--export-correspondences", pnp.export_correspondences, "Write the correspondences as CSV");
  pn->add_option("--iterations", pnp.iterations, "RANSAC iterations")->capture_default_str()->check(CLI::PositiveNumber);
  pn->add_option("--threshold", pnp.threshold, "Inlier threshold (pixels)")
    ->capture_default_str()
    ->check(CLI::PositiveNumber);
  add_seed(pn);

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "Depth metrics of predictions against ground truth");
  ev->add_option("--pred", eval.pred, "Prediction PNG or directory")->required()->check(CLI::ExistingPath);
  ev->add_option("--gt", eval.gt, "Ground-truth PNG or directory")->required()->check(CLI::ExistingPath);
  ev->add_option("--rescale", eval.rescale, "none | median | mean")
    ->capture_default_str()
    ->check(CLI::IsMember({"none", "median", "mean"}));
  ev->add_option("--cap", eval.cap, "Maximum ground-truth depth")->capture_default_str()->check(CLI::PositiveNumber);
  ev->add_option("--output", eval.output, "JSON report path (default: stdout)");
  ev->add_option("--csv", eval.csv, "Also write the report as CSV");
  add_seed(ev);

  CdrArgs cdr;
  auto* cd = app.add_subcommand("cdr", "Catastrophic distance rate over instance masks");
  cd->add_option("--pred", cdr.pred, "Prediction PNG or directory")->required()->check(CLI::ExistingPath);
  cd->add_option("--gt", cdr.gt, "Ground-truth PNG or directory")->required()->check(CLI::ExistingPath);
  cd->add_option("--masks", cdr.masks, "Instance label PNG or directory")->required()->check(CLI::ExistingPath);
  cd->add_option("--taus", cdr.taus, "Comma-separated thresholds")->capture_default_str();
  cd->add_option("--output", cdr.output, "JSON report path (default: stdout)");
  cd->add_option("--csv", cdr.csv, "Two-column tau,cdr CSV");
  add_seed(cd);

  try
  {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    seed = explicit_seed ? *explicit_seed : DefaultSeed();
    if (*sp)
      RunSparsify(sparsify, out);
    else if (*pr)
      RunProject(project, out);
    else if (*sy)
      RunSynth(synth, explicit_seed, out);
    else if (*op)
      RunOptimize(optimize, explicit_seed || !optimize.config.empty() ? explicit_seed : std::optional(seed), out);
    else if (*pn)
      RunPnp(pnp, seed, out);
    else if (*ev)
      RunEval(eval, out);
    else if (*cd)
      RunCdr(cdr, out);
  }
  catch (const CLI::ParseError& e)
  {
    // Help and version requests exit 0; every other parse failure is a usage error.
    if (app.exit(e, out, err) == 0)
      return kExitOk;
    return kExitUsage;
  }
  catch (const std::exception& e)
  {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

} // namespace fewbeam
