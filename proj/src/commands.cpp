#include "jdsr/commands.hpp"

#include <fstream>
#include <random>

#include "jdsr/checkpoint.hpp"
#include "jdsr/error.hpp"
#include "jdsr/image_io.hpp"
#include "jdsr/pose_io.hpp"

namespace fs = std::filesystem;

namespace jdsr {

std::vector<Pose> perturb_poses(const std::vector<Pose>& poses, double magnitude, std::uint64_t seed) {
  if (magnitude == 0.0) return poses;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Pose> out;
  for (const Pose& p : poses) {
    Twist xi;
    for (int j = 0; j < 6; ++j) xi[j] = normal(rng);
    xi *= magnitude / xi.norm();
    out.push_back(se3_exp(xi) * p);
  }
  return out;
}

void cmd_synth(const RunConfig& config, const fs::path& out_dir) {
  config.validate();
  GroundTruthBundle bundle = render_scene(config.scene);
  render_observations(bundle, config.scene);
  write_bundle(out_dir, bundle, perturb_poses(bundle.poses, config.seed_perturbation, config.seed));
  write_config(out_dir / "config.txt", config);
}

RunSummary cmd_run(const RunConfig& config, const fs::path& in_dir, const fs::path& out_dir) {
  config.validate();
  const int T = count_frames(in_dir, "B_");
  require(T >= 2, ErrorCode::kInvalidArgument,
          "run needs at least 2 observations B_<t>.pfm in " + in_dir.string());
  std::vector<Image> observed = read_frames(in_dir, "B_", T);
  if (config.input_upsample > 1)
    for (Image& b : observed) b = upsample_bicubic(b, config.input_upsample);
  const fs::path seed_path = in_dir / "seed_poses.txt";
  require(fs::exists(seed_path), ErrorCode::kIo, "missing seed poses " + seed_path.string());
  const std::vector<Pose> seeds = read_poses(seed_path);

  fs::create_directories(out_dir);
  write_config(out_dir / "config.txt", config);
  const Problem problem = make_problem(std::move(observed), config.capture.factor, config.energy);
  const CheckpointFn checkpoint = [&](int iter, const SequenceState& state,
                                      const std::vector<EnergyRecord>& history) {
    write_checkpoint(out_dir / ("iter_" + std::to_string(iter)), state, history);
  };
  const PipelineResult result =
      run_pipeline(problem, seeds, config.capture, config.energy, config.solver, checkpoint);
  write_checkpoint(out_dir, result.state, result.history);
  std::ofstream flags(out_dir / "flags.txt");
  for (int t : result.flagged_frames) flags << "frame " << t << " flagged\n";

  RunSummary s;
  s.frames = T;
  s.iterations = config.solver.max_iter;
  s.initial_energy = result.history.front().energy.total;
  s.final_energy = result.history.back().energy.total;
  s.flagged_frames = result.flagged_frames;
  return s;
}

std::vector<EvalReport> cmd_eval(const std::vector<fs::path>& est_dirs, const fs::path& gt_dir,
                                 const fs::path& report_path) {
  require(!est_dirs.empty(), ErrorCode::kInvalidArgument, "eval needs at least one estimate");
  const std::vector<Pose> gt_poses = read_poses(gt_dir / "gt_poses.txt");
  const int T = static_cast<int>(gt_poses.size());
  const auto gt_latent = read_frames(gt_dir, "gt_I_", T);
  std::vector<InverseDepthMap> gt_depth;
  for (const Image& d : read_frames(gt_dir, "gt_D_", T)) gt_depth.push_back(image_to_depth(d));

  std::vector<EvalReport> reports;
  std::string text, csv = EvalReport::csv_header();
  for (const fs::path& dir : est_dirs) {
    const auto latent = read_frames(dir, "I_", T);
    std::vector<InverseDepthMap> depth;
    for (const Image& d : read_frames(dir, "D_", T)) depth.push_back(image_to_depth(d));
    const std::vector<Pose> poses = read_poses(dir / "poses.txt");
    EvalReport r = evaluate(latent, depth, poses, gt_latent, gt_depth, gt_poses);
    r.method = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    text += r.text();
    csv += r.csv_rows();
    reports.push_back(std::move(r));
  }
  if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
  std::ofstream out(report_path);
  require(out.good(), ErrorCode::kIo, "cannot write " + report_path.string());
  out << text;
  fs::path csv_path = report_path;
  csv_path.replace_extension(".csv");
  std::ofstream out_csv(csv_path);
  require(out_csv.good(), ErrorCode::kIo, "cannot write " + csv_path.string());
  out_csv << csv;
  return reports;
}

}  // namespace jdsr
