#include "affordkit/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "affordkit/afford/extract.hpp"
#include "affordkit/cli/gradcheck.hpp"
#include "affordkit/cli/ply.hpp"
#include "affordkit/core/io.hpp"
#include "affordkit/denoiser/mlp.hpp"
#include "affordkit/geom/camera.hpp"
#include "affordkit/diffusion/sampler.hpp"
#include "affordkit/ingest/synth.hpp"
#include "affordkit/metric/refine.hpp"
#include "affordkit/tsdf/volume.hpp"

namespace affordkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json points_to_json(const Points3& points) {
  json out = json::array();
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out.push_back({points(i, 0), points(i, 1), points(i, 2)});
  return out;
}

Points3 points_from_json(const json& j) {
  Points3 out(j.size(), 3);
  for (std::size_t i = 0; i < j.size(); ++i)
    for (int c = 0; c < 3; ++c) out(static_cast<Eigen::Index>(i), c) = j[i][c].get<double>();
  return out;
}

json pose_to_json(const geom::Posed& pose) {
  const auto& q = pose.rotation();
  const auto& t = pose.translation();
  return json{{"q", {q.x(), q.y(), q.z(), q.w()}}, {"t", {t.x(), t.y(), t.z()}}};
}

geom::Posed pose_from_json(const json& j) {
  const auto& q = j.at("q");
  const auto& t = j.at("t");
  return geom::Posed(
      Eigen::Quaterniond(q[3].get<double>(), q[0].get<double>(), q[1].get<double>(),
                         q[2].get<double>()),
      Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>()));
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestParse, path.string() + ": " + e.what());
  }
  return j;
}

void dump_json(const json& j, const fs::path& path) {
  atomic_write(path, [&](std::ofstream& out) { out << j.dump(1) << "\n"; });
}

metric::RefinementResult refined_from_json(const json& j) {
  metric::RefinementResult refined;
  refined.reference_index = j.at("reference_index").get<int>();
  for (const auto& s : j.at("scales")) refined.scales.push_back(s.get<double>());
  for (const auto& p : j.at("poses")) refined.poses.push_back(pose_from_json(p));
  if (j.contains("energy_trace"))
    for (const auto& e : j.at("energy_trace")) refined.energy_trace.push_back(e.get<double>());
  return refined;
}

struct SampleFile {
  afford::AffordanceSample sample;
};

SampleFile sample_from_json(const json& j) {
  SampleFile out;
  out.sample.instruction = j.value("instruction", "");
  out.sample.contact_points = points_from_json(j.at("contact"));
  out.sample.goal_points = points_from_json(j.at("goal"));
  const auto traj = points_from_json(j.at("trajectory"));
  out.sample.trajectory = traj;
  return out;
}

// ---- subcommands ----

struct SynthArgs {
  std::string out;
  std::string preset = "bowl";
  int frames = 6;
  int landmarks = 150;
  double scale = 2.0;
  double depth_noise = 0.0;
  double pose_noise_rot_deg = 0.0;
  double pose_noise_trans = 0.0;
  std::uint64_t seed = 1;
  bool no_hand = false;
};

int cmd_synth(const SynthArgs& args) {
  ingest::SynthConfig cfg;
  cfg.frames = args.frames;
  cfg.landmarks = args.landmarks;
  cfg.scale = args.scale;
  cfg.depth_noise = args.depth_noise;
  cfg.pose_noise_rot = args.pose_noise_rot_deg * M_PI / 180.0;
  cfg.pose_noise_trans = args.pose_noise_trans;
  cfg.hand = !args.no_hand;
  cfg.geometry = args.preset == "fronto" ? ingest::SynthGeometry::FrontoWall
                                         : ingest::SynthGeometry::Bowl;
  auto [scene, gt] = ingest::synth_scene(cfg, args.seed);
  ingest::write_scene(scene, args.out);

  json jgt{{"s_g", gt.s_g}, {"scales", gt.scales}};
  jgt["poses"] = json::array();
  for (const auto& p : gt.poses) jgt["poses"].push_back(pose_to_json(p));
  jgt["hand_trajectory"] = points_to_json(gt.hand_trajectory);
  dump_json(jgt, fs::path(args.out) / "ground_truth.json");
  std::cout << "wrote scene with " << scene.frame_count() << " frames to " << args.out << "\n";
  return 0;
}

int cmd_calibrate(const std::string& manifest, const std::string& out) {
  const auto scene = ingest::load_scene(manifest);
  const auto solution = metric::solve_global_scale(scene);
  dump_json(json{{"s_g", solution.s_g},
                 {"residual", solution.residual},
                 {"inlier_count", solution.inlier_count}},
            out);
  std::cout << "s_g = " << solution.s_g << " over " << solution.inlier_count
            << " observations (residual " << solution.residual << ")\n";
  return 0;
}

struct RefineArgs {
  std::string manifest, scale, out;
  metric::RefineOptions options;
};

int cmd_refine(const RefineArgs& args) {
  const auto scene = ingest::load_scene(args.manifest);
  const double s_g = load_json(args.scale).at("s_g").get<double>();
  const auto refined = metric::refine_poses_scales(scene, s_g, args.options);

  json j{{"reference_index", refined.reference_index},
         {"scales", refined.scales},
         {"energy_trace", refined.energy_trace}};
  j["poses"] = json::array();
  for (const auto& p : refined.poses) j["poses"].push_back(pose_to_json(p));
  dump_json(j, args.out);
  std::cout << "refined " << refined.poses.size() << " poses; energy "
            << (refined.energy_trace.empty() ? 0.0 : refined.energy_trace.front()) << " -> "
            << (refined.energy_trace.empty() ? 0.0 : refined.energy_trace.back()) << "\n";
  return 0;
}

struct ExtractArgs {
  std::string manifest, refined, out, ply;
  int n_contact = 32, n_goal = 32;
  double cell = 0.01;
  double max_energy = std::numeric_limits<double>::infinity();
  std::string instruction = "synthetic interaction";
};

int cmd_extract(const ExtractArgs& args) {
  const auto scene = ingest::load_scene(args.manifest);
  const auto refined = refined_from_json(load_json(args.refined));
  if (!refined.energy_trace.empty() && refined.energy_trace.back() > args.max_energy)
    throw Error(ErrorCode::InvalidArgument,
                "refinement energy above the label quality cutoff");

  afford::AffordanceSample sample;
  sample.instruction = args.instruction;
  sample.trajectory = afford::extract_trajectory(scene, refined);
  std::tie(sample.contact_points, sample.goal_points) =
      afford::extract_contact_goal(scene, refined, args.n_contact, args.n_goal, args.cell);

  dump_json(json{{"instruction", sample.instruction},
                 {"contact", points_to_json(sample.contact_points)},
                 {"goal", points_to_json(sample.goal_points)},
                 {"trajectory", points_to_json(sample.trajectory)}},
            args.out);

  if (!args.ply.empty()) {
    Points3 all(sample.contact_points.rows() + sample.goal_points.rows(), 3);
    all << sample.contact_points, sample.goal_points;
    export_ply(all, {sample.trajectory}, {0}, args.ply);
  }
  std::cout << "extracted trajectory with " << sample.trajectory.rows() << " waypoints, "
            << sample.contact_points.rows() << " contact and " << sample.goal_points.rows()
            << " goal points\n";
  return 0;
}

struct FuseArgs {
  std::string manifest, out, refined;
  int frame = 0;
  double voxel = 0.01;
  int trunc_voxels = 5;
  double zmin = 0.0, zmax = 0.0;  // 0 = derive from the frame's depth range
};

int cmd_fuse(const FuseArgs& args) {
  const auto scene = ingest::load_scene(args.manifest);
  if (args.frame < 0 || args.frame >= scene.frame_count())
    throw Error(ErrorCode::InvalidArgument, "frame index out of range");
  const auto& K = scene.frames.front().intrinsics;

  double zmin = args.zmin, zmax = args.zmax;
  if (zmin <= 0.0 || zmax <= 0.0) {
    double lo = std::numeric_limits<double>::max(), hi = 0.0;
    const auto& depth = scene.frames[args.frame].depth;
    for (Eigen::Index i = 0; i < depth.size(); ++i) {
      const double d = depth.data()[i];
      if (!std::isfinite(d) || d <= 0.0) continue;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    if (!(hi > 0.0)) throw Error(ErrorCode::InvalidArgument, "frame has no valid depth");
    if (zmin <= 0.0) zmin = std::max(0.05, 0.9 * lo);
    if (zmax <= 0.0) zmax = 1.05 * hi;
  }

  // grid bounds from the frame-0 frustum across the configured depth range
  Vec3 lower = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 upper = Vec3::Constant(std::numeric_limits<double>::lowest());
  for (const double d : {zmin, zmax})
    for (const double u : {0.0, static_cast<double>(K.width - 1)})
      for (const double v : {0.0, static_cast<double>(K.height - 1)}) {
        const Vec3 corner = geom::backproject<double>(Vec2(u, v), d, K);
        lower = lower.cwiseMin(corner);
        upper = upper.cwiseMax(corner);
      }
  auto volume = tsdf::make_volume(lower, upper, args.voxel, args.trunc_voxels * args.voxel);

  geom::Posed pose = geom::Posed::identity();
  ImageXd depth = scene.frames[args.frame].depth;
  if (args.frame != 0) {
    if (args.refined.empty())
      throw Error(ErrorCode::InvalidArgument, "--refined is required when fusing frame != 0");
    const auto refined = refined_from_json(load_json(args.refined));
    const geom::Posed rel = refined.poses[0].inverse() * refined.poses[args.frame];
    // metric frame-0 coordinates: scale the relative translation and depth
    pose = geom::Posed(rel.rotation(), refined.scales[0] * rel.translation());
    depth *= refined.scales[0] / refined.scales[args.frame];
  }
  tsdf::fuse_frame(volume, depth, K, pose);
  tsdf::save_volume(volume, args.out);

  std::size_t observed = 0;
  for (const double w : volume.weights) observed += w > 0.0;
  std::cout << "fused frame " << args.frame << " into " << volume.dims.transpose()
            << " grid (" << observed << " observed voxels)\n";
  return 0;
}

struct TrainArgs {
  std::string data, out, loss_out;
  int epochs = 200;
  std::uint64_t seed = 1;
  double lr = 1e-3;
  int steps = 100;
  double beta_start = 1e-4, beta_end = 0.02;
  std::vector<int> hidden = {256, 256};
};

int cmd_train(const TrainArgs& args) {
  std::vector<fs::path> files;
  if (!fs::is_directory(args.data))
    throw Error(ErrorCode::MissingFile, args.data + " is not a directory");
  for (const auto& entry : fs::directory_iterator(args.data))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::EmptyDataset, "no sample files under " + args.data);

  std::vector<denoiser::TrainingSample> dataset;
  for (const auto& file : files) {
    const auto sample = sample_from_json(load_json(file)).sample;
    denoiser::TrainingSample item;
    item.conditioning = denoiser::make_conditioning(sample.goal_points.row(0).transpose(),
                                                    sample.contact_points.row(0).transpose());
    item.sample = sample;
    dataset.push_back(std::move(item));
  }

  denoiser::MlpConfig cfg;
  cfg.horizon = static_cast<int>(dataset.front().sample.trajectory.rows());
  cfg.cond_dims = static_cast<int>(dataset.front().conditioning.size());
  cfg.hidden = args.hidden;
  denoiser::MlpDenoiser den(cfg);
  den.initialize(args.seed);

  const auto schedule = diffusion::make_schedule(args.steps, args.beta_start, args.beta_end);
  const auto report = denoiser::mlp_train(den, dataset, schedule, args.epochs, args.lr, args.seed);
  denoiser::save_mlp(den, args.out);
  if (!args.loss_out.empty()) dump_json(json(report.loss_curve), args.loss_out);

  const std::size_t n = report.loss_curve.size();
  std::cout << "trained on " << dataset.size() << " samples, " << n << " steps; loss "
            << report.loss_curve.front() << " -> " << report.loss_curve.back() << "\n";
  return 0;
}

struct GenerateArgs {
  std::string volume, sample, model, out, ply;
  int n = 32;
  std::uint64_t seed = 1;
  double lambda_g = 1.0, lambda_c = 1.0, lambda_n = 0.1;
  int steps = 100;
  double beta_start = 1e-4, beta_end = 0.02;
  int guide_steps = 1;
  std::string mode = "direct";
  int agent_points = 32;
  double agent_radius = 0.04;
  std::string agent_primitive = "sphere";
  int object_points = 0;
  double object_radius = 0.08;
  int threads = 0;
};

int cmd_generate(const GenerateArgs& args) {
  const auto volume = tsdf::load_volume(args.volume);
  const auto sample = sample_from_json(load_json(args.sample)).sample;
  if (sample.contact_points.rows() == 0 || sample.goal_points.rows() == 0)
    throw Error(ErrorCode::InvalidArgument, "sample needs contact and goal points");
  const auto den = denoiser::load_mlp(args.model);

  const Vec3 contact = sample.contact_points.row(0).transpose();
  const Vec3 goal = sample.goal_points.row(0).transpose();
  const Eigen::VectorXd conditioning = denoiser::make_conditioning(goal, contact);

  costs::GuidanceConfig config;
  config.lambda_goal = args.lambda_g;
  config.lambda_collide = args.lambda_c;
  config.lambda_normal = args.lambda_n;
  config.goals = sample.goal_points;
  config.volume = &volume;
  if (args.lambda_c > 0.0) {
    const auto primitive = args.agent_primitive == "box" ? costs::AgentPrimitive::Box
                                                         : costs::AgentPrimitive::Sphere;
    config.agent_points =
        costs::gripper_points(primitive, args.agent_points, args.agent_radius, contact);
    if (args.object_points > 0) {
      const Points3 extra =
          costs::surface_points_near(volume, contact, args.object_radius, args.object_points);
      Points3 merged(config.agent_points.rows() + extra.rows(), 3);
      merged << config.agent_points, extra;
      config.agent_points = merged;
    }
  }
  if (args.lambda_n > 0.0) config.normal = tsdf::normal_from_points(volume, sample.contact_points);

  diffusion::SampleOptions options;
  options.guide_steps = args.guide_steps;
  options.mode = args.mode == "denoiser" ? diffusion::GuidanceMode::ThroughDenoiser
                                         : diffusion::GuidanceMode::DirectOnX0;
  options.feature_volume = &volume;
  options.threads = args.threads;

  const auto schedule = diffusion::make_schedule(args.steps, args.beta_start, args.beta_end);
  const auto batch =
      diffusion::guided_sample(den, conditioning, config, schedule, args.n, args.seed, options);

  json jbatch{{"lambda", {{"goal", args.lambda_g}, {"collide", args.lambda_c}, {"normal", args.lambda_n}}},
              {"seeds", batch.seeds}};
  jbatch["trajectories"] = json::array();
  jbatch["costs"] = json::array();
  for (int i = 0; i < args.n; ++i) {
    jbatch["trajectories"].push_back(points_to_json(batch.trajectories[i]));
    jbatch["costs"].push_back(json{{"total", batch.costs[i].total},
                                   {"goal", batch.costs[i].goal},
                                   {"collide", batch.costs[i].collide},
                                   {"normal", batch.costs[i].normal}});
  }
  dump_json(jbatch, args.out);

  if (!args.ply.empty()) {
    const auto order = diffusion::rank_by_cost(batch);
    std::vector<std::uint8_t> gray(order.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank)
      gray[order[rank]] = static_cast<std::uint8_t>(
          order.size() > 1 ? 255.0 * rank / (order.size() - 1) : 0);
    Points3 labels(sample.goal_points.rows(), 3);
    labels << sample.goal_points;
    export_ply(labels, batch.trajectories, gray, args.ply);
  }
  std::cout << "sampled " << args.n << " trajectories\n";
  return 0;
}

int cmd_rank(const std::string& batch_path) {
  const json j = load_json(batch_path);
  diffusion::SampleBatch batch;
  for (const auto& t : j.at("trajectories")) batch.trajectories.push_back(points_from_json(t));
  for (const auto& c : j.at("costs")) {
    costs::CostReport report;
    report.total = c.at("total").get<double>();
    report.goal = c.at("goal").get<double>();
    report.collide = c.at("collide").get<double>();
    report.normal = c.at("normal").get<double>();
    batch.costs.push_back(report);
  }
  const auto order = diffusion::rank_by_cost(batch);
  std::cout << "rank index total goal collide normal\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& c = batch.costs[order[r]];
    std::cout << r << " " << order[r] << " " << c.total << " " << c.goal << " " << c.collide
              << " " << c.normal << "\n";
  }
  return 0;
}

struct GradcheckArgs {
  std::vector<std::string> targets;
  std::uint64_t seed = 1;
  int points = 100;
  std::string corrupt;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  GradcheckOptions options;
  options.points_per_target = args.points;
  options.corrupt_target = args.corrupt;
  const auto report = run_gradcheck(args.targets, args.seed, options);
  for (const auto& t : report.targets)
    std::cout << t.name << ": worst rel error " << t.worst_rel_error << " over "
              << t.evaluations << " points "
              << (t.worst_rel_error < report.threshold ? "[ok]" : "[FAIL]") << "\n";
  return report.passed() ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"affordance extraction and guided trajectory generation toolkit", "affordkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scene with ground truth");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--preset", synth.preset, "fronto|bowl")
      ->check(CLI::IsMember({"fronto", "bowl"}));
  synth_cmd->add_option("--frames", synth.frames, "frame count");
  synth_cmd->add_option("--landmarks", synth.landmarks, "landmark count");
  synth_cmd->add_option("--scale", synth.scale, "true global scale");
  synth_cmd->add_option("--depth-noise", synth.depth_noise, "multiplicative depth noise stddev");
  synth_cmd->add_option("--pose-noise-rot-deg", synth.pose_noise_rot_deg,
                        "pose estimate rotation noise (degrees)");
  synth_cmd->add_option("--pose-noise-trans", synth.pose_noise_trans,
                        "pose estimate translation noise (world units)");
  synth_cmd->add_option("--seed", synth.seed, "rng seed");
  synth_cmd->add_flag("--no-hand", synth.no_hand, "skip the moving hand blob");

  std::string cal_manifest, cal_out;
  auto* cal_cmd = app.add_subcommand("calibrate-scale", "recover the global metric scale");
  cal_cmd->add_option("--manifest", cal_manifest, "scene manifest")->required();
  cal_cmd->add_option("--out", cal_out, "output scale.json")->required();

  RefineArgs refine;
  auto* refine_cmd = app.add_subcommand("refine-poses", "refine poses and per-frame scales");
  refine_cmd->add_option("--manifest", refine.manifest, "scene manifest")->required();
  refine_cmd->add_option("--scale", refine.scale, "scale.json from calibrate-scale")->required();
  refine_cmd->add_option("--out", refine.out, "output refined.json")->required();
  refine_cmd->add_option("--max-outer", refine.options.max_outer, "correspondence rebuilds");
  refine_cmd->add_option("--max-inner", refine.options.max_inner, "descent steps per rebuild");
  refine_cmd->add_option("--stride", refine.options.stride, "pixel decimation stride");
  refine_cmd->add_option("--tol", refine.options.tolerance, "relative energy tolerance");
  refine_cmd->add_option("--huber", refine.options.huber_delta,
                         "robust kernel width (0 disables)");

  ExtractArgs extract;
  auto* extract_cmd = app.add_subcommand("extract-affordance", "extract labels from a scene");
  extract_cmd->add_option("--manifest", extract.manifest, "scene manifest")->required();
  extract_cmd->add_option("--refined", extract.refined, "refined.json")->required();
  extract_cmd->add_option("--out", extract.out, "output sample.json")->required();
  extract_cmd->add_option("--ply", extract.ply, "optional PLY export");
  extract_cmd->add_option("--contact", extract.n_contact, "contact point budget");
  extract_cmd->add_option("--goal", extract.n_goal, "goal point budget");
  extract_cmd->add_option("--cell", extract.cell, "downsample cell size (m)");
  extract_cmd->add_option("--max-energy", extract.max_energy,
                          "reject labels whose refinement energy exceeds this");
  extract_cmd->add_option("--instruction", extract.instruction, "task description");

  FuseArgs fuse;
  auto* fuse_cmd = app.add_subcommand("fuse-tsdf", "fuse a depth frame into a TSDF volume");
  fuse_cmd->add_option("--manifest", fuse.manifest, "scene manifest")->required();
  fuse_cmd->add_option("--frame", fuse.frame, "frame to fuse");
  fuse_cmd->add_option("--out", fuse.out, "output volume")->required();
  fuse_cmd->add_option("--refined", fuse.refined, "refined.json (needed for frame != 0)");
  fuse_cmd->add_option("--voxel", fuse.voxel, "voxel size (m)");
  fuse_cmd->add_option("--trunc-voxels", fuse.trunc_voxels, "truncation in voxels");
  fuse_cmd->add_option("--zmin", fuse.zmin, "frustum near depth (m); 0 = from the depth data");
  fuse_cmd->add_option("--zmax", fuse.zmax, "frustum far depth (m); 0 = from the depth data");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-denoiser", "train the trajectory denoiser");
  train_cmd->add_option("--data", train.data, "directory of sample.json files")->required();
  train_cmd->add_option("--epochs", train.epochs, "training epochs");
  train_cmd->add_option("--seed", train.seed, "rng seed");
  train_cmd->add_option("--out", train.out, "output model")->required();
  train_cmd->add_option("--lr", train.lr, "learning rate");
  train_cmd->add_option("--steps", train.steps, "diffusion steps");
  train_cmd->add_option("--beta-start", train.beta_start, "schedule start");
  train_cmd->add_option("--beta-end", train.beta_end, "schedule end");
  train_cmd->add_option("--hidden", train.hidden, "hidden layer widths");
  train_cmd->add_option("--loss-out", train.loss_out, "optional loss curve json");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "sample guided interaction trajectories");
  gen_cmd->add_option("--volume", gen.volume, "TSDF volume")->required();
  gen_cmd->add_option("--sample", gen.sample, "sample.json with contact/goal labels")->required();
  gen_cmd->add_option("--model", gen.model, "trained denoiser")->required();
  gen_cmd->add_option("--out", gen.out, "output batch.json")->required();
  gen_cmd->add_option("--n", gen.n, "number of samples");
  gen_cmd->add_option("--seed", gen.seed, "rng seed");
  gen_cmd->add_option("--lambda-g", gen.lambda_g, "goal guidance weight");
  gen_cmd->add_option("--lambda-c", gen.lambda_c, "collision guidance weight");
  gen_cmd->add_option("--lambda-n", gen.lambda_n, "normal guidance weight");
  gen_cmd->add_option("--steps", gen.steps, "diffusion steps");
  gen_cmd->add_option("--beta-start", gen.beta_start, "schedule start");
  gen_cmd->add_option("--beta-end", gen.beta_end, "schedule end");
  gen_cmd->add_option("--g-steps", gen.guide_steps, "guidance steps per denoise step");
  gen_cmd->add_option("--mode", gen.mode, "direct|denoiser gradient mode")
      ->check(CLI::IsMember({"direct", "denoiser"}));
  gen_cmd->add_option("--agent-points", gen.agent_points, "gripper sample count");
  gen_cmd->add_option("--agent-radius", gen.agent_radius, "gripper primitive radius (m)");
  gen_cmd->add_option("--agent-primitive", gen.agent_primitive, "sphere|box")
      ->check(CLI::IsMember({"sphere", "box"}));
  gen_cmd->add_option("--object-points", gen.object_points,
                      "extra object surface samples near the contact");
  gen_cmd->add_option("--object-radius", gen.object_radius, "object surface search radius (m)");
  gen_cmd->add_option("--threads", gen.threads, "worker threads (0 = auto)");
  gen_cmd->add_option("--ply", gen.ply, "optional PLY export, shaded by cost rank");

  std::string rank_batch;
  auto* rank_cmd = app.add_subcommand("rank", "order a sample batch by total cost");
  rank_cmd->add_option("--batch", rank_batch, "batch.json from generate")->required();

  GradcheckArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "verify analytic gradients");
  grad_cmd->add_option("--targets", grad.targets, "eq2 goal collide normal trilinear mlp")
      ->required()
      ->delimiter(',');
  grad_cmd->add_option("--seed", grad.seed, "rng seed");
  grad_cmd->add_option("--points", grad.points, "evaluation points per target");
  grad_cmd->add_option("--corrupt", grad.corrupt,
                       "test fixture: corrupt the named target's gradient");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (cal_cmd->parsed()) return cmd_calibrate(cal_manifest, cal_out);
    if (refine_cmd->parsed()) return cmd_refine(refine);
    if (extract_cmd->parsed()) return cmd_extract(extract);
    if (fuse_cmd->parsed()) return cmd_fuse(fuse);
    if (train_cmd->parsed()) return cmd_train(train);
    if (gen_cmd->parsed()) return cmd_generate(gen);
    if (rank_cmd->parsed()) return cmd_rank(rank_batch);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace affordkit::cli
