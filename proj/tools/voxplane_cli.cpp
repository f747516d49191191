/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "voxplane/bench.hpp"
#include "voxplane/config.hpp"
#include "voxplane/io.hpp"
#include "voxplane/odometry.hpp"

namespace fs = std::filesystem;
using namespace voxplane;

namespace {

struct RunOptions {
  std::string config;
  std::string dataset = "synth";
  std::string bin_dir;
  std::string gt;
  std::string calib;
  std::string out_traj;
  std::string stats;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> frames;
  bool no_merge = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config, "key = value configuration file");
  cmd->add_option("--dataset", o.dataset, "synth or kitti")->check(CLI::IsMember({"synth", "kitti"}));
  cmd->add_option("--bin-dir", o.bin_dir, "directory of KITTI velodyne .bin scans");
  cmd->add_option("--gt", o.gt, "ground-truth poses, KITTI format");
  cmd->add_option("--calib", o.calib, "KITTI calib.txt; ground truth is then read as camera poses");
  cmd->add_option("--out-traj", o.out_traj, "output prefix; writes <prefix>.kitti and <prefix>.tum");
  cmd->add_option("--stats", o.stats, "per-frame CSV statistics");
  cmd->add_option("--seed", o.seed, "overrides rng.seed");
  cmd->add_option("--frames", o.frames, "overrides synth.frames");
  cmd->add_flag("--no-merge", o.no_merge, "disable plane merging");
}

RunConfig make_config(const RunOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.frames) cfg.synth.frames = *o.frames;
  if (o.no_merge) cfg.merge.enabled = false;
  cfg.validate();
  return cfg;
}

std::unique_ptr<FrameSource> make_source(const RunConfig& cfg, RunOptions& o) {
  if (!o.bin_dir.empty()) o.dataset = "kitti";
  if (o.dataset == "synth") return std::make_unique<SynthSource>(SynthSource::from_config(cfg));
  if (o.bin_dir.empty()) throw InvalidInputError("--dataset kitti needs --bin-dir");
  std::optional<Trajectory> gt;
  if (!o.gt.empty()) gt = read_kitti_poses(o.gt);
  return std::make_unique<KittiSource>(o.bin_dir, cfg, std::move(gt));
}

struct RunOutput {
  OdometryResult result;
  std::optional<double> ate;
};

RunOutput execute(RunOptions& o) {
  const RunConfig cfg = make_config(o);
  const auto source = make_source(cfg, o);
  std::ofstream stats_file;
  std::optional<StatsWriter> writer;
  if (!o.stats.empty()) {
    stats_file.open(o.stats);
    if (!stats_file) throw InvalidInputError("cannot write " + o.stats);
    writer.emplace(stats_file);
  }
  RunOutput out;
  out.result = run_odometry(cfg, *source, writer ? &*writer : nullptr);

  Trajectory reported = out.result.trajectory;
  if (!o.calib.empty()) {
    const auto tr = read_kitti_calib_tr(o.calib);
    if (!tr) throw MalformedFileError(o.calib + ": no Tr entry");
    reported = change_frame(reported, *tr);
  }
  if (!o.out_traj.empty()) {
    std::ofstream kitti(o.out_traj + ".kitti"), tum(o.out_traj + ".tum");
    if (!kitti || !tum) throw InvalidInputError("cannot write trajectory files with prefix " + o.out_traj);
    write_kitti_poses(kitti, reported);
    write_tum(tum, reported);
  }
  if (const auto gt = source->ground_truth()) out.ate = ate(reported, *gt);
  return out;
}

void print_summary(const RunOutput& out) {
  const OdometryResult& r = out.result;
  const MemoryReport mem = r.map->memory_stats();
  std::cout << "frames: " << r.trajectory.size() << "\n"
            << "degenerate frames: " << r.degenerate_frames << "\n"
            << "voxels: buffering " << mem.count(VoxelState::Buffering) << ", planar "
            << mem.count(VoxelState::Planar) << ", subdivided " << mem.count(VoxelState::Subdivided)
            << ", merged " << mem.count(VoxelState::MergedRedirect) << ", degenerate "
            << mem.count(VoxelState::Degenerate) << "\n"
            << "estimated map bytes: " << mem.estimated_bytes << "\n";
  if (out.ate) std::cout << std::setprecision(6) << "ATE [m]: " << *out.ate << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voxplane: point-free probabilistic plane mapping and odometry"};
  app.require_subcommand(1);

  RunOptions run_opts;
  CLI::App* run = app.add_subcommand("run", "run odometry on a synthetic scene or a KITTI sequence");
  add_run_options(run, run_opts);

  RunOptions export_opts;
  std::string ply_out;
  CLI::App* exp = app.add_subcommand("export-map", "run odometry and write the plane map as PLY");
  add_run_options(exp, export_opts);
  exp->add_option("--output", ply_out, "PLY file")->required();

  RunOptions synth_opts;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "write simulated scans as KITTI .bin files with ground truth");
  synth->add_option("--config", synth_opts.config, "key = value configuration file");
  synth->add_option("--seed", synth_opts.seed, "overrides rng.seed");
  synth->add_option("--frames", synth_opts.frames, "overrides synth.frames");
  synth->add_option("--output", synth_out, "output directory")->required();

  BenchConfig bench_cfg;
  bool bench_check = false;
  CLI::App* bench = app.add_subcommand("bench-update", "per-point update latency, cumulative versus retained points");
  bench->add_option("--seed", bench_cfg.seed, "sample seed");
  bench->add_option("--repetitions", bench_cfg.repetitions, "timed repetitions per count");
  bench->add_flag("--check", bench_check, "exit non-zero unless ratio <= 2, slope > 0.8, difference <= 1e-8");

  std::size_t oracle_count = 1000;
  std::uint64_t oracle_seed = 1;
  double oracle_tol = 1e-8;
  CLI::App* oracle = app.add_subcommand("oracle-check", "compare cumulative and direct plane covariances");
  oracle->add_option("--count", oracle_count, "random instances");
  oracle->add_option("--seed", oracle_seed, "instance seed");
  oracle->add_option("--tolerance", oracle_tol, "relative Frobenius tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      print_summary(execute(run_opts));
    } else if (exp->parsed()) {
      const RunOutput out = execute(export_opts);
      std::ofstream ply(ply_out);
      if (!ply) throw InvalidInputError("cannot write " + ply_out);
      write_plane_ply(ply, *out.result.map);
      print_summary(out);
    } else if (synth->parsed()) {
      const RunConfig cfg = make_config(synth_opts);
      const SynthSource source = SynthSource::from_config(cfg);
      const fs::path dir(synth_out);
      fs::create_directories(dir / "velodyne");
      for (std::size_t k = 0; k < source.size(); ++k) {
        std::ostringstream name;
        name << std::setw(6) << std::setfill('0') << k << ".bin";
        write_kitti_bin((dir / "velodyne" / name.str()).string(), source.frame(k).points);
      }
      std::ofstream poses(dir / "poses.txt"), scene(dir / "scene.txt");
      write_kitti_poses(poses, *source.ground_truth());
      write_scene(scene, source.scene());
      std::cout << "wrote " << source.size() << " scans to " << (dir / "velodyne").string() << "\n";
    } else if (bench->parsed()) {
      const BenchResult r = bench_update(bench_cfg);
      print_bench(std::cout, r);
      if (bench_check && !(r.cumulative_ratio <= 2.0 && r.oracle_slope > 0.8 && r.equivalence_error <= 1e-8)) {
        return 1;
      }
    } else if (oracle->parsed()) {
      const OracleCheckResult r = oracle_check(oracle_count, oracle_seed, oracle_tol);
      std::cout << "instances: " << r.instances << "\nfailures: " << r.failures << "\nmax relative error: "
                << std::scientific << r.max_error << std::defaultfloat << "\nseconds: " << r.seconds << "\n";
      return r.failures == 0 ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
