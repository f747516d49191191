/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "voxplane/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "voxplane/random.hpp"

namespace voxplane {

void RunConfig::validate() const {
  map.validate();
  merge.validate();
  noise.validate();
  solver.validate();
  if (rng != Philox4x32::kName) throw ConfigError("rng.algorithm must be '" + std::string(Philox4x32::kName) + "'");
  if (synth.frames == 0) throw ConfigError("synth.frames must be positive");
  if (synth.rays == 0) throw ConfigError("synth.rays must be positive");
  if (!(synth.dims.array() > 0.0).all()) throw ConfigError("synth.dims must be positive");
  if (!(synth.noise_scale >= 0.0)) throw ConfigError("synth.noise_scale must be non-negative");
  if (preprocess.downsample < 0.0) throw ConfigError("preprocess.downsample must be non-negative");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  double out;
  std::string rest;
  if (!(in >> out) || (in >> rest)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

Vec3 to_vec3(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  Vec3 out;
  std::string rest;
  if (!(in >> out.x() >> out.y() >> out.z()) || (in >> rest)) {
    throw ConfigError(key + ": expected three numbers, got '" + v + "'");
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"map.root_voxel_size", [](RunConfig& c, auto& k, auto& v) { c.map.root_voxel_size = to_double(k, v); }},
      {"map.max_layer", [](RunConfig& c, auto& k, auto& v) { c.map.max_layer = static_cast<int>(to_uint(k, v)); }},
      {"map.init_points", [](RunConfig& c, auto& k, auto& v) { c.map.init_points = to_uint(k, v); }},
      {"map.eta", [](RunConfig& c, auto& k, auto& v) { c.map.eta = to_double(k, v); }},
      {"map.refresh_every",
       [](RunConfig& c, auto& k, auto& v) { c.map.refresh_every = static_cast<std::uint32_t>(to_uint(k, v)); }},
      {"map.consistency_factor", [](RunConfig& c, auto& k, auto& v) { c.map.consistency_factor = to_double(k, v); }},
      {"map.max_updates",
       [](RunConfig& c, auto& k, auto& v) {
         if (v == "none" || v == "unlimited") {
           c.map.max_updates.reset();
         } else {
           c.map.max_updates = to_uint(k, v);
         }
       }},
      {"merge.enabled", [](RunConfig& c, auto& k, auto& v) { c.merge.enabled = to_bool(k, v); }},
      {"merge.trigger_count", [](RunConfig& c, auto& k, auto& v) { c.merge.trigger_count = to_uint(k, v); }},
      {"merge.delta_theta", [](RunConfig& c, auto& k, auto& v) { c.merge.delta_theta = to_double(k, v); }},
      {"merge.delta_phi", [](RunConfig& c, auto& k, auto& v) { c.merge.delta_phi = to_double(k, v); }},
      {"merge.delta_d", [](RunConfig& c, auto& k, auto& v) { c.merge.delta_d = to_double(k, v); }},
      {"merge.delta_u", [](RunConfig& c, auto& k, auto& v) { c.merge.delta_u = to_double(k, v); }},
      {"merge.delta_v", [](RunConfig& c, auto& k, auto& v) { c.merge.delta_v = to_double(k, v); }},
      {"noise.sigma_range", [](RunConfig& c, auto& k, auto& v) { c.noise.sigma_range = to_double(k, v); }},
      {"noise.sigma_bearing", [](RunConfig& c, auto& k, auto& v) { c.noise.sigma_bearing = to_double(k, v); }},
      {"solver.max_iters", [](RunConfig& c, auto& k, auto& v) { c.solver.max_iters = static_cast<int>(to_uint(k, v)); }},
      {"solver.convergence_norm", [](RunConfig& c, auto& k, auto& v) { c.solver.convergence_norm = to_double(k, v); }},
      {"solver.gate_sigma", [](RunConfig& c, auto& k, auto& v) { c.solver.gate_sigma = to_double(k, v); }},
      {"solver.min_residuals", [](RunConfig& c, auto& k, auto& v) { c.solver.min_residuals = to_uint(k, v); }},
      {"solver.prior_rotation_sigma",
       [](RunConfig& c, auto& k, auto& v) { c.solver.prior_rotation_sigma = to_double(k, v); }},
      {"solver.prior_translation_sigma",
       [](RunConfig& c, auto& k, auto& v) { c.solver.prior_translation_sigma = to_double(k, v); }},
      {"synth.scene", [](RunConfig& c, auto&, auto& v) { c.synth.scene = v; }},
      {"synth.dims", [](RunConfig& c, auto& k, auto& v) { c.synth.dims = to_vec3(k, v); }},
      {"synth.frames", [](RunConfig& c, auto& k, auto& v) { c.synth.frames = to_uint(k, v); }},
      {"synth.rays", [](RunConfig& c, auto& k, auto& v) { c.synth.rays = to_uint(k, v); }},
      {"synth.fov", [](RunConfig& c, auto& k, auto& v) { c.synth.fov = to_double(k, v); }},
      {"synth.max_range", [](RunConfig& c, auto& k, auto& v) { c.synth.max_range = to_double(k, v); }},
      {"synth.noise_scale", [](RunConfig& c, auto& k, auto& v) { c.synth.noise_scale = to_double(k, v); }},
      {"preprocess.downsample", [](RunConfig& c, auto& k, auto& v) { c.preprocess.downsample = to_double(k, v); }},
      {"preprocess.min_range", [](RunConfig& c, auto& k, auto& v) { c.preprocess.min_range = to_double(k, v); }},
      {"preprocess.max_range", [](RunConfig& c, auto& k, auto& v) { c.preprocess.max_range = to_double(k, v); }},
      {"rng.algorithm", [](RunConfig& c, auto&, auto& v) { c.rng = v; }},
      {"rng.seed", [](RunConfig& c, auto& k, auto& v) { c.seed = to_uint(k, v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    it->second(cfg, key, value);
  }
  if (!seen.contains("merge.delta_u")) cfg.merge.delta_u = 2.0 * cfg.map.root_voxel_size;
  if (!seen.contains("merge.delta_v")) cfg.merge.delta_v = 2.0 * cfg.map.root_voxel_size;
  cfg.merge.eta = cfg.map.eta;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& c) {
  out << std::setprecision(17);
  out << "map.root_voxel_size = " << c.map.root_voxel_size << "\n"
      << "map.max_layer = " << c.map.max_layer << "\n"
      << "map.init_points = " << c.map.init_points << "\n"
      << "map.eta = " << c.map.eta << "\n"
      << "map.refresh_every = " << c.map.refresh_every << "\n"
      << "map.consistency_factor = " << c.map.consistency_factor << "\n"
      << "map.max_updates = " << (c.map.max_updates ? std::to_string(*c.map.max_updates) : "none") << "\n"
      << "merge.enabled = " << (c.merge.enabled ? "true" : "false") << "\n"
      << "merge.trigger_count = " << c.merge.trigger_count << "\n"
      << "merge.delta_theta = " << c.merge.delta_theta << "\n"
      << "merge.delta_phi = " << c.merge.delta_phi << "\n"
      << "merge.delta_d = " << c.merge.delta_d << "\n"
      << "merge.delta_u = " << c.merge.delta_u << "\n"
      << "merge.delta_v = " << c.merge.delta_v << "\n"
      << "noise.sigma_range = " << c.noise.sigma_range << "\n"
      << "noise.sigma_bearing = " << c.noise.sigma_bearing << "\n"
      << "solver.max_iters = " << c.solver.max_iters << "\n"
      << "solver.convergence_norm = " << c.solver.convergence_norm << "\n"
      << "solver.gate_sigma = " << c.solver.gate_sigma << "\n"
      << "solver.min_residuals = " << c.solver.min_residuals << "\n"
      << "solver.prior_rotation_sigma = " << c.solver.prior_rotation_sigma << "\n"
      << "solver.prior_translation_sigma = " << c.solver.prior_translation_sigma << "\n"
      << "synth.scene = " << c.synth.scene << "\n"
      << "synth.dims = " << c.synth.dims.x() << ' ' << c.synth.dims.y() << ' ' << c.synth.dims.z() << "\n"
      << "synth.frames = " << c.synth.frames << "\n"
      << "synth.rays = " << c.synth.rays << "\n"
      << "synth.fov = " << c.synth.fov << "\n"
      << "synth.max_range = " << c.synth.max_range << "\n"
      << "synth.noise_scale = " << c.synth.noise_scale << "\n"
      << "preprocess.downsample = " << c.preprocess.downsample << "\n"
      << "preprocess.min_range = " << c.preprocess.min_range << "\n"
      << "preprocess.max_range = " << c.preprocess.max_range << "\n"
      << "rng.algorithm = " << c.rng << "\n"
      << "rng.seed = " << c.seed << "\n";
}

}  // namespace voxplane
