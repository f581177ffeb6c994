#include "jdsr/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "jdsr/error.hpp"

namespace jdsr {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  require(!v.empty() && end == v.c_str() + v.size() && errno == 0, ErrorCode::kParse,
          "config key '" + key + "': expected a number, got '" + v + "'");
  return d;
}

long long parse_int(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  require(!v.empty() && end == v.c_str() + v.size() && errno == 0, ErrorCode::kParse,
          "config key '" + key + "': expected an integer, got '" + v + "'");
  return i;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::kParse, "config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v, std::size_t count) {
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(key, tok));
  require(out.size() == count, ErrorCode::kParse,
          "config key '" + key + "': expected " + std::to_string(count) + " numbers");
  return out;
}

const char* kind_name(SceneKind k) {
  switch (k) {
    case SceneKind::kPlane: return "plane";
    case SceneKind::kTwoPlanes: return "two_planes";
    default: return "box";
  }
}

const char* texture_name(TextureKind k) {
  switch (k) {
    case TextureKind::kChecker: return "checker";
    case TextureKind::kPng: return "png";
    default: return "noise";
  }
}

/// Extends or truncates the camera path to `frames`, repeating the last
/// inter-frame motion.
std::vector<Twist> resize_path(std::vector<Twist> path, int frames) {
  if (frames < 0) return path;
  if (static_cast<int>(path.size()) > frames) path.resize(frames);
  while (static_cast<int>(path.size()) < frames) {
    if (path.size() < 2) {
      path.push_back(Twist::Zero());
      continue;
    }
    const Pose a = se3_exp(path[path.size() - 2]);
    const Pose b = se3_exp(path.back());
    path.push_back(se3_log(b * a.inverse() * b));
  }
  return path;
}

}  // namespace

RunConfig::RunConfig() {
  scene = default_desk_spec();
  capture.K = scene.K;
  capture.factor = scene.factor;
  capture.exposure_fraction = scene.exposure_fraction;
}

void RunConfig::validate() const {
  energy.validate();
  solver.validate();
  capture.validate();
  scene.validate();
  require(input_upsample >= 1, ErrorCode::kInvalidArgument, "input_upsample must be >= 1");
  require(seed_perturbation >= 0, ErrorCode::kInvalidArgument, "seed_perturbation must be >= 0");
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  o << "# energy\n";
  o << "lambda_s = " << num(energy.lambda_s) << "\n";
  o << "lambda_d = " << num(energy.lambda_d) << "\n";
  o << "lambda_i = " << num(energy.lambda_i) << "\n";
  o << "sigma_g = " << num(energy.sigma_g) << "\n";
  o << "neighbor_radius = " << energy.neighbor_radius << "\n";
  o << "# solver\n";
  o << "max_iter = " << solver.max_iter << "\n";
  o << "irls_inner = " << solver.irls_inner << "\n";
  o << "cg_iters = " << solver.cg_iters << "\n";
  o << "cg_tol = " << num(solver.cg_tol) << "\n";
  o << "pyramid_factor = " << num(solver.pyramid_factor) << "\n";
  o << "pyramid_min_dim = " << solver.pyramid_min_dim << "\n";
  o << "irls_epsilon = " << num(solver.irls_epsilon) << "\n";
  o << "step_damping = " << num(solver.step_damping) << "\n";
  o << "d_min = " << num(solver.d_min) << "\n";
  o << "d_max = " << num(solver.d_max) << "\n";
  o << "relinearize_inner = " << (solver.relinearize_inner ? "true" : "false") << "\n";
  o << "update_images = " << (solver.update_images ? "true" : "false") << "\n";
  o << "seed_frames = " << solver.seed_frames << "\n";
  o << "init_warps = " << solver.init_warps << "\n";
  o << "init_damping = " << num(solver.init_damping) << "\n";
  o << "init_inverse_depth = " << num(solver.init_inverse_depth) << "\n";
  o << "# capture\n";
  o << "fx = " << num(capture.K.fx) << "\n";
  o << "fy = " << num(capture.K.fy) << "\n";
  o << "cx = " << num(capture.K.cx) << "\n";
  o << "cy = " << num(capture.K.cy) << "\n";
  o << "samples = " << capture.samples << "\n";
  o << "exposure_fraction = " << num(capture.exposure_fraction) << "\n";
  o << "factor = " << capture.factor << "\n";
  o << "input_upsample = " << input_upsample << "\n";
  o << "# scene\n";
  o << "scene_kind = " << kind_name(scene.kind) << "\n";
  o << "texture = " << texture_name(scene.texture) << "\n";
  if (!scene.texture_path.empty()) o << "texture_path = " << scene.texture_path << "\n";
  o << "texture_scale = " << num(scene.texture_scale) << "\n";
  o << "width = " << scene.width << "\n";
  o << "height = " << scene.height << "\n";
  o << "background_inverse_depth = " << num(scene.background_inverse_depth) << "\n";
  o << "foreground_inverse_depth = " << num(scene.foreground_inverse_depth) << "\n";
  o << "foreground_rect =";
  for (double v : scene.foreground_rect) o << ' ' << num(v);
  o << "\nbox_depth = " << num(scene.box_depth) << "\n";
  o << "render_samples = " << scene.render_samples << "\n";
  o << "noise_sigma = " << num(scene.noise_sigma) << "\n";
  o << "seed_perturbation = " << num(seed_perturbation) << "\n";
  o << "seed = " << seed << "\n";
  o << "frames = " << scene.frames() << "\n";
  for (int t = 0; t < scene.frames(); ++t) {
    o << "twist_" << t << " =";
    for (int j = 0; j < 6; ++j) o << ' ' << num(scene.path[t][j]);
    o << "\n";
  }
  return o.str();
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig c;
  int frames = -1;
  std::map<int, Twist> twists;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const auto dbl = [](double& dst) -> Setter {
    return [&dst](const std::string& k, const std::string& v) { dst = parse_double(k, v); };
  };
  const auto integer = [](int& dst) -> Setter {
    return [&dst](const std::string& k, const std::string& v) {
      dst = static_cast<int>(parse_int(k, v));
    };
  };
  const auto boolean = [](bool& dst) -> Setter {
    return [&dst](const std::string& k, const std::string& v) { dst = parse_bool(k, v); };
  };
  std::map<std::string, Setter> setters{
      {"lambda_s", dbl(c.energy.lambda_s)},
      {"lambda_d", dbl(c.energy.lambda_d)},
      {"lambda_i", dbl(c.energy.lambda_i)},
      {"sigma_g", dbl(c.energy.sigma_g)},
      {"neighbor_radius", integer(c.energy.neighbor_radius)},
      {"max_iter", integer(c.solver.max_iter)},
      {"irls_inner", integer(c.solver.irls_inner)},
      {"cg_iters", integer(c.solver.cg_iters)},
      {"cg_tol", dbl(c.solver.cg_tol)},
      {"pyramid_factor", dbl(c.solver.pyramid_factor)},
      {"pyramid_min_dim", integer(c.solver.pyramid_min_dim)},
      {"irls_epsilon", dbl(c.solver.irls_epsilon)},
      {"step_damping", dbl(c.solver.step_damping)},
      {"d_min", dbl(c.solver.d_min)},
      {"d_max", dbl(c.solver.d_max)},
      {"relinearize_inner", boolean(c.solver.relinearize_inner)},
      {"update_images", boolean(c.solver.update_images)},
      {"seed_frames", integer(c.solver.seed_frames)},
      {"init_warps", integer(c.solver.init_warps)},
      {"init_damping", dbl(c.solver.init_damping)},
      {"init_inverse_depth", dbl(c.solver.init_inverse_depth)},
      {"fx", dbl(c.capture.K.fx)},
      {"fy", dbl(c.capture.K.fy)},
      {"cx", dbl(c.capture.K.cx)},
      {"cy", dbl(c.capture.K.cy)},
      {"samples", integer(c.capture.samples)},
      {"exposure_fraction", dbl(c.capture.exposure_fraction)},
      {"factor", integer(c.capture.factor)},
      {"input_upsample", integer(c.input_upsample)},
      {"texture_scale", dbl(c.scene.texture_scale)},
      {"width", integer(c.scene.width)},
      {"height", integer(c.scene.height)},
      {"background_inverse_depth", dbl(c.scene.background_inverse_depth)},
      {"foreground_inverse_depth", dbl(c.scene.foreground_inverse_depth)},
      {"box_depth", dbl(c.scene.box_depth)},
      {"render_samples", integer(c.scene.render_samples)},
      {"noise_sigma", dbl(c.scene.noise_sigma)},
      {"seed_perturbation", dbl(c.seed_perturbation)},
      {"frames", integer(frames)},
      {"texture_path", [&](const std::string&, const std::string& v) { c.scene.texture_path = v; }},
      {"foreground_rect",
       [&](const std::string& k, const std::string& v) { c.scene.foreground_rect = parse_list(k, v, 4); }},
      {"seed",
       [&](const std::string& k, const std::string& v) {
         const long long s = parse_int(k, v);
         require(s >= 0, ErrorCode::kParse, "config key 'seed' must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"scene_kind",
       [&](const std::string& k, const std::string& v) {
         if (v == "plane") c.scene.kind = SceneKind::kPlane;
         else if (v == "two_planes") c.scene.kind = SceneKind::kTwoPlanes;
         else if (v == "box") c.scene.kind = SceneKind::kBox;
         else throw Error(ErrorCode::kParse, "config key '" + k + "': unknown scene kind '" + v + "'");
       }},
      {"texture",
       [&](const std::string& k, const std::string& v) {
         if (v == "noise") c.scene.texture = TextureKind::kNoise;
         else if (v == "checker") c.scene.texture = TextureKind::kChecker;
         else if (v == "png") c.scene.texture = TextureKind::kPng;
         else throw Error(ErrorCode::kParse, "config key '" + k + "': unknown texture '" + v + "'");
       }},
  };

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    require(eq != std::string::npos, ErrorCode::kParse, where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key.rfind("twist_", 0) == 0) {
        const long long t = parse_int(key, key.substr(6));
        require(t >= 0 && t < 100000, ErrorCode::kParse, "twist index out of range");
        twists[static_cast<int>(t)] = Twist(parse_list(key, value, 6).data());
        continue;
      }
      const auto it = setters.find(key);
      require(it != setters.end(), ErrorCode::kParse, "unknown config key '" + key + "'");
      it->second(key, value);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
  }

  if (!twists.empty()) {
    const int needed = twists.rbegin()->first + 1;
    if (needed > c.scene.frames()) c.scene.path = resize_path(c.scene.path, needed);
    for (const auto& [t, xi] : twists) c.scene.path[t] = xi;
  }
  c.scene.path = resize_path(c.scene.path, frames);
  c.scene.K = c.capture.K;
  c.scene.factor = c.capture.factor;
  c.scene.exposure_fraction = c.capture.exposure_fraction;
  c.scene.seed = c.seed;
  return c;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void write_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << config.to_text();
}

}  // namespace jdsr
