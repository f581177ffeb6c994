#include "jdsr/pose_io.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "jdsr/error.hpp"

namespace jdsr {

std::vector<Pose> read_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot open pose file " + path.string());
  std::vector<Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    long long index;
    double tx, ty, tz, qx, qy, qz, qw;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    require(static_cast<bool>(ss >> index >> tx >> ty >> tz >> qx >> qy >> qz >> qw),
            ErrorCode::kParse, where + "expected 8 fields");
    std::string extra;
    require(!(ss >> extra), ErrorCode::kParse, where + "trailing fields");
    require(index == static_cast<long long>(poses.size()), ErrorCode::kParse,
            where + "frame index out of sequence");
    Eigen::Quaterniond q(qw, qx, qy, qz);
    const double norm = q.norm();
    require(std::isfinite(norm) && std::abs(norm - 1.0) <= 1e-3, ErrorCode::kParse,
            where + "quaternion is not unit length");
    q.normalize();
    Pose p;
    p.rotation = q.toRotationMatrix();
    p.translation = Vec3(tx, ty, tz);
    require(p.translation.allFinite(), ErrorCode::kParse, where + "non-finite translation");
    poses.push_back(p);
  }
  return poses;
}

void write_poses(const std::filesystem::path& path, const std::vector<Pose>& poses) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot write pose file " + path.string());
  char buf[512];
  for (std::size_t i = 0; i < poses.size(); ++i) {
    Eigen::Quaterniond q(poses[i].rotation);
    if (q.w() < 0) q.coeffs() *= -1.0;
    const Vec3& t = poses[i].translation;
    std::snprintf(buf, sizeof(buf), "%zu %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", i, t.x(),
                  t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out << buf;
  }
  require(out.good(), ErrorCode::kIo, "failed writing pose file " + path.string());
}

}  // namespace jdsr
