#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "jdsr/error.hpp"
#include "jdsr/geometry.hpp"
#include "jdsr/pose_io.hpp"
#include "oracles.hpp"
#include "suites.hpp"

using namespace jdsr;

TEST_CASE("se3_exp closed forms") {
  CHECK(suites::max_abs(se3_exp(Twist::Zero()), Pose::identity()) == 0.0);

  const Pose t = se3_exp((Twist() << 1, 2, 3, 0, 0, 0).finished());
  CHECK((t.rotation - Mat3::Identity()).norm() < 1e-15);
  CHECK((t.translation - Vec3(1, 2, 3)).norm() < 1e-15);

  const Pose r = se3_exp((Twist() << 0, 0, 0, 0, 0, std::numbers::pi).finished());
  CHECK((r.rotation - Vec3(-1, -1, 1).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.translation.norm() < 1e-15);

  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const Twist xi = suites::twist_with_angle(rng, 3.0);
    CHECK(suites::max_abs(se3_exp(xi), oracle::exp(xi)) < 1e-12);
    const Pose p = se3_exp(xi);
    CHECK((p.rotation.transpose() * p.rotation - Mat3::Identity()).norm() < 1e-9);
    CHECK(std::abs(p.rotation.determinant() - 1.0) < 1e-9);
  }
  // Tiny rotations go through the series branch.
  const Twist tiny = (Twist() << 0.3, -0.2, 0.1, 1e-10, -2e-10, 3e-10).finished();
  CHECK(suites::max_abs(se3_exp(tiny), oracle::exp(tiny)) < 1e-15);
}

TEST_CASE("se3_log") {
  CHECK(se3_log(Pose::identity()).norm() == 0.0);
  Pose t;
  t.translation = Vec3(0.4, -1.0, 2.0);
  const Twist xi = se3_log(t);
  CHECK((xi.head<3>() - t.translation).norm() < 1e-15);
  CHECK(xi.tail<3>().norm() == 0.0);

  std::mt19937_64 rng(22);
  Vec3 axis = Vec3::Random().normalized();
  Twist a;
  a << 0.2, 0.5, -0.3, 0.7 * axis;
  CHECK(suites::max_abs(se3_exp(se3_log(se3_exp(a))), se3_exp(a)) < 1e-10);
  CHECK((se3_log(se3_exp(a)) - a).cwiseAbs().maxCoeff() < 1e-10);

  const Pose near_pi = se3_exp((Twist() << 0, 0, 0, std::numbers::pi - 1e-8, 0, 0).finished());
  CHECK_THROWS_AS(se3_log(near_pi), Error);
  try {
    se3_log(near_pi);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNearPiRotation);
  }

  const suites::GeometryErrors e = suites::geometry_suite(500, 23);
  CHECK(e.exp_log < 1e-10);
  CHECK(e.endpoints < 1e-10);
  CHECK(e.warp_roundtrip < 1e-8);
}

TEST_CASE("interpolate_pose") {
  Pose pt;
  pt.translation = Vec3(2, 0, 0);
  const Pose half = interpolate_pose(pt, Pose::identity(), 0.5);
  CHECK((half.translation - Vec3(1, 0, 0)).norm() < 1e-15);
  CHECK((half.rotation - Mat3::Identity()).norm() < 1e-15);

  std::mt19937_64 rng(24);
  for (int i = 0; i < 50; ++i) {
    const Pose a = oracle::exp(oracle::random_twist(rng, 2.0));
    const Pose b = oracle::exp(oracle::random_twist(rng, 2.0));
    const Pose s0 = interpolate_pose(a, b, 0.0);
    CHECK(suites::max_abs(s0, b) == 0.0);
    CHECK(suites::max_abs(interpolate_pose(a, b, 1.0), a) < 1e-10);
    CHECK(suites::max_abs(interpolate_pose(a, b, 0.3), oracle::interpolate(a, b, 0.3)) < 1e-8);
  }
}

TEST_CASE("warp_pixel") {
  const Intrinsics K{100, 100, 50, 50};
  std::mt19937_64 rng(25);
  const Pose p = oracle::exp(oracle::random_twist(rng, 1.0));
  const WarpedPoint same = warp_pixel(Vec2(12.5, 40.25), 0.8, p, p, K);
  CHECK((same.pixel - Vec2(12.5, 40.25)).norm() < 1e-12);
  CHECK(std::abs(same.depth - 1.25) < 1e-12);

  Pose dst;
  dst.translation = Vec3(0.1, 0, 0);
  const WarpedPoint w = warp_pixel(Vec2(50, 50), 0.5, Pose::identity(), dst, K);
  CHECK((w.pixel - Vec2(55, 50)).norm() < 1e-12);
  CHECK(std::abs(w.depth - 2.0) < 1e-12);

  Pose forward;
  forward.translation = Vec3(0, 0, -0.3);
  const WarpedPoint a = warp_pixel(Vec2(50, 50), 0.5, Pose::identity(), forward, K);
  const WarpedPoint b = warp_pixel(Vec2(50, 50), 1.0, Pose::identity(), forward, K);
  CHECK((a.pixel - b.pixel).norm() < 1e-12);

  Pose behind;
  behind.translation = Vec3(0, 0, -5);
  try {
    warp_pixel(Vec2(50, 50), 0.5, Pose::identity(), behind, K);
    FAIL("expected a behind-camera error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBehindCamera);
  }
  CHECK_THROWS_AS(warp_pixel(Vec2(1, 1), 0.0, p, p, K), Error);
  CHECK_FALSE(RelativeWarp(Pose::identity(), behind, K)(50, 50, 0.5).has_value());
}

TEST_CASE("warp_jacobians") {
  const Intrinsics K{100, 100, 63.5, 47.5};
  std::mt19937_64 rng(26);
  const Pose p = oracle::exp(oracle::random_twist(rng, 1.0));
  const Pose rotated = oracle::exp((Twist() << 0, 0, 0, 0.05, -0.02, 0.01).finished()) * p;
  CHECK(warp_jacobians(Vec2(20, 30), 0.7, p, p, K).du_dD.norm() < 1e-12);
  CHECK(warp_jacobians(Vec2(20, 30), 0.7, p, rotated, K).du_dD.norm() < 1e-9);

  // A z-translation of the destination camera does not move the principal point.
  const WarpJacobian J = warp_jacobians(Vec2(K.cx, K.cy), 0.7, Pose::identity(), Pose::identity(), K);
  CHECK(std::abs(J.du_deps_s(0, 2)) < 1e-12);
  CHECK(std::abs(J.du_deps_s(1, 2)) < 1e-12);

  CHECK(suites::jacobian_suite(100, 27) < 1e-4);
}

TEST_CASE("warp_depth_map") {
  const Intrinsics K{40, 40, 15.5, 11.5};
  std::mt19937_64 rng(28);
  const InverseDepthMap d = oracle::random_depth(rng, 32, 24, 0.5, 1.5);
  const Pose p = oracle::exp(oracle::random_twist(rng, 0.5));
  const InverseDepthMap same = warp_depth_map(d, p, p, K);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(same[i] - d[i]) < 1e-12);

  const InverseDepthMap plane(32, 24, 0.8);
  Pose lateral;
  lateral.translation = Vec3(0.05, 0, 0);
  const InverseDepthMap moved = warp_depth_map(plane, Pose::identity(), lateral, K);
  for (int y = 2; y < 22; ++y)
    for (int x = 2; x < 30; ++x) CHECK(std::abs(moved.at(x, y) - 0.8) < 1e-12);

  // Two fronto-parallel planes: compare with ray casting in the new camera.
  InverseDepthMap two(32, 24, 0.5);
  for (int y = 6; y < 18; ++y)
    for (int x = 10; x < 22; ++x) two.at(x, y) = 1.0;
  const InverseDepthMap warped = warp_depth_map(two, Pose::identity(), lateral, K);
  // The foreground square spans world x in [(9.5-cx)/fx, (21.5-cx)/fx] * z at z = 1.
  int agree = 0, total = 0;
  for (int y = 8; y < 16; ++y)
    for (int x = 3; x < 29; ++x) {
      const Vec3 ray = K.ray(x, y);
      const double wx = ray.x() - 0.05;  // world x of the point at z = 1 seen by the moved camera
      const bool fg = wx >= (9.5 - K.cx) / K.fx && wx <= (21.5 - K.cx) / K.fx;
      const double expect = fg ? 1.0 : 0.5;
      ++total;
      agree += std::abs(warped.at(x, y) - expect) < 1e-12;
    }
  // Only columns straddling a silhouette may differ.
  CHECK(total - agree <= 2 * 8);
}

TEST_CASE("pose file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "jdsr_test_poses";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(29);
  std::vector<Pose> poses;
  for (int i = 0; i < 4; ++i) poses.push_back(oracle::exp(oracle::random_twist(rng, 1.5)));
  write_poses(dir / "p.txt", poses);
  const auto back = read_poses(dir / "p.txt");
  REQUIRE(back.size() == poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) CHECK(suites::max_abs(back[i], poses[i]) < 1e-12);

  {
    std::ofstream bad(dir / "bad.txt");
    bad << "0 0 0 0 0 0 0 2\n";
  }
  CHECK_THROWS_AS(read_poses(dir / "bad.txt"), Error);
  {
    std::ofstream order(dir / "order.txt");
    order << "1 0 0 0 0 0 0 1\n";
  }
  CHECK_THROWS_AS(read_poses(dir / "order.txt"), Error);
}
