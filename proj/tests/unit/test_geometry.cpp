#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rtsmooth/geometry.hpp"
#include "rtsmooth/robot_model.hpp"

using namespace rtsmooth;

namespace {

constexpr double pi = std::numbers::pi;

RobotModel two_link() {
  return RobotModel::planar({0.5, 0.5}, {0.05, 0.05}, VecX{{-pi, -pi}}, VecX{{pi, pi}}, VecX{{1.0, 1.0}},
                            VecX{{1.0, 1.0}});
}

bool near(const Vec3& a, const Vec3& b, double tol = 1e-12) { return (a - b).norm() <= tol; }

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("forward kinematics of a straight chain") {
    const auto chain = forward_kinematics(two_link(), VecX{{0.0, 0.0}});
    REQUIRE(chain.size() == 2);
    CHECK(near(chain[0].a, Vec3(0, 0, 0)));
    CHECK(near(chain[0].b, Vec3(0.5, 0, 0)));
    CHECK(near(chain[1].b, Vec3(1.0, 0, 0)));
  }

  TEST_CASE("forward kinematics rotated by a quarter turn") {
    const auto chain = forward_kinematics(two_link(), VecX{{pi / 2, 0.0}});
    CHECK(near(chain[0].b, Vec3(0, 0.5, 0)));
    CHECK(near(chain[1].b, Vec3(0, 1.0, 0)));
  }

  TEST_CASE("forward kinematics elbow bent back") {
    const auto chain = forward_kinematics(two_link(), VecX{{pi / 2, -pi / 2}});
    CHECK(near(chain[1].b, Vec3(0.5, 0.5, 0)));
  }

  TEST_CASE("chain continuity on random spatial configurations") {
    const RobotModel m = RobotModel::desk_spatial();
    std::mt19937_64 rng(3);
    for (int k = 0; k < 200; ++k) {
      const auto chain = forward_kinematics(m, random_configuration(m, rng));
      for (std::size_t i = 1; i < chain.size(); ++i) CHECK((chain[i].a - chain[i - 1].b).norm() <= 1e-12);
    }
  }

  TEST_CASE("signed distance examples") {
    const RobotModel m = two_link();
    const VecX q{{0.0, 0.0}};
    CHECK(surface_signed_distance(m, q, Vec3(0.25, 0.30, 0)) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::abs(surface_signed_distance(m, q, Vec3(0.25, 0.05, 0))) <= 1e-12);
    CHECK(surface_signed_distance(m, q, Vec3(0.25, 0.0, 0)) == doctest::Approx(-0.05).epsilon(1e-12));
  }

  TEST_CASE("signed distance is 1-Lipschitz") {
    const RobotModel m = RobotModel::desk_planar();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int k = 0; k < 2000; ++k) {
      const auto chain = forward_kinematics(m, random_configuration(m, rng));
      const Vec3 p(u(rng), u(rng), 0), r(u(rng), u(rng), 0);
      CHECK(std::abs(surface_signed_distance(chain, p) - surface_signed_distance(chain, r)) <=
            (p - r).norm() + 1e-12);
    }
  }

  TEST_CASE("signed distance sign matches capsule membership") {
    const RobotModel m = RobotModel::desk_planar();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    const auto chain = forward_kinematics(m, VecX{{0.3, -1.0, 0.8}});
    for (int k = 0; k < 10000; ++k) {
      const Vec3 p(u(rng), u(rng), 0);
      bool inside = false;
      for (const auto& c : chain) {
        // Membership by dense sampling of the axis, independent of the closed form.
        double best = 1e9;
        for (int s = 0; s <= 2000; ++s) best = std::min(best, (p - (c.a + (c.b - c.a) * (s / 2000.0))).norm());
        if (best < c.radius - 1e-3) inside = true;
      }
      const double d = surface_signed_distance(chain, p);
      if (inside) CHECK(d < 0.0);
      if (d < -1e-3) CHECK(inside);
    }
  }

  TEST_CASE("random configuration: degenerate limits and determinism") {
    RobotModel m = RobotModel::desk_planar();
    m.joint_lower[1] = m.joint_upper[1] = 0.4;
    std::mt19937_64 a(11), b(11);
    const auto qa = random_configuration(m, a);
    CHECK(qa[1] == 0.4);
    CHECK(qa == random_configuration(m, b));
  }

  TEST_CASE("random configuration mean is the limit midpoint") {
    const RobotModel m = RobotModel::desk_planar();
    std::mt19937_64 rng(13);
    const int n = 10000;
    VecX sum = VecX::Zero(m.dof());
    for (int k = 0; k < n; ++k) sum += random_configuration(m, rng);
    for (int j = 0; j < m.dof(); ++j) {
      const double width = m.joint_upper[j] - m.joint_lower[j];
      const double sigma = width / std::sqrt(12.0 * n);
      CHECK(std::abs(sum[j] / n - 0.5 * (m.joint_lower[j] + m.joint_upper[j])) < 3 * sigma);
    }
  }

  TEST_CASE("segment to box distance against dense sampling") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 300; ++k) {
      const Vec3 lo(u(rng) * 0.5, u(rng) * 0.5, u(rng) * 0.5);
      const Box box{lo, lo + Vec3(0.1 + std::abs(u(rng)) * 0.3, 0.1 + std::abs(u(rng)) * 0.3, 0.1)};
      const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
      double best = 1e9;
      for (int s = 0; s <= 20000; ++s) best = std::min(best, point_box_distance(a + (b - a) * (s / 20000.0), box));
      const double d = segment_box_distance(a, b, box);
      CHECK(d <= best + 1e-12);
      CHECK(d >= best - 2e-4);
    }
  }

  TEST_CASE("invalid models are rejected") {
    RobotModel m = two_link();
    m.link_radii.pop_back();
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    CHECK_THROWS_AS(forward_kinematics(two_link(), VecX{{0.0}}), InvalidArgument);
  }
}
