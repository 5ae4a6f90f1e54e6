#include <doctest.h>

#include <random>
#include <sstream>

#include "rtsmooth/voxel_grid.hpp"

using namespace rtsmooth;

TEST_SUITE("voxel_grid") {
  TEST_CASE("cell centres") {
    const VoxelGrid unit(2, Vec3::Zero(), 1.0, {1, 1, 1});
    CHECK((unit.center(0) - Vec3(0.5, 0.5, 0.0)).norm() < 1e-15);
    const VoxelGrid g(2, Vec3::Zero(), 0.5, {4, 4, 1});
    CHECK((g.center(g.index({3, 0, 0})) - Vec3(1.75, 0.25, 0.0)).norm() < 1e-15);
  }

  TEST_CASE("every centre lies strictly inside the grid") {
    for (const auto& g : {VoxelGrid::desk_planar(), VoxelGrid::desk_spatial()}) {
      const Vec3 hi = g.origin() + g.edge() * Vec3(g.dims()[0], g.dims()[1], g.dims()[2]);
      for (int i = 0; i < g.size(); ++i) {
        const Vec3 c = g.center(i);
        for (int k = 0; k < g.dim(); ++k) {
          CHECK(c[k] > g.origin()[k]);
          CHECK(c[k] < hi[k]);
        }
        CHECK(g.locate(c) == i);
      }
    }
  }

  TEST_CASE("point cloud threshold") {
    const VoxelGrid g = VoxelGrid::desk_planar();
    CHECK(occupancy_from_points(g, {}, 50).count() == 0);
    const int cell = g.index({5, 7, 0});
    PointCloud cloud(50, g.center(cell));
    auto occ = occupancy_from_points(g, cloud, 50);
    CHECK(occ.count() == 1);
    CHECK(occ[cell]);
    cloud.pop_back();
    CHECK(occupancy_from_points(g, cloud, 50).count() == 0);
  }

  TEST_CASE("raising the count threshold never adds cells") {
    const VoxelGrid g = VoxelGrid::desk_planar();
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(1.0, 0.2);
    PointCloud cloud;
    for (int k = 0; k < 20000; ++k) cloud.emplace_back(n(rng), n(rng), 0.0);
    OccupancyVector prev = occupancy_from_points(g, cloud, 1);
    for (int t = 2; t < 120; t += 7) {
      const auto next = occupancy_from_points(g, cloud, t);
      for (int i = 0; i < g.size(); ++i)
        if (next[i]) CHECK(prev[i]);
      prev = next;
    }
  }

  TEST_CASE("shape occupancy") {
    const VoxelGrid g = VoxelGrid::desk_planar();
    CHECK(occupancy_from_shapes(g, {}).count() == 0);
    const std::vector<Shape> all{Box{Vec3(-1, -1, -1), Vec3(3, 3, 1)}};
    CHECK(occupancy_from_shapes(g, all).count() == g.size());

    const Box box{Vec3(0.5, 0.5, -0.1), Vec3(1.5, 1.5, 0.1)};
    const std::vector<Shape> one{box};
    const auto occ = occupancy_from_shapes(g, one);
    for (int i = 0; i < g.size(); ++i) {
      const Vec3 c = g.center(i);
      const bool in = c.x() >= 0.5 && c.x() <= 1.5 && c.y() >= 0.5 && c.y() <= 1.5;
      CHECK(occ[i] == in);
    }
    CHECK(occ.count() == 16 * 16);
  }

  TEST_CASE("union of shapes is the OR of their occupancies") {
    const VoxelGrid g = VoxelGrid::desk_planar();
    const Shape a = Box{Vec3(0.2, 0.2, -0.1), Vec3(0.9, 0.6, 0.1)};
    const Shape b = Sphere{Vec3(0.8, 0.7, 0.0), 0.3};
    const std::vector<Shape> both{a, b}, only_a{a}, only_b{b};
    CHECK(occupancy_from_shapes(g, both) == (occupancy_from_shapes(g, only_a) | occupancy_from_shapes(g, only_b)));
  }

  TEST_CASE("bit packing and binary round trip") {
    const VoxelGrid g = VoxelGrid::desk_planar();
    std::mt19937_64 rng(4);
    OccupancyVector occ(g.size());
    for (int i = 0; i < g.size(); ++i) occ.set(i, rng() % 5 == 0);
    CHECK(OccupancyVector::unpack_bits(occ.pack_bits(), g.size()) == occ);
    CHECK(occ.pack_bits().size() == 128);

    std::stringstream s;
    write_occupancy(s, g, occ);
    CHECK(read_occupancy(s, g) == occ);

    std::stringstream wrong;
    write_occupancy(wrong, g, occ);
    CHECK_THROWS_AS(read_occupancy(wrong, VoxelGrid::desk_spatial()), SignatureMismatch);
  }

  TEST_CASE("point cloud text format") {
    std::istringstream in("# header\n0.1, 0.2\n0.3 0.4 0.5  # trailing\n\n");
    const auto cloud = read_point_cloud(in);
    REQUIRE(cloud.size() == 2);
    CHECK(cloud[0].z() == 0.0);
    CHECK(cloud[1].z() == 0.5);
    std::istringstream bad("0.1 x\n");
    CHECK_THROWS_AS(read_point_cloud(bad), FormatError);
  }
}
