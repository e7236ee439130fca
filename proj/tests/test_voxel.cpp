#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mea/errors.hpp"
#include "mea/rng.hpp"
#include "mea/sim.hpp"
#include "mea/voxel.hpp"

using namespace mea;

namespace {

/// Random cloud whose points sit near voxel centers, so integer-voxel
/// shifts keep every point far from cell boundaries.
PointCloud jittered_cloud(const VoxelGridConfig& cfg, Rng& rng, int n_points, int border) {
  PointCloud cloud;
  const Vec3 size = cfg.voxel_size();
  for (int i = 0; i < n_points; ++i) {
    const int x = border + static_cast<int>(rng.uniform_index(cfg.n_voxel - 2 * border));
    const int y = border + static_cast<int>(rng.uniform_index(cfg.n_voxel - 2 * border));
    const int z = border + static_cast<int>(rng.uniform_index(cfg.n_voxel - 2 * border));
    const Vec3 jitter(rng.uniform(-0.3, 0.3) * size.x(), rng.uniform(-0.3, 0.3) * size.y(),
                      rng.uniform(-0.3, 0.3) * size.z());
    cloud.points.push_back(cfg.voxel_center(x, y, z) + jitter);
  }
  return cloud;
}

}  // namespace

TEST_CASE("voxelize marks occupied cells") {
  VoxelGridConfig cfg;
  cfg.n_voxel = 8;
  cfg.workspace = {Vec3::Zero(), Vec3(0.8, 0.8, 0.8)};

  CHECK(voxelize({}, cfg).indices.empty());
  CHECK(voxelize({PointCloud{}}, cfg).indices.empty());

  const Vec3 center = cfg.voxel_center(3, 4, 5);
  const OccupiedSet one = voxelize({PointCloud{{center}}}, cfg);
  CHECK(one.indices == std::set<VoxelIndex>{{3, 4, 5}});

  const OccupiedSet dedup = voxelize({PointCloud{{center, center + Vec3(0.01, 0.01, 0)}}}, cfg);
  CHECK(dedup.indices.size() == 1);

  // Upper-boundary points land in the last voxel; outside points are dropped.
  const OccupiedSet edge = voxelize({PointCloud{{Vec3(0.8, 0.8, 0.8), Vec3(0.9, 0, 0)}}}, cfg);
  CHECK(edge.indices == std::set<VoxelIndex>{{7, 7, 7}});
}

TEST_CASE("project takes the minimum z per column") {
  VoxelGridConfig cfg;
  cfg.n_voxel = 8;
  cfg.workspace = {Vec3::Zero(), Vec3(0.8, 0.8, 0.8)};

  const DepthImage empty = project(OccupiedSet{}, cfg);
  for (int v : empty.pixels) CHECK(v == 0);

  OccupiedSet bottom;
  bottom.indices = {{2, 2, 0}};
  const DepthImage lowest = project(bottom, cfg);
  CHECK(lowest.at(2, 2) == 1);  // z-index 0 encodes as 1
  CHECK(lowest.at(3, 2) == 0);

  OccupiedSet column;
  column.indices = {{5, 5, 3}, {5, 5, 7}};
  CHECK(project(column, cfg).at(5, 5) == 4);

  OccupiedSet bad;
  bad.indices = {{9, 0, 0}};
  CHECK_THROWS_AS((void)project(bad, cfg), ValidationError);
}

TEST_CASE("render_observation emits one channel per segment") {
  KinSim sim{EnvConfig{}};
  const auto [state, obs] = sim.reset(5);
  VoxelGridConfig cfg;
  const std::vector<DepthImage> channels = render_observation(obs, cfg);
  CHECK(channels.size() == 2);  // M=1 object channel + gripper channel

  Observation occluded = obs;
  occluded.object_clouds[0].points.clear();
  const std::vector<DepthImage> sparse = render_observation(occluded, cfg);
  for (int v : sparse[0].pixels) CHECK(v == 0);
  int nonzero = 0;
  for (int v : sparse[1].pixels) nonzero += v != 0 ? 1 : 0;
  CHECK(nonzero > 0);
}

TEST_CASE("translation equivariance over random clouds and shifts") {
  VoxelGridConfig cfg;
  Rng rng(17);
  const Vec3 size = cfg.voxel_size();
  const int border = 12;

  for (int trial = 0; trial < 100; ++trial) {
    const PointCloud cloud = jittered_cloud(cfg, rng, 40, border);
    const DepthImage base = project(voxelize({cloud}, cfg), cfg);

    const int dx = static_cast<int>(rng.uniform_index(2 * border + 1)) - border;
    const int dy = static_cast<int>(rng.uniform_index(2 * border + 1)) - border;
    PointCloud shifted;
    for (const Vec3& p : cloud.points) {
      shifted.points.push_back(p + Vec3(dx * size.x(), dy * size.y(), 0));
    }
    const DepthImage moved = project(voxelize({shifted}, cfg), cfg);

    for (int y = 0; y < cfg.n_voxel; ++y) {
      for (int x = 0; x < cfg.n_voxel; ++x) {
        const int sx = x + dx, sy = y + dy;
        if (sx < 0 || sx >= cfg.n_voxel || sy < 0 || sy >= cfg.n_voxel) continue;
        CHECK(moved.at(sx, sy) == base.at(x, y));
      }
    }
  }
}

TEST_CASE("z shifts add exactly k to every occupied pixel") {
  VoxelGridConfig cfg;
  Rng rng(23);
  const Vec3 size = cfg.voxel_size();
  for (int trial = 0; trial < 100; ++trial) {
    const PointCloud cloud = jittered_cloud(cfg, rng, 30, 12);
    const int k = static_cast<int>(rng.uniform_index(9)) - 4;
    PointCloud lifted;
    for (const Vec3& p : cloud.points) lifted.points.push_back(p + Vec3(0, 0, k * size.z()));
    const DepthImage base = project(voxelize({cloud}, cfg), cfg);
    const DepthImage moved = project(voxelize({lifted}, cfg), cfg);
    for (std::size_t i = 0; i < base.pixels.size(); ++i) {
      if (base.pixels[i] == 0) {
        CHECK(moved.pixels[i] == 0);
      } else {
        CHECK(moved.pixels[i] == base.pixels[i] + k);
      }
    }
  }
}

TEST_CASE("re-voxelizing occupied centers is the identity") {
  VoxelGridConfig cfg;
  Rng rng(29);
  const PointCloud cloud = jittered_cloud(cfg, rng, 60, 1);
  const OccupiedSet occ = voxelize({cloud}, cfg);
  PointCloud centers;
  for (const VoxelIndex& idx : occ.indices) {
    centers.points.push_back(cfg.voxel_center(idx[0], idx[1], idx[2]));
  }
  const OccupiedSet again = voxelize({centers}, cfg);
  CHECK(again.indices == occ.indices);
}

TEST_CASE("voxelization is independent of point order") {
  VoxelGridConfig cfg;
  Rng rng(31);
  PointCloud cloud = jittered_cloud(cfg, rng, 50, 2);
  PointCloud reversed;
  reversed.points.assign(cloud.points.rbegin(), cloud.points.rend());
  CHECK(voxelize({cloud}, cfg).indices == voxelize({reversed}, cfg).indices);
}

TEST_CASE("PGM export writes a P5 header and one byte per pixel") {
  VoxelGridConfig cfg;
  cfg.n_voxel = 4;
  cfg.workspace = {Vec3::Zero(), Vec3(0.4, 0.4, 0.4)};
  OccupiedSet occ;
  occ.indices = {{0, 0, 2}, {3, 3, 0}};
  const DepthImage image = project(occ, cfg);

  const std::string path =
      (std::filesystem::temp_directory_path() / "mea_test_image.pgm").string();
  write_pgm(path, image);

  std::ifstream in(path, std::ios::binary);
  std::string header;
  std::getline(in, header);
  CHECK(header == "P5");
  std::string dims, maxval;
  std::getline(in, dims);
  std::getline(in, maxval);
  CHECK(dims == "4 4");
  CHECK(maxval == "4");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(data.size() == 16);
  CHECK(static_cast<int>(data[0]) == 3);   // (0,0) holds z-index 2 -> value 3
  CHECK(static_cast<int>(data[15]) == 1);  // (3,3) holds z-index 0 -> value 1
  std::remove(path.c_str());
}
