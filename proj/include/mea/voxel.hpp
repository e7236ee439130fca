#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "mea/env_config.hpp"
#include "mea/trajectory.hpp"

namespace mea {

/// Rasterization of a cubic view region into n_voxel^3 identical cuboids.
struct VoxelGridConfig {
  int n_voxel = 64;
  Aabb workspace{Vec3(-0.32, -0.32, -0.32), Vec3(0.32, 0.32, 0.32)};

  void validate() const;
  Vec3 voxel_size() const;
  Vec3 voxel_center(int x, int y, int z) const;
};

using VoxelIndex = std::array<int, 3>;

/// Voxels containing at least one point.
struct OccupiedSet {
  std::set<VoxelIndex> indices;
};

/// Orthographic min-z projection. 0 marks an empty column; an occupied
/// column stores its minimum z index plus one, so values lie in
/// [0, n_voxel].
struct DepthImage {
  int n_voxel = 0;
  std::vector<int> pixels;  // row-major, pixel (x, y) at y * n_voxel + x

  int at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * n_voxel + x]; }
  int& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * n_voxel + x]; }
};

/// Marks every voxel whose half-open cuboid [lo, lo+size) contains a point.
/// Points on the upper workspace boundary land in the last voxel; points
/// outside the workspace are dropped (logged at debug level).
OccupiedSet voxelize(const std::vector<PointCloud>& clouds, const VoxelGridConfig& cfg);

/// Parallel projection along -z: pixel (x,y) = 1 + min z over the column's
/// occupied voxels, or 0 when the column is empty. Throws on out-of-range
/// indices.
DepthImage project(const OccupiedSet& occupied, const VoxelGridConfig& cfg);

/// One depth channel per segment: M object channels followed by the gripper
/// channel.
std::vector<DepthImage> render_observation(const Observation& obs, const VoxelGridConfig& cfg);

/// Binary PGM (P5) with maxval n_voxel; two-byte big-endian samples when
/// n_voxel > 255.
void write_pgm(const std::string& path, const DepthImage& image);

}  // namespace mea
