#include "mea/voxel.hpp"

#include <cmath>
#include <fstream>

#include "mea/errors.hpp"
#include "mea/log.hpp"

namespace mea {

void VoxelGridConfig::validate() const {
  if (n_voxel < 1) throw ValidationError("VoxelGridConfig.n_voxel must be at least 1");
  if (!(workspace.lo.array() < workspace.hi.array()).all()) {
    throw ValidationError("VoxelGridConfig.workspace is degenerate");
  }
}

Vec3 VoxelGridConfig::voxel_size() const { return (workspace.hi - workspace.lo) / n_voxel; }

Vec3 VoxelGridConfig::voxel_center(int x, int y, int z) const {
  const Vec3 size = voxel_size();
  return workspace.lo + Vec3((x + 0.5) * size.x(), (y + 0.5) * size.y(), (z + 0.5) * size.z());
}

OccupiedSet voxelize(const std::vector<PointCloud>& clouds, const VoxelGridConfig& cfg) {
  cfg.validate();
  const Vec3 size = cfg.voxel_size();
  OccupiedSet occupied;
  int dropped = 0;
  for (const PointCloud& cloud : clouds) {
    for (const Vec3& p : cloud.points) {
      if (!cfg.workspace.contains(p)) {
        ++dropped;
        continue;
      }
      VoxelIndex idx;
      for (int axis = 0; axis < 3; ++axis) {
        int i = static_cast<int>(std::floor((p[axis] - cfg.workspace.lo[axis]) / size[axis]));
        // Points exactly on the upper boundary belong to the last voxel.
        if (i >= cfg.n_voxel) i = cfg.n_voxel - 1;
        if (i < 0) i = 0;
        idx[axis] = i;
      }
      occupied.indices.insert(idx);
    }
  }
  if (dropped > 0) {
    log(LogLevel::kDebug, "voxelize dropped %d point(s) outside the workspace", dropped);
  }
  return occupied;
}

DepthImage project(const OccupiedSet& occupied, const VoxelGridConfig& cfg) {
  cfg.validate();
  DepthImage image;
  image.n_voxel = cfg.n_voxel;
  image.pixels.assign(static_cast<std::size_t>(cfg.n_voxel) * cfg.n_voxel, 0);
  for (const VoxelIndex& idx : occupied.indices) {
    for (int axis = 0; axis < 3; ++axis) {
      if (idx[axis] < 0 || idx[axis] >= cfg.n_voxel) {
        throw ValidationError("occupied voxel index out of range");
      }
    }
    int& pixel = image.at(idx[0], idx[1]);
    const int encoded = idx[2] + 1;
    if (pixel == 0 || encoded < pixel) pixel = encoded;
  }
  return image;
}

std::vector<DepthImage> render_observation(const Observation& obs, const VoxelGridConfig& cfg) {
  std::vector<DepthImage> channels;
  channels.reserve(obs.object_clouds.size() + 1);
  for (const PointCloud& cloud : obs.object_clouds) {
    channels.push_back(project(voxelize({cloud}, cfg), cfg));
  }
  channels.push_back(project(voxelize({obs.gripper_cloud}, cfg), cfg));
  return channels;
}

void write_pgm(const std::string& path, const DepthImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const int maxval = image.n_voxel;
  out << "P5\n" << image.n_voxel << ' ' << image.n_voxel << '\n' << maxval << '\n';
  for (int v : image.pixels) {
    if (maxval > 255) {
      out.put(static_cast<char>((v >> 8) & 0xff));
    }
    out.put(static_cast<char>(v & 0xff));
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace mea
