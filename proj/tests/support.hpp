#pragma once

#include "mmgp/datagen.hpp"
#include "mmgp/mesh.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <filesystem>
#include <random>
#include <string>

namespace testing_support {

using mmgp::Vec2;

/// Structured triangulation of a rectangle, nx by ny cells, counter-clockwise triangles.
/// Cells listed in `holes` (as iy * nx + ix) are left out.
inline mmgp::TriMesh grid_mesh(int nx, int ny, const mmgp::BBox& box, const std::vector<int>& holes = {}) {
  mmgp::TriMesh m;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.nodes.emplace_back(box.xmin + box.width() * i / nx, box.ymin + box.height() * j / ny);
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (std::find(holes.begin(), holes.end(), j * nx + i) != holes.end()) continue;
      // Alternate the diagonal so the mesh has no preferred direction.
      if ((i + j) % 2 == 0) {
        m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
        m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
      } else {
        m.triangles.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
        m.triangles.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
      }
    }
  m.surface_mask.assign(m.nodes.size(), 0);
  return m;
}

/// Small oracle configuration; same generator as the datasets, coarser mesh.
inline mmgp::DatasetConfig small_config() {
  mmgp::DatasetConfig cfg;
  cfg.mesh.n_surface = 96;
  cfg.mesh.rings = 14;
  return cfg;
}

inline mmgp::Sample oracle_sample(double eps, double eta, double alpha_deg, double reynolds,
                                  const mmgp::DatasetConfig& cfg = small_config()) {
  mmgp::CaseDraw d{eps, eta, alpha_deg * std::numbers::pi / 180.0, reynolds};
  return mmgp::make_oracle_sample(d, cfg);
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mmgp_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
