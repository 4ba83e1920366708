#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topobo/point_cloud.hpp"

namespace topobo {

// Indexed, fully labeled collection of point clouds.
struct Pool {
    std::vector<PointCloud> clouds;
    std::string provenance;  // "orbit" or "file"
    std::string params;      // generator parameters or source path, JSON text

    std::size_t size() const { return clouds.size(); }
};

// One linked-twist-map orbit: x_{n+1} = x_n + r y_n (1 - y_n) mod 1,
// y_{n+1} = y_n + r x_{n+1} (1 - x_{n+1}) mod 1, n points including (x0, y0).
PointCloud orbit_cloud(const std::string& id, double x0, double y0, double r, int n_points);

// M orbit clouds of N points; r uniform on [r_min, r_max] is the label.
// Fresh (x0, y0) per cloud unless shared_start. Deterministic given seed;
// cloud i derives its stream from mix_seed(seed, i).
Pool gen_orbit(int num_clouds, int points_per_cloud, double r_min, double r_max, std::uint64_t seed,
               bool shared_start = false, int threads = 0);

// JSON Lines: {"id": string, "points": [[...], ...], "y": real} per line.
Pool load_jsonl(const std::string& path);
void save_jsonl(const Pool& pool, const std::string& path);

// Directory of XYZ files: atom count, then a comment line carrying "y=<real>",
// then "element x y z" rows. Elements are ignored; id is the filename stem.
Pool load_xyz_dir(const std::string& path);

}  // namespace topobo
