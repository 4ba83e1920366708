#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "topobo/point_cloud.hpp"

namespace topobo {

// One undirected edge of the Rips filtration. `value` is the ball radius at
// which the edge appears, i.e. half the Euclidean distance.
struct FilteredEdge {
    std::int32_t i = 0;
    std::int32_t j = 0;  // i < j
    double value = 0.0;
};

struct DiagramPoint {
    double birth = 0.0;
    double death = 0.0;
    double persistence() const { return death - birth; }
};

inline bool operator==(const DiagramPoint& a, const DiagramPoint& b) {
    return a.birth == b.birth && a.death == b.death;
}

// Multiset of finite (birth, death) pairs for one homology degree.
// Essential classes are excluded and birth == death pairs are dropped,
// so death > birth holds for every point.
struct PersistenceDiagram {
    int degree = 0;
    std::vector<DiagramPoint> points;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

inline constexpr std::size_t kDefaultTriangleBudget = 50'000'000;

// All pairs with distance/2 <= max_radius, sorted ascending by (value, i, j).
std::vector<FilteredEdge> rips_edges(const PointCloud& cloud, double max_radius);

// min over points of (max distance to any other point) / 2. Beyond this radius
// the complex is a cone, so H1 is trivial; safe default max_radius for H1.
double enclosing_radius(const PointCloud& cloud);

// Largest pairwise distance / 2; default max_radius for H0 (guarantees the full MST).
double full_mst_radius(const PointCloud& cloud);

// Union-find over edges in ascending order; each merge emits (0, value).
PersistenceDiagram compute_h0(const PointCloud& cloud, double max_radius);

// GF(2) column reduction over the Rips complex restricted to dimension <= 2.
// Simplex order: (value, dimension, lexicographic vertex tuple). Throws
// resource_error when the triangle count exceeds the budget.
PersistenceDiagram compute_h1(const PointCloud& cloud, double max_radius,
                              std::size_t triangle_budget = kDefaultTriangleBudget);

// Farthest-point (maxmin) sampling of m points, start chosen by seed.
// Preserves id and label; deterministic given seed.
PointCloud subsample_maxmin(const PointCloud& cloud, std::size_t m, std::uint64_t seed);

}  // namespace topobo
