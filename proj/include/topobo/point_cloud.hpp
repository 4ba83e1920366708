#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace topobo {

// Finite set of d-dimensional points, row-major, with an optional objective label.
struct PointCloud {
    std::string id;
    int dim = 0;
    std::vector<double> coords;  // size() == n_points * dim
    std::optional<double> label;

    std::size_t size() const { return dim == 0 ? 0 : coords.size() / static_cast<std::size_t>(dim); }

    const double* point(std::size_t i) const { return coords.data() + i * static_cast<std::size_t>(dim); }
};

// Validates dimensions and finiteness; throws input_error on violation.
void validate_cloud(const PointCloud& cloud);

double point_distance(const PointCloud& cloud, std::size_t i, std::size_t j);

}  // namespace topobo
