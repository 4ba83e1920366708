#include "topobo/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "topobo/errors.hpp"
#include "topobo/rng.hpp"

namespace topobo {

void validate_cloud(const PointCloud& cloud) {
    if (cloud.dim < 1) throw input_error("point cloud '" + cloud.id + "': dimension must be >= 1");
    if (cloud.coords.empty() || cloud.coords.size() % static_cast<std::size_t>(cloud.dim) != 0)
        throw input_error("point cloud '" + cloud.id + "': coordinate count not a multiple of dim");
    for (double v : cloud.coords)
        if (!std::isfinite(v))
            throw input_error("point cloud '" + cloud.id + "': non-finite coordinate");
}

double point_distance(const PointCloud& cloud, std::size_t i, std::size_t j) {
    const double* a = cloud.point(i);
    const double* b = cloud.point(j);
    double s = 0.0;
    for (int k = 0; k < cloud.dim; ++k) {
        double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<FilteredEdge> rips_edges(const PointCloud& cloud, double max_radius) {
    if (!(max_radius > 0.0)) throw input_error("max_radius must be > 0");
    validate_cloud(cloud);
    const std::size_t n = cloud.size();
    std::vector<FilteredEdge> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double r = point_distance(cloud, i, j) / 2.0;
            if (r <= max_radius)
                edges.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), r});
        }
    }
    std::sort(edges.begin(), edges.end(), [](const FilteredEdge& a, const FilteredEdge& b) {
        if (a.value != b.value) return a.value < b.value;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    return edges;
}

double enclosing_radius(const PointCloud& cloud) {
    validate_cloud(cloud);
    const std::size_t n = cloud.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double far = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            far = std::max(far, point_distance(cloud, i, j));
        }
        best = std::min(best, far);
    }
    return n <= 1 ? 0.0 : best / 2.0;
}

double full_mst_radius(const PointCloud& cloud) {
    validate_cloud(cloud);
    const std::size_t n = cloud.size();
    double far = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) far = std::max(far, point_distance(cloud, i, j));
    return far / 2.0;
}

namespace {

struct UnionFind {
    std::vector<std::int32_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::int32_t find(std::int32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
};

}  // namespace

PersistenceDiagram compute_h0(const PointCloud& cloud, double max_radius) {
    auto edges = rips_edges(cloud, max_radius);
    UnionFind uf(cloud.size());
    PersistenceDiagram dgm;
    dgm.degree = 0;
    for (const auto& e : edges) {
        std::int32_t a = uf.find(e.i);
        std::int32_t b = uf.find(e.j);
        if (a == b) continue;
        uf.parent[std::max(a, b)] = std::min(a, b);
        if (e.value > 0.0) dgm.points.push_back({0.0, e.value});
    }
    return dgm;
}

namespace {

struct Triangle {
    double value;
    std::int32_t i, j, k;
};

// XOR-merge of two sorted GF(2) columns.
void add_column(std::vector<std::int32_t>& col, const std::vector<std::int32_t>& other,
                std::vector<std::int32_t>& scratch) {
    scratch.clear();
    std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(),
                                  std::back_inserter(scratch));
    col.swap(scratch);
}

}  // namespace

// Degree-1 pairs come from reducing the edge-triangle coboundary matrix with
// edge columns processed in reverse filtration order; by anti-transpose
// duality the (edge, triangle) pairs equal those of the boundary reduction in
// simplex order (value, dim, lex), and Rips coboundaries reduce with almost no
// fill-in. Essential classes never pair and are excluded by construction.
PersistenceDiagram compute_h1(const PointCloud& cloud, double max_radius, std::size_t triangle_budget) {
    if (cloud.size() > 4096)
        throw resource_error("cloud too large for H1 reduction (" + std::to_string(cloud.size()) +
                             " points); subsample the cloud first (e.g. maxmin subsampling to 300 points)");
    auto edges = rips_edges(cloud, max_radius);
    const std::size_t n = cloud.size();
    const std::size_t m = edges.size();

    // edge id lookup by vertex pair
    std::vector<std::int32_t> edge_id(n * n, -1);
    for (std::size_t e = 0; e < m; ++e)
        edge_id[static_cast<std::size_t>(edges[e].i) * n + edges[e].j] = static_cast<std::int32_t>(e);
    auto eid = [&](std::int32_t a, std::int32_t b) { return edge_id[static_cast<std::size_t>(a) * n + b]; };

    std::vector<Triangle> tris;
    for (std::size_t ei = 0; ei < m; ++ei) {
        // extend edge (i, j) by k > j so each triangle is generated once
        const auto& e = edges[ei];
        for (std::int32_t k = e.j + 1; k < static_cast<std::int32_t>(n); ++k) {
            std::int32_t e2 = eid(e.i, k);
            if (e2 < 0) continue;
            std::int32_t e3 = eid(e.j, k);
            if (e3 < 0) continue;
            double v = std::max({e.value, edges[e2].value, edges[e3].value});
            if (v <= max_radius) {
                tris.push_back({v, e.i, e.j, k});
                if (tris.size() > triangle_budget)
                    throw resource_error(
                        "triangle budget exceeded (" + std::to_string(triangle_budget) +
                        "); subsample the cloud first (e.g. maxmin subsampling to 300 points)");
            }
        }
    }
    std::sort(tris.begin(), tris.end(), [](const Triangle& a, const Triangle& b) {
        if (a.value != b.value) return a.value < b.value;
        if (a.i != b.i) return a.i < b.i;
        if (a.j != b.j) return a.j < b.j;
        return a.k < b.k;
    });

    // cofacet lists per edge, ascending in triangle filtration order
    std::vector<std::int32_t> cofacet_count(m, 0);
    for (const auto& t : tris) {
        ++cofacet_count[eid(t.i, t.j)];
        ++cofacet_count[eid(t.i, t.k)];
        ++cofacet_count[eid(t.j, t.k)];
    }
    std::vector<std::size_t> offset(m + 1, 0);
    for (std::size_t e = 0; e < m; ++e) offset[e + 1] = offset[e] + cofacet_count[e];
    std::vector<std::int32_t> cofacets(offset[m]);
    {
        std::vector<std::size_t> cursor(offset.begin(), offset.end() - 1);
        for (std::size_t t = 0; t < tris.size(); ++t) {
            const auto& tr = tris[t];
            cofacets[cursor[eid(tr.i, tr.j)]++] = static_cast<std::int32_t>(t);
            cofacets[cursor[eid(tr.i, tr.k)]++] = static_cast<std::int32_t>(t);
            cofacets[cursor[eid(tr.j, tr.k)]++] = static_cast<std::int32_t>(t);
        }
    }

    // clearing: edges that merge components pair with vertices, so their
    // coboundary columns reduce to zero and can be skipped outright
    std::vector<bool> merges_components(m, false);
    {
        UnionFind uf(n);
        for (std::size_t e = 0; e < m; ++e) {
            std::int32_t a = uf.find(edges[e].i);
            std::int32_t b = uf.find(edges[e].j);
            if (a == b) continue;
            uf.parent[std::max(a, b)] = std::min(a, b);
            merges_components[e] = true;
        }
    }

    PersistenceDiagram dgm;
    dgm.degree = 1;
    std::vector<std::int32_t> pivot_owner(tris.size(), -1);  // triangle -> stored column
    std::vector<std::vector<std::int32_t>> stored;
    std::vector<std::int32_t> col, scratch;
    for (std::size_t e_rev = m; e_rev-- > 0;) {
        if (merges_components[e_rev]) continue;
        col.assign(cofacets.begin() + static_cast<std::ptrdiff_t>(offset[e_rev]),
                   cofacets.begin() + static_cast<std::ptrdiff_t>(offset[e_rev + 1]));
        for (;;) {
            if (col.empty()) break;
            std::int32_t low = col.front();  // earliest triangle = pivot in reversed row order
            std::int32_t owner = pivot_owner[low];
            if (owner < 0) {
                pivot_owner[low] = static_cast<std::int32_t>(stored.size());
                stored.push_back(col);
                double birth = edges[e_rev].value;
                if (tris[static_cast<std::size_t>(low)].value > birth)
                    dgm.points.push_back({birth, tris[static_cast<std::size_t>(low)].value});
                break;
            }
            add_column(col, stored[static_cast<std::size_t>(owner)], scratch);
        }
    }
    std::sort(dgm.points.begin(), dgm.points.end(), [](const DiagramPoint& a, const DiagramPoint& b) {
        return a.birth != b.birth ? a.birth < b.birth : a.death < b.death;
    });
    return dgm;
}

PointCloud subsample_maxmin(const PointCloud& cloud, std::size_t m, std::uint64_t seed) {
    validate_cloud(cloud);
    const std::size_t n = cloud.size();
    if (m == 0) throw input_error("subsample size must be >= 1");
    if (m > n) throw input_error("subsample size exceeds cloud size");

    Rng rng(seed);
    std::size_t start = rng.below(n);

    std::vector<std::size_t> chosen;
    chosen.reserve(m);
    chosen.push_back(start);
    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) min_dist[i] = point_distance(cloud, i, start);
    min_dist[start] = -1.0;  // taken

    while (chosen.size() < m) {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (min_dist[i] > best_d) {
                best_d = min_dist[i];
                best = i;
            }
        }
        chosen.push_back(best);
        min_dist[best] = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (min_dist[i] < 0.0) continue;
            min_dist[i] = std::min(min_dist[i], point_distance(cloud, i, best));
        }
    }

    PointCloud out;
    out.id = cloud.id;
    out.dim = cloud.dim;
    out.label = cloud.label;
    out.coords.reserve(m * static_cast<std::size_t>(cloud.dim));
    for (std::size_t idx : chosen) {
        const double* p = cloud.point(idx);
        out.coords.insert(out.coords.end(), p, p + cloud.dim);
    }
    return out;
}

}  // namespace topobo
