#include <doctest.h>

#include <cmath>
#include <set>

#include "oracle_reduction.hpp"
#include "test_util.hpp"
#include "topobo/errors.hpp"
#include "topobo/persistence.hpp"
#include "topobo/rng.hpp"

using namespace topobo;
using testutil::make_cloud;
using testutil::sorted_points;
using testutil::unit_square;

namespace {
const double kSqrt2Half = std::sqrt(2.0) / 2.0;
}

TEST_CASE("rips_edges basic") {
    auto two = make_cloud({{0, 0}, {2, 0}});
    auto edges = rips_edges(two, 10.0);
    REQUIRE(edges.size() == 1);
    CHECK(edges[0].value == doctest::Approx(1.0));
    CHECK(edges[0].i == 0);
    CHECK(edges[0].j == 1);

    CHECK(rips_edges(two, 0.5).empty());

    auto edges_sq = rips_edges(unit_square(), 10.0);
    REQUIRE(edges_sq.size() == 6);
    int halves = 0, diags = 0;
    for (const auto& e : edges_sq) {
        if (e.value == doctest::Approx(0.5)) ++halves;
        if (e.value == doctest::Approx(kSqrt2Half)) ++diags;
    }
    CHECK(halves == 4);
    CHECK(diags == 2);
    // ascending by (value, i, j)
    for (std::size_t i = 1; i < edges_sq.size(); ++i) {
        const auto &a = edges_sq[i - 1], &b = edges_sq[i];
        CHECK(std::tie(a.value, a.i, a.j) < std::tie(b.value, b.i, b.j));
    }
}

TEST_CASE("rips_edges rejects bad input") {
    auto two = make_cloud({{0, 0}, {2, 0}});
    CHECK_THROWS_AS(rips_edges(two, 0.0), input_error);
    PointCloud bad = two;
    bad.coords[1] = std::nan("");
    CHECK_THROWS_AS(rips_edges(bad, 1.0), input_error);
}

TEST_CASE("enclosing_radius") {
    CHECK(enclosing_radius(make_cloud({{3, 4}})) == 0.0);
    CHECK(enclosing_radius(make_cloud({{0, 0}, {2, 0}})) == doctest::Approx(1.0));
    CHECK(enclosing_radius(unit_square()) == doctest::Approx(kSqrt2Half));
}

TEST_CASE("compute_h0 fixtures") {
    auto two = make_cloud({{0, 0}, {2, 0}});
    auto d = compute_h0(two, 10.0);
    REQUIRE(d.size() == 1);
    CHECK(d.points[0].birth == 0.0);
    CHECK(d.points[0].death == doctest::Approx(1.0));

    // unit square: MST has 3 edges of length 1 -> deaths at radius 0.5
    auto dsq = compute_h0(unit_square(), 10.0);
    REQUIRE(dsq.size() == 3);
    for (const auto& p : dsq.points) {
        CHECK(p.birth == 0.0);
        CHECK(p.death == doctest::Approx(0.5));
    }
}

TEST_CASE("compute_h0 identical points yields empty diagram") {
    // merges at radius 0 are zero persistence and are dropped in all degrees
    auto same = make_cloud({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
    CHECK(compute_h0(same, 1.0).empty());
    CHECK_THROWS_AS(compute_h0(same, -1.0), input_error);
}

TEST_CASE("compute_h1 fixtures") {
    auto dsq = compute_h1(unit_square(), 10.0);
    REQUIRE(dsq.size() == 1);
    CHECK(dsq.points[0].birth == doctest::Approx(0.5));
    CHECK(dsq.points[0].death == doctest::Approx(kSqrt2Half));

    auto line = make_cloud({{0, 0}, {1, 0}, {2, 0}});
    CHECK(compute_h1(line, 10.0).empty());
}

TEST_CASE("compute_h1 circle of 20 points has one class, matching the oracle") {
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 20; ++i) {
        double a = 2.0 * 3.14159265358979323846 * i / 20.0;
        pts.push_back({std::cos(a), std::sin(a)});
    }
    auto cloud = make_cloud(pts, "circle20");
    double radius = enclosing_radius(cloud);
    auto d = compute_h1(cloud, radius);
    REQUIRE(d.size() == 1);
    auto expect = oracle::reduce_rips(cloud, radius);
    REQUIRE(expect.h1.size() == 1);
    CHECK(d.points[0].birth == expect.h1.points[0].birth);
    CHECK(d.points[0].death == expect.h1.points[0].death);
    CHECK(d.points[0].birth == doctest::Approx(std::sin(3.14159265358979323846 / 20.0)));
}

TEST_CASE("h0/h1 match the naive full reduction on random clouds") {
    Rng rng(20240811);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 2 + rng.below(24);
        auto cloud = testutil::random_cloud(n, 2, rng);
        double radius = trial % 3 == 0 ? 0.2 + 0.8 * rng.uniform01()
                                       : full_mst_radius(cloud) + 0.01;
        if (!(radius > 0.0)) radius = 0.1;
        auto expect = oracle::reduce_rips(cloud, radius);
        auto h0 = sorted_points(compute_h0(cloud, radius));
        auto h1 = sorted_points(compute_h1(cloud, radius));
        REQUIRE(h0 == expect.h0.points);
        REQUIRE(h1 == expect.h1.points);
    }
}

TEST_CASE("compute_h1 empty below the smallest cycle-forming value") {
    auto sq = unit_square();
    CHECK(compute_h1(sq, 0.49).empty());
    // at exactly 0.5 the cycle exists but never dies inside the filtration:
    // essential, hence excluded
    CHECK(compute_h1(sq, 0.5).empty());
    CHECK(compute_h1(sq, 0.75).size() == 1);
}

TEST_CASE("h1 triangle budget raises a resource error") {
    Rng rng(7);
    auto cloud = testutil::random_cloud(30, 2, rng);
    CHECK_THROWS_AS(compute_h1(cloud, 10.0, 100), resource_error);
}

TEST_CASE("diagram determinism") {
    Rng rng(99);
    auto cloud = testutil::random_cloud(40, 2, rng);
    double radius = enclosing_radius(cloud);
    auto a0 = compute_h0(cloud, radius);
    auto b0 = compute_h0(cloud, radius);
    auto a1 = compute_h1(cloud, radius);
    auto b1 = compute_h1(cloud, radius);
    CHECK(a0.points == b0.points);
    CHECK(a1.points == b1.points);
}

TEST_CASE("stability smoke: H0 deaths move by at most the point displacement") {
    Rng rng(4242);
    auto cloud = testutil::random_cloud(20, 2, rng, 10.0);  // scale keeps distances distinct
    double radius = full_mst_radius(cloud) + 1.0;
    auto base = sorted_points(compute_h0(cloud, radius));
    const double eps = 1e-4;
    PointCloud shifted = cloud;
    for (auto& v : shifted.coords) v += (2.0 * rng.uniform01() - 1.0) * eps / std::sqrt(2.0);
    auto moved = sorted_points(compute_h0(shifted, radius));
    REQUIRE(base.size() == moved.size());
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(std::abs(base[i].death - moved[i].death) <= eps * (1.0 + 1e-9));
}

TEST_CASE("subsample_maxmin") {
    auto sq = unit_square();

    SUBCASE("m = N returns the same point set") {
        auto out = subsample_maxmin(sq, 4, 123);
        std::multiset<std::pair<double, double>> a, b;
        for (std::size_t i = 0; i < 4; ++i) {
            a.insert({sq.point(i)[0], sq.point(i)[1]});
            b.insert({out.point(i)[0], out.point(i)[1]});
        }
        CHECK(a == b);
        CHECK(out.id == sq.id);
    }

    SUBCASE("m = 1 returns exactly the seed-chosen point") {
        auto out = subsample_maxmin(sq, 1, 5);
        CHECK(out.size() == 1);
    }

    SUBCASE("m = 2 picks a diagonal for every seed") {
        for (std::uint64_t seed = 0; seed < 16; ++seed) {
            auto out = subsample_maxmin(sq, 2, seed);
            double d = point_distance(out, 0, 1);
            CHECK(d == doctest::Approx(std::sqrt(2.0)));
        }
    }

    SUBCASE("m = 0 is an input error") { CHECK_THROWS_AS(subsample_maxmin(sq, 0, 0), input_error); }

    SUBCASE("deterministic and label-preserving") {
        Rng rng(8);
        auto cloud = testutil::random_cloud(50, 3, rng);
        cloud.label = 2.5;
        auto a = subsample_maxmin(cloud, 10, 77);
        auto b = subsample_maxmin(cloud, 10, 77);
        CHECK(a.coords == b.coords);
        CHECK(a.label == cloud.label);
    }
}
