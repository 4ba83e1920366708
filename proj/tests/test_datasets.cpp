#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "test_util.hpp"
#include "topobo/datasets.hpp"
#include "topobo/errors.hpp"
#include "topobo/persistence.hpp"
#include "topobo/rng.hpp"

using namespace topobo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("topobo_test_" + std::to_string(Rng(std::random_device{}()).raw()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

// Wilcoxon rank-sum p-value via the normal approximation.
double rank_sum_pvalue(std::vector<double> a, std::vector<double> b) {
    struct Tagged {
        double v;
        int group;
    };
    std::vector<Tagged> all;
    for (double v : a) all.push_back({v, 0});
    for (double v : b) all.push_back({v, 1});
    std::sort(all.begin(), all.end(), [](const Tagged& x, const Tagged& y) { return x.v < y.v; });
    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i].group == 0) rank_sum_a += static_cast<double>(i + 1);
    const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
    const double mu = n1 * (n1 + n2 + 1) / 2.0;
    const double sigma = std::sqrt(n1 * n2 * (n1 + n2 + 1) / 12.0);
    double z = (rank_sum_a - mu) / sigma;
    return std::erfc(std::abs(z) / std::sqrt(2.0));  // two-sided
}

}  // namespace

TEST_CASE("orbit_cloud") {
    SUBCASE("origin is a fixed point") {
        auto c = orbit_cloud("fp", 0.0, 0.0, 3.5, 10);
        for (std::size_t i = 0; i < c.size(); ++i) {
            CHECK(c.point(i)[0] == 0.0);
            CHECK(c.point(i)[1] == 0.0);
        }
    }

    SUBCASE("first point is the start, count honored") {
        auto c = orbit_cloud("s", 0.25, 0.75, 4.0, 17);
        CHECK(c.size() == 17);
        CHECK(c.point(0)[0] == 0.25);
        CHECK(c.point(0)[1] == 0.75);
    }
}

TEST_CASE("gen_orbit") {
    SUBCASE("reproducible bit-identically") {
        auto a = gen_orbit(6, 50, 2.0, 4.3, 123, false, 2);
        auto b = gen_orbit(6, 50, 2.0, 4.3, 123, false, 1);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.clouds[i].coords == b.clouds[i].coords);
            CHECK(a.clouds[i].label == b.clouds[i].label);
            CHECK(a.clouds[i].id == b.clouds[i].id);
        }
    }

    SUBCASE("coordinates in [0,1) and labels in range") {
        auto pool = gen_orbit(10, 80, 2.0, 4.3, 7);
        for (const auto& c : pool.clouds) {
            REQUIRE(c.label.has_value());
            CHECK(*c.label >= 2.0);
            CHECK(*c.label <= 4.3);
            for (double v : c.coords) {
                CHECK(v >= 0.0);
                CHECK(v < 1.0);
            }
        }
        CHECK(pool.provenance == "orbit");
    }

    SUBCASE("shared start reuses (x0, y0) across clouds") {
        auto pool = gen_orbit(5, 10, 2.0, 4.3, 9, true);
        double x0 = pool.clouds[0].point(0)[0], y0 = pool.clouds[0].point(0)[1];
        for (const auto& c : pool.clouds) {
            CHECK(c.point(0)[0] == x0);
            CHECK(c.point(0)[1] == y0);
        }
    }

    SUBCASE("input validation") {
        CHECK_THROWS_AS(gen_orbit(0, 10, 2.0, 4.3, 1), input_error);
        CHECK_THROWS_AS(gen_orbit(1, 10, 4.3, 2.0, 1), input_error);
    }
}

TEST_CASE("label is topologically detectable: H1 total persistence separates r ranges") {
    const int m = 25, n = 300;
    auto low = gen_orbit(m, n, 2.0, 2.1, 11, false, 2);
    auto high = gen_orbit(m, n, 4.2, 4.3, 12, false, 2);
    auto total_pers = [](const Pool& pool) {
        std::vector<double> out;
        for (const auto& c : pool.clouds) {
            auto d = compute_h1(c, enclosing_radius(c));
            double s = 0.0;
            for (const auto& p : d.points) s += p.persistence();
            out.push_back(s);
        }
        return out;
    };
    auto a = total_pers(low);
    auto b = total_pers(high);
    CHECK(rank_sum_pvalue(a, b) < 0.01);
}

TEST_CASE("load_jsonl") {
    TempDir tmp;

    SUBCASE("round-trips through save_jsonl") {
        auto pool = gen_orbit(4, 12, 2.0, 4.3, 3);
        auto path = (tmp.path / "pool.jsonl").string();
        save_jsonl(pool, path);
        auto loaded = load_jsonl(path);
        REQUIRE(loaded.size() == pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) {
            CHECK(loaded.clouds[i].id == pool.clouds[i].id);
            CHECK(loaded.clouds[i].coords == pool.clouds[i].coords);
            CHECK(*loaded.clouds[i].label == *pool.clouds[i].label);
        }
    }

    SUBCASE("one valid line") {
        auto path = (tmp.path / "one.jsonl").string();
        write_file(path, R"({"id": "a", "points": [[0, 0], [1, 1]], "y": 2.5})" "\n");
        auto pool = load_jsonl(path);
        REQUIRE(pool.size() == 1);
        CHECK(pool.clouds[0].dim == 2);
        CHECK(*pool.clouds[0].label == 2.5);
    }

    SUBCASE("empty file is an empty-pool error") {
        auto path = (tmp.path / "empty.jsonl").string();
        write_file(path, "");
        CHECK_THROWS_WITH_AS(load_jsonl(path), doctest::Contains("empty pool"), input_error);
    }

    SUBCASE("malformed line reports its line number") {
        auto path = (tmp.path / "bad.jsonl").string();
        write_file(path, R"({"id": "a", "points": [[0, 0]], "y": 1})" "\n{nope\n");
        CHECK_THROWS_WITH_AS(load_jsonl(path), doctest::Contains(":2:"), input_error);
    }

    SUBCASE("duplicate ids rejected") {
        auto path = (tmp.path / "dup.jsonl").string();
        write_file(path, R"({"id": "a", "points": [[0, 0]], "y": 1})" "\n"
                         R"({"id": "a", "points": [[1, 1]], "y": 2})" "\n");
        CHECK_THROWS_WITH_AS(load_jsonl(path), doctest::Contains("duplicate"), input_error);
    }

    SUBCASE("mixed dimensions rejected") {
        auto path = (tmp.path / "mix.jsonl").string();
        write_file(path, R"({"id": "a", "points": [[0, 0]], "y": 1})" "\n"
                         R"({"id": "b", "points": [[1, 1, 1]], "y": 2})" "\n");
        CHECK_THROWS_WITH_AS(load_jsonl(path), doctest::Contains("dimension"), input_error);
    }
}

TEST_CASE("load_xyz_dir") {
    TempDir tmp;

    SUBCASE("water molecule with label") {
        write_file(tmp.path / "water.xyz",
                   "3\ny=-6.3\nO 0.0 0.0 0.117\nH 0.0 0.757 -0.471\nH 0.0 -0.757 -0.471\n");
        auto pool = load_xyz_dir(tmp.path.string());
        REQUIRE(pool.size() == 1);
        CHECK(pool.clouds[0].id == "water");
        CHECK(pool.clouds[0].size() == 3);
        CHECK(pool.clouds[0].dim == 3);
        CHECK(*pool.clouds[0].label == -6.3);
    }

    SUBCASE("count mismatch rejected") {
        write_file(tmp.path / "short.xyz", "5\ny=1.0\nC 0 0 0\nC 1 0 0\nC 0 1 0\nC 0 0 1\n");
        CHECK_THROWS_WITH_AS(load_xyz_dir(tmp.path.string()), doctest::Contains("declared"),
                             input_error);
    }

    SUBCASE("missing label rejected") {
        write_file(tmp.path / "nolabel.xyz", "1\nno label here\nC 0 0 0\n");
        CHECK_THROWS_WITH_AS(load_xyz_dir(tmp.path.string()), doctest::Contains("y="), input_error);
    }

    SUBCASE("empty directory is an empty-pool error") {
        CHECK_THROWS_WITH_AS(load_xyz_dir(tmp.path.string()), doctest::Contains("empty pool"),
                             input_error);
    }
}
