#include "topobo/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "topobo/errors.hpp"
#include "topobo/parallel.hpp"
#include "topobo/persistence.hpp"
#include "topobo/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace topobo {

PointCloud orbit_cloud(const std::string& id, double x0, double y0, double r, int n_points) {
    if (n_points < 1) throw input_error("orbit cloud needs at least 1 point");
    PointCloud cloud;
    cloud.id = id;
    cloud.dim = 2;
    cloud.label = r;
    cloud.coords.reserve(static_cast<std::size_t>(n_points) * 2);
    double x = x0, y = y0;
    cloud.coords.push_back(x);
    cloud.coords.push_back(y);
    for (int n = 1; n < n_points; ++n) {
        x = std::fmod(x + r * y * (1.0 - y), 1.0);
        y = std::fmod(y + r * x * (1.0 - x), 1.0);
        cloud.coords.push_back(x);
        cloud.coords.push_back(y);
    }
    return cloud;
}

Pool gen_orbit(int num_clouds, int points_per_cloud, double r_min, double r_max, std::uint64_t seed,
               bool shared_start, int threads) {
    if (num_clouds < 1 || points_per_cloud < 1) throw input_error("gen_orbit: M and N must be >= 1");
    if (!(r_min < r_max)) throw input_error("gen_orbit: r_min must be < r_max");

    double shared_x0 = 0.0, shared_y0 = 0.0;
    if (shared_start) {
        Rng master(mix_seed(seed, 0x5337));
        shared_x0 = master.uniform01();
        shared_y0 = master.uniform01();
    }

    Pool pool;
    pool.provenance = "orbit";
    {
        json p = {{"M", num_clouds}, {"N", points_per_cloud}, {"r_min", r_min},
                  {"r_max", r_max},  {"seed", seed},          {"shared_start", shared_start}};
        pool.params = p.dump();
    }
    pool.clouds.resize(static_cast<std::size_t>(num_clouds));
    parallel_for(static_cast<std::size_t>(num_clouds), threads, [&](std::size_t i) {
        Rng rng(mix_seed(seed, i));
        double x0, y0;
        if (shared_start) {
            x0 = shared_x0;
            y0 = shared_y0;
        } else {
            x0 = rng.uniform01();
            y0 = rng.uniform01();
        }
        double r = rng.uniform(r_min, r_max);
        char id[32];
        std::snprintf(id, sizeof(id), "orbit-%04zu", i);
        pool.clouds[i] = orbit_cloud(id, x0, y0, r, points_per_cloud);
    });
    return pool;
}

namespace {

void validate_pool(Pool& pool, const std::string& source) {
    if (pool.clouds.empty()) throw input_error("empty pool: " + source);
    std::set<std::string> seen;
    int dim = pool.clouds.front().dim;
    for (auto& c : pool.clouds) {
        validate_cloud(c);
        if (!c.label) throw input_error("cloud '" + c.id + "' has no label");
        if (!seen.insert(c.id).second) throw input_error("duplicate cloud id '" + c.id + "'");
        if (c.dim != dim)
            throw input_error("dimension mismatch: cloud '" + c.id + "' has d=" +
                              std::to_string(c.dim) + ", expected " + std::to_string(dim));
    }
}

}  // namespace

Pool load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open pool file: " + path);
    Pool pool;
    pool.provenance = "file";
    pool.params = json{{"path", path}}.dump();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw input_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!rec.contains("id") || !rec.contains("points") || !rec.contains("y"))
            throw input_error(path + ":" + std::to_string(line_no) +
                              ": record needs id, points, y");
        PointCloud c;
        try {
            c.id = rec["id"].get<std::string>();
            c.label = rec["y"].get<double>();
            const auto& pts = rec["points"];
            if (!pts.is_array() || pts.empty())
                throw input_error("points must be a non-empty array");
            c.dim = static_cast<int>(pts[0].size());
            for (const auto& p : pts) {
                if (static_cast<int>(p.size()) != c.dim)
                    throw input_error("ragged point dimensions");
                for (const auto& v : p) c.coords.push_back(v.get<double>());
            }
        } catch (const json::exception& e) {
            throw input_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const input_error& e) {
            throw input_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        pool.clouds.push_back(std::move(c));
    }
    validate_pool(pool, path);
    return pool;
}

void save_jsonl(const Pool& pool, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write pool file: " + path);
    for (const auto& c : pool.clouds) {
        json pts = json::array();
        for (std::size_t i = 0; i < c.size(); ++i) {
            json p = json::array();
            for (int k = 0; k < c.dim; ++k) p.push_back(c.point(i)[k]);
            pts.push_back(std::move(p));
        }
        json rec = {{"id", c.id}, {"points", std::move(pts)}, {"y", c.label.value_or(0.0)}};
        out << rec.dump() << "\n";
    }
    if (!out) throw input_error("write failed: " + path);
}

Pool load_xyz_dir(const std::string& path) {
    if (!fs::is_directory(path)) throw input_error("not a directory: " + path);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
        if (entry.is_regular_file() && entry.path().extension() == ".xyz")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw input_error("empty pool: no .xyz files in " + path);

    Pool pool;
    pool.provenance = "file";
    pool.params = json{{"path", path}}.dump();
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw input_error("cannot open " + file.string());
        std::string count_line, comment;
        if (!std::getline(in, count_line))
            throw input_error(file.string() + ": missing atom count line");
        long declared = 0;
        try {
            declared = std::stol(count_line);
        } catch (...) {
            throw input_error(file.string() + ": bad atom count '" + count_line + "'");
        }
        if (declared < 1) throw input_error(file.string() + ": atom count must be >= 1");
        if (!std::getline(in, comment)) throw input_error(file.string() + ": missing comment line");
        auto pos = comment.find("y=");
        if (pos == std::string::npos)
            throw input_error(file.string() + ": comment line lacks 'y=<value>'");
        double label = 0.0;
        try {
            label = std::stod(comment.substr(pos + 2));
        } catch (...) {
            throw input_error(file.string() + ": cannot parse label from '" + comment + "'");
        }

        PointCloud c;
        c.id = file.stem().string();
        c.dim = 3;
        c.label = label;
        std::string row;
        long parsed = 0;
        while (std::getline(in, row)) {
            std::istringstream ss(row);
            std::string element;
            double x, y, z;
            if (!(ss >> element)) continue;  // blank trailing line
            if (!(ss >> x >> y >> z))
                throw input_error(file.string() + ": bad atom row '" + row + "'");
            c.coords.insert(c.coords.end(), {x, y, z});
            ++parsed;
        }
        if (parsed != declared)
            throw input_error(file.string() + ": declared " + std::to_string(declared) +
                              " atoms, found " + std::to_string(parsed));
        pool.clouds.push_back(std::move(c));
    }
    validate_pool(pool, path);
    return pool;
}

}  // namespace topobo
