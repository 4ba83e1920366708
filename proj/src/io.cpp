#include "topobo/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "topobo/errors.hpp"

using json = nlohmann::json;

namespace topobo {

std::map<CacheKey, CacheRecord> read_pd_cache(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open PD cache: " + path);
    std::map<CacheKey, CacheRecord> out;
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
        CacheRecord r;
        try {
            r.id = rec.at("id").get<std::string>();
            r.degree = rec.at("degree").get<int>();
            r.max_radius = rec.at("max_radius").get<double>();
            r.diagram.degree = r.degree;
            for (const auto& p : rec.at("points"))
                r.diagram.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            if (rec.contains("subsample")) r.subsample = rec["subsample"].get<int>();
        } catch (const json::exception& e) {
            throw input_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        out[{r.id, r.degree}] = std::move(r);
    }
    return out;
}

void write_pd_cache(const std::vector<CacheRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write PD cache: " + path);
    for (const auto& r : records) {
        json pts = json::array();
        for (const auto& p : r.diagram.points) pts.push_back({p.birth, p.death});
        json rec = {{"id", r.id}, {"degree", r.degree}, {"points", std::move(pts)},
                    {"max_radius", r.max_radius}};
        if (r.subsample) rec["subsample"] = *r.subsample;
        out << rec.dump() << "\n";
    }
    if (!out) throw input_error("write failed: " + path);
}

void write_gram_csv(const GramMatrix& gram, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write Gram CSV: " + path);
    for (std::size_t i = 0; i < gram.ids.size(); ++i) out << (i ? "," : "") << gram.ids[i];
    out << "\n";
    char buf[32];
    for (Eigen::Index i = 0; i < gram.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < gram.values.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", gram.values(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw input_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write: " + path);
    out << content;
    if (!out) throw input_error("write failed: " + path);
}

}  // namespace topobo
