#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topobo/pd_kernels.hpp"
#include "topobo/persistence.hpp"

namespace topobo {

// One PD cache record: {"id", "degree", "points": [[b, d], ...], "max_radius"}
// plus optional subsample metadata.
struct CacheRecord {
    std::string id;
    int degree = 0;
    PersistenceDiagram diagram;
    double max_radius = 0.0;
    std::optional<int> subsample;
};

using CacheKey = std::pair<std::string, int>;  // (id, degree)

std::map<CacheKey, CacheRecord> read_pd_cache(const std::string& path);
void write_pd_cache(const std::vector<CacheRecord>& records, const std::string& path);

// CSV with a header row of diagram ids.
void write_gram_csv(const GramMatrix& gram, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace topobo
