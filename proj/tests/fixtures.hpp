// Stand-in files that follow the column layout of three public clinical survival
// datasets. Real copies are used instead when SURVBEX_REAL_DATA names a directory
// holding veteran.csv, gbsg2.csv or whas500.csv.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "survbex/io.hpp"

namespace fixtures {

struct RealSchema {
    std::string name;
    std::string file;
    survbex::CsvOptions options;
    std::size_t rows;
    std::size_t events;
};

const std::vector<RealSchema>& real_schemas();
const RealSchema& schema(const std::string& name);

/// Synthetic file contents with exactly schema.rows rows and schema.events events.
std::string synthetic_csv(const RealSchema& schema, std::uint64_t seed);

/// Path of the file to use: the real copy when available, otherwise a synthetic one written to dir.
std::string fixture_path(const RealSchema& schema, const std::string& dir, std::uint64_t seed);

/// True when fixture_path would pick up a real copy.
bool has_real_copy(const RealSchema& schema);

}  // namespace fixtures
