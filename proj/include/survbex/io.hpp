#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "survbex/explain.hpp"
#include "survbex/models.hpp"
#include "survbex/survival.hpp"

namespace survbex {

/// Malformed or inconsistent input data (bad cells, missing columns, schema mismatch).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-column category -> ordinal code.
using Encodings = std::map<std::string, std::map<std::string, double>>;

struct CsvOptions {
    std::string time_column = "time";
    std::string event_column = "event";
    std::vector<std::string> feature_columns;  // empty: every other column, in file order
    Encodings encodings;
    char delimiter = ',';
};

/// Reads a delimited file with a header row. Errors name the file line and column.
SurvivalDataset load_csv_dataset(const std::string& path, const CsvOptions& options = {});
SurvivalDataset read_csv_dataset(std::istream& in, const CsvOptions& options = {});

/// Feature names that load_csv_dataset would use for this file.
std::vector<std::string> csv_feature_columns(const std::string& path, const CsvOptions& options = {});

/// Writes header x1..xd,time,event (or the given names) and one row per record in
/// canonical order, with shortest round-trip number formatting.
void write_csv_dataset(std::ostream& out, const SurvivalDataset& dataset,
                       const std::vector<std::string>& feature_names = {});
void save_csv_dataset(const std::string& path, const SurvivalDataset& dataset,
                      const std::vector<std::string>& feature_names = {});

std::string format_number(double v);

/// Rescales every feature column to [0, 1] by its observed range; constant columns become 0.
SurvivalDataset minmax_scaled(const SurvivalDataset& dataset);

// ---------------------------------------------------------------------------
// Model documents
// ---------------------------------------------------------------------------

inline constexpr const char* kModelFormat = "survbex-model/1";

nlohmann::json step_function_to_json(const StepFunction& f);
StepFunction step_function_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const BlackBoxModel& model);
std::unique_ptr<BlackBoxModel> model_from_json(const nlohmann::json& j);

void save_model(const std::string& path, const BlackBoxModel& model);
std::unique_ptr<BlackBoxModel> load_model(const std::string& path);

nlohmann::json explanation_to_json(const ExplanationResult& result);

}  // namespace survbex
