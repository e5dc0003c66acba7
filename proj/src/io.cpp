#include "survbex/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace survbex {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Splits one line; double quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

bool is_missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "?";
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

struct Header {
    std::vector<std::string> names;
    std::size_t time = 0, event = 0;
    std::vector<std::size_t> features;
    std::vector<std::string> feature_names;
};

Header resolve_header(const std::string& line, const CsvOptions& opt) {
    Header h;
    h.names = split_fields(line, opt.delimiter);
    auto find = [&](const std::string& name) {
        auto it = std::find(h.names.begin(), h.names.end(), name);
        if (it == h.names.end()) throw DataError("missing column '" + name + "'");
        return static_cast<std::size_t>(it - h.names.begin());
    };
    h.time = find(opt.time_column);
    h.event = find(opt.event_column);
    if (opt.feature_columns.empty()) {
        for (std::size_t c = 0; c < h.names.size(); ++c) {
            if (c != h.time && c != h.event) {
                h.features.push_back(c);
                h.feature_names.push_back(h.names[c]);
            }
        }
    } else {
        for (const auto& name : opt.feature_columns) {
            h.features.push_back(find(name));
            h.feature_names.push_back(name);
        }
    }
    if (h.features.empty()) throw DataError("no feature columns");
    for (const auto& [col, _] : opt.encodings) {
        if (std::find(h.names.begin(), h.names.end(), col) == h.names.end()) {
            throw DataError("encoding given for missing column '" + col + "'");
        }
    }
    return h;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
    return std::string(buf, ptr);
}

SurvivalDataset read_csv_dataset(std::istream& in, const CsvOptions& opt) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw DataError("empty file: header row required");
    const Header h = resolve_header(line, opt);

    std::vector<SurvivalRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line, opt.delimiter);
        const std::string where = "line " + std::to_string(line_no);
        if (fields.size() != h.names.size()) {
            throw DataError(where + ": expected " + std::to_string(h.names.size()) + " fields, found " +
                            std::to_string(fields.size()));
        }
        auto cell = [&](std::size_t c) -> double {
            const std::string& s = fields[c];
            const std::string& col = h.names[c];
            if (is_missing(s)) throw DataError(where + ", column '" + col + "': missing value");
            if (auto enc = opt.encodings.find(col); enc != opt.encodings.end()) {
                auto code = enc->second.find(s);
                if (code == enc->second.end()) {
                    throw DataError(where + ", column '" + col + "': unknown category '" + s + "'");
                }
                return code->second;
            }
            auto v = parse_double(s);
            if (!v || !std::isfinite(*v)) {
                throw DataError(where + ", column '" + col + "': cannot parse '" + s + "' as a number");
            }
            return *v;
        };
        SurvivalRecord r;
        r.time = cell(h.time);
        const double ev = cell(h.event);
        if (ev != 0.0 && ev != 1.0) {
            throw DataError(where + ", column '" + h.names[h.event] + "': event must be 0 or 1");
        }
        if (!(r.time > 0.0)) {
            throw DataError(where + ", column '" + h.names[h.time] + "': time must be positive");
        }
        r.event = static_cast<int>(ev);
        r.features.reserve(h.features.size());
        for (std::size_t c : h.features) r.features.push_back(cell(c));
        records.push_back(std::move(r));
    }
    if (records.empty()) throw DataError("no data rows");
    try {
        return SurvivalDataset(std::move(records));
    } catch (const std::domain_error& e) {
        throw DataError(e.what());
    }
}

SurvivalDataset load_csv_dataset(const std::string& path, const CsvOptions& options) {
    auto in = open_input(path);
    try {
        return read_csv_dataset(in, options);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::vector<std::string> csv_feature_columns(const std::string& path, const CsvOptions& options) {
    auto in = open_input(path);
    std::string line;
    while (std::getline(in, line) && trim(line).empty()) {
    }
    return resolve_header(line, options).feature_names;
}

void write_csv_dataset(std::ostream& out, const SurvivalDataset& ds, const std::vector<std::string>& names) {
    if (!names.empty() && names.size() != ds.dim()) {
        throw std::domain_error("write_csv_dataset: feature name count does not match dimension");
    }
    for (std::size_t l = 0; l < ds.dim(); ++l) {
        out << (names.empty() ? "x" + std::to_string(l + 1) : names[l]) << ',';
    }
    out << "time,event\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.features(i)) out << format_number(v) << ',';
        out << format_number(ds.time(i)) << ',' << ds.event(i) << '\n';
    }
}

void save_csv_dataset(const std::string& path, const SurvivalDataset& ds, const std::vector<std::string>& names) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    write_csv_dataset(out, ds, names);
}

SurvivalDataset minmax_scaled(const SurvivalDataset& ds) {
    const std::size_t d = ds.dim();
    Vector lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto f = ds.features(i);
        for (std::size_t l = 0; l < d; ++l) {
            lo[l] = std::min(lo[l], f[l]);
            hi[l] = std::max(hi[l], f[l]);
        }
    }
    auto recs = ds.records();
    for (auto& r : recs) {
        for (std::size_t l = 0; l < d; ++l) {
            r.features[l] = hi[l] > lo[l] ? (r.features[l] - lo[l]) / (hi[l] - lo[l]) : 0.0;
        }
    }
    return SurvivalDataset(std::move(recs));
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

using nlohmann::json;

json step_function_to_json(const StepFunction& f) {
    return {{"grid", std::vector<double>(f.grid().times().begin(), f.grid().times().end())},
            {"values", std::vector<double>(f.values().begin(), f.values().end())}};
}

StepFunction step_function_from_json(const json& j) {
    return StepFunction(TimeGrid(j.at("grid").get<std::vector<double>>()), j.at("values").get<std::vector<double>>());
}

namespace {

json tree_to_json(const SurvivalTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
        if (n.feature < 0) {
            nodes.push_back({{"leaf", n.leaf}});
        } else {
            nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
        }
    }
    json leaves = json::array();
    for (const auto& leaf : tree.leaves) {
        json idx = json::array(), inc = json::array();
        for (const auto& [k, h] : leaf) {
            idx.push_back(k);
            inc.push_back(h);
        }
        leaves.push_back({{"index", idx}, {"increment", inc}});
    }
    return {{"nodes", nodes}, {"leaves", leaves}};
}

SurvivalTree tree_from_json(const json& j, std::size_t grid_size, std::size_t dim) {
    SurvivalTree tree;
    for (const auto& leaf : j.at("leaves")) {
        const auto idx = leaf.at("index").get<std::vector<std::uint32_t>>();
        const auto inc = leaf.at("increment").get<std::vector<double>>();
        if (idx.size() != inc.size()) throw DataError("model: leaf index/increment length mismatch");
        LeafHazard h;
        for (std::size_t q = 0; q < idx.size(); ++q) {
            if (idx[q] >= grid_size) throw DataError("model: leaf grid index out of range");
            h.emplace_back(idx[q], inc[q]);
        }
        tree.leaves.push_back(std::move(h));
    }
    const auto n_nodes = static_cast<int>(j.at("nodes").size());
    for (const auto& n : j.at("nodes")) {
        TreeNode node;
        if (n.contains("leaf")) {
            node.leaf = n.at("leaf").get<int>();
            if (node.leaf < 0 || node.leaf >= static_cast<int>(tree.leaves.size())) {
                throw DataError("model: leaf reference out of range");
            }
        } else {
            node.feature = n.at("feature").get<int>();
            node.threshold = n.at("threshold").get<double>();
            node.left = n.at("left").get<int>();
            node.right = n.at("right").get<int>();
            const auto self = static_cast<int>(tree.nodes.size());
            if (node.feature >= static_cast<int>(dim) || node.left <= self || node.right <= self ||
                node.left >= n_nodes || node.right >= n_nodes) {
                throw DataError("model: malformed tree node");
            }
        }
        tree.nodes.push_back(node);
    }
    if (tree.nodes.empty()) throw DataError("model: empty tree");
    return tree;
}

}  // namespace

json model_to_json(const BlackBoxModel& model) {
    json j{{"format", kModelFormat}, {"kind", model.kind()}, {"dim", model.dim()}};
    if (const auto* cox = dynamic_cast<const CoxModel*>(&model)) {
        j["coefficients"] = cox->coefficients();
        j["baseline_chf"] = step_function_to_json(cox->baseline_chf());
    } else if (const auto* rsf = dynamic_cast<const SurvivalForest*>(&model)) {
        j["grid"] = std::vector<double>(rsf->grid().times().begin(), rsf->grid().times().end());
        json trees = json::array();
        for (const auto& t : rsf->trees()) trees.push_back(tree_to_json(t));
        j["trees"] = std::move(trees);
    } else if (const auto* beran = dynamic_cast<const BeranModel*>(&model)) {
        j["tau"] = beran->tau();
        json recs = json::array();
        for (const auto& r : beran->dataset().records()) {
            recs.push_back({{"features", r.features}, {"time", r.time}, {"event", r.event}});
        }
        j["records"] = std::move(recs);
    } else {
        throw std::domain_error("model_to_json: unsupported model kind '" + model.kind() + "'");
    }
    return j;
}

std::unique_ptr<BlackBoxModel> model_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != kModelFormat) {
            throw DataError("model: unsupported format '" + j.at("format").get<std::string>() + "'");
        }
        const auto kind = j.at("kind").get<std::string>();
        const auto dim = j.at("dim").get<std::size_t>();
        if (kind == "cox") {
            auto b = j.at("coefficients").get<Vector>();
            if (b.size() != dim) throw DataError("model: coefficient count does not match dim");
            return std::make_unique<CoxModel>(std::move(b), step_function_from_json(j.at("baseline_chf")));
        }
        if (kind == "rsf") {
            TimeGrid grid(j.at("grid").get<std::vector<double>>());
            std::vector<SurvivalTree> trees;
            for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t, grid.size(), dim));
            return std::make_unique<SurvivalForest>(std::move(grid), dim, std::move(trees));
        }
        if (kind == "beran") {
            std::vector<SurvivalRecord> recs;
            for (const auto& r : j.at("records")) {
                recs.push_back({r.at("features").get<Vector>(), r.at("time").get<double>(), r.at("event").get<int>()});
            }
            SurvivalDataset ds(std::move(recs));
            if (ds.dim() != dim) throw DataError("model: record dimension does not match dim");
            return std::make_unique<BeranModel>(std::move(ds), j.at("tau").get<double>());
        }
        throw DataError("model: unknown kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw DataError(std::string("model: ") + e.what());
    } catch (const std::domain_error& e) {
        throw DataError(std::string("model: ") + e.what());
    }
}

void save_model(const std::string& path, const BlackBoxModel& model) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << model_to_json(model).dump() << '\n';
}

std::unique_ptr<BlackBoxModel> load_model(const std::string& path) {
    auto in = open_input(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return model_from_json(j);
}

json explanation_to_json(const ExplanationResult& r) {
    return {{"method", r.method},
            {"importance", r.importance},
            {"coefficients", r.coefficients},
            {"objective_value", r.objective_value},
            {"converged", r.converged},
            {"n_iterations", r.n_iterations},
            {"ridge_fallback", r.ridge_fallback},
            {"surrogate_sf", step_function_to_json(r.surrogate_sf_at_x)},
            {"blackbox_sf", step_function_to_json(r.blackbox_sf_at_x)}};
}

}  // namespace survbex
