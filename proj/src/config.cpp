#include "survbex/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>

#include "survbex/io.hpp"

namespace survbex {

namespace {

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

std::vector<std::string> split_list(const std::string& s, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find(delim, start);
        if (end == std::string::npos) end = s.size();
        auto item = strip(s.substr(start, end - start));
        if (!item.empty()) out.push_back(std::move(item));
        start = end + 1;
    }
    return out;
}

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto s = strip(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = strip(s.substr(0, eq));
        if (key.empty()) throw DataError("config line " + std::to_string(line_no) + ": empty key");
        if (cfg.values_.count(key)) {
            throw DataError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        cfg.values_[key] = strip(s.substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path);
    try {
        return parse(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

const std::string* KeyValueConfig::find(const std::string& key) const {
    touched_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto* v = find(key);
    return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
        throw DataError("config key '" + key + "': '" + *v + "' is not a number");
    }
    return out;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
        throw DataError("config key '" + key + "': '" + *v + "' is not an integer");
    }
    return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw DataError("config key '" + key + "': '" + *v + "' is not a boolean");
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key,
                                                  const std::vector<std::string>& fallback) const {
    const auto* v = find(key);
    return v ? split_list(*v) : fallback;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : values_) {
        if (!touched_.count(k)) out.push_back(k);
    }
    return out;
}

}  // namespace survbex
