#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fixtures {

namespace {

using Rng = std::mt19937_64;

struct Row {
    std::vector<std::string> cells;  // feature cells in header order
    double risk = 0.0;
};

struct Generator {
    std::vector<std::string> header;  // feature columns, then time and event names
    std::function<Row(Rng&)> row;
    double scale;  // median-ish survival in days at average risk
    double shape;
};

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <class T>
const T& pick(Rng& rng, const std::vector<T>& xs) {
    return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
}

double clamp_normal(Rng& rng, double mean, double sd, double lo, double hi) {
    return std::clamp(std::normal_distribution<double>(mean, sd)(rng), lo, hi);
}

std::string num(double v) { return survbex::format_number(v); }

Generator veteran() {
    Generator g;
    g.header = {"trt", "celltype", "karno", "diagtime", "age", "prior"};
    g.scale = 80.0;
    g.shape = 1.0;
    g.row = [](Rng& rng) {
        static const std::vector<std::string> cells{"squamous", "smallcell", "adeno", "large"};
        const auto& cell = pick(rng, cells);
        const int karno = uniform_int(rng, 1, 9) * 10 + (uniform_int(rng, 0, 3) == 0 ? 5 : 0);
        const int age = uniform_int(rng, 34, 81);
        const double cell_risk = cell == "smallcell" ? 0.7 : cell == "adeno" ? 1.0 : cell == "large" ? 0.2 : 0.0;
        Row r;
        r.cells = {num(uniform_int(rng, 1, 2)), cell, num(karno), num(uniform_int(rng, 1, 87)), num(age),
                   num(uniform_int(rng, 0, 2) == 0 ? 10 : 0)};
        r.risk = -0.035 * karno + cell_risk + 0.005 * age;
        return r;
    };
    return g;
}

Generator gbsg2() {
    Generator g;
    g.header = {"horTh", "age", "menostat", "tsize", "tgrade", "pnodes", "progrec", "estrec"};
    g.scale = 1800.0;
    g.shape = 1.4;
    g.row = [](Rng& rng) {
        const bool hormone = uniform_int(rng, 0, 99) < 36;
        const int age = static_cast<int>(clamp_normal(rng, 53, 10, 21, 80));
        const int tsize = static_cast<int>(clamp_normal(rng, 29, 14, 3, 120));
        static const std::vector<std::string> grades{"I", "II", "II", "II", "III"};
        const auto& grade = pick(rng, grades);
        const int pnodes = 1 + static_cast<int>(std::exponential_distribution<double>(1.0 / 4.0)(rng));
        const int progrec = static_cast<int>(std::exponential_distribution<double>(1.0 / 110.0)(rng));
        const int estrec = static_cast<int>(std::exponential_distribution<double>(1.0 / 96.0)(rng));
        Row r;
        r.cells = {hormone ? "yes" : "no", num(age), age > 51 ? "Post" : "Pre", num(tsize), grade,
                   num(std::min(pnodes, 51)), num(progrec), num(estrec)};
        const double grade_risk = grade == "III" ? 0.6 : grade == "II" ? 0.3 : 0.0;
        r.risk = 0.07 * std::min(pnodes, 51) + grade_risk - 0.35 * hormone + 0.01 * tsize -
                 0.0015 * std::min(progrec, 1000);
        return r;
    };
    return g;
}

Generator whas500() {
    Generator g;
    g.header = {"age", "gender", "hr", "sysbp", "diasbp", "bmi", "cvd", "afb", "sho", "chf", "av3", "miord", "mitype"};
    g.scale = 2000.0;
    g.shape = 0.8;
    g.row = [](Rng& rng) {
        const int age = static_cast<int>(clamp_normal(rng, 70, 14, 30, 104));
        const int hr = static_cast<int>(clamp_normal(rng, 87, 24, 35, 186));
        const int sysbp = static_cast<int>(clamp_normal(rng, 145, 32, 57, 244));
        const int diasbp = static_cast<int>(clamp_normal(rng, 79, 21, 6, 198));
        const double bmi = std::round(clamp_normal(rng, 26.6, 5.4, 13.0, 44.8) * 100.0) / 100.0;
        auto flag = [&](int pct) { return uniform_int(rng, 0, 99) < pct ? 1 : 0; };
        const int gender = flag(40), cvd = flag(75), afb = flag(14), sho = flag(4), chf = flag(31),
                  av3 = flag(2), miord = flag(31), mitype = flag(65);
        Row r;
        r.cells = {num(age), num(gender), num(hr), num(sysbp), num(diasbp), num(bmi), num(cvd),
                   num(afb), num(sho), num(chf), num(av3), num(miord), num(mitype)};
        r.risk = 0.06 * (age - 70) + 0.012 * (hr - 87) - 0.004 * (diasbp - 79) - 0.05 * (bmi - 26.6) +
                 1.2 * sho + 0.8 * chf + 0.3 * afb;
        return r;
    };
    return g;
}

Generator generator_for(const RealSchema& s) {
    if (s.name == "veteran") return veteran();
    if (s.name == "gbsg2") return gbsg2();
    if (s.name == "whas500") return whas500();
    throw std::invalid_argument("unknown fixture " + s.name);
}

std::string real_dir() {
    const char* dir = std::getenv("SURVBEX_REAL_DATA");
    return dir ? dir : "";
}

}  // namespace

const std::vector<RealSchema>& real_schemas() {
    static const std::vector<RealSchema> all = [] {
        std::vector<RealSchema> v;
        {
            RealSchema s{"veteran", "veteran.csv", {}, 137, 128};
            s.options.time_column = "time";
            s.options.event_column = "status";
            s.options.feature_columns = {"trt", "celltype", "karno", "diagtime", "age", "prior"};
            s.options.encodings["celltype"] = {{"squamous", 0}, {"smallcell", 1}, {"adeno", 2}, {"large", 3}};
            v.push_back(s);
        }
        {
            RealSchema s{"gbsg2", "gbsg2.csv", {}, 686, 299};
            s.options.time_column = "time";
            s.options.event_column = "cens";
            s.options.feature_columns = {"horTh", "age", "menostat", "tsize", "tgrade", "pnodes", "progrec", "estrec"};
            s.options.encodings["horTh"] = {{"no", 0}, {"yes", 1}};
            s.options.encodings["menostat"] = {{"Pre", 0}, {"Post", 1}};
            s.options.encodings["tgrade"] = {{"I", 1}, {"II", 2}, {"III", 3}};
            v.push_back(s);
        }
        {
            RealSchema s{"whas500", "whas500.csv", {}, 500, 215};
            s.options.time_column = "lenfol";
            s.options.event_column = "fstat";
            s.options.feature_columns = {"age", "gender", "hr",  "sysbp", "diasbp", "bmi",  "cvd",
                                         "afb", "sho",    "chf", "av3",   "miord",  "mitype"};
            v.push_back(s);
        }
        return v;
    }();
    return all;
}

const RealSchema& schema(const std::string& name) {
    for (const auto& s : real_schemas()) {
        if (s.name == name) return s;
    }
    throw std::invalid_argument("unknown fixture " + name);
}

std::string synthetic_csv(const RealSchema& s, std::uint64_t seed) {
    Rng rng(seed);
    const Generator g = generator_for(s);
    std::vector<Row> rows;
    for (std::size_t i = 0; i < s.rows; ++i) rows.push_back(g.row(rng));
    double mean_risk = 0.0;
    for (const auto& r : rows) mean_risk += r.risk / rows.size();

    std::vector<std::size_t> order(s.rows);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> event(s.rows, 0);
    for (std::size_t i = 0; i < s.events; ++i) event[order[i]] = 1;

    std::ostringstream out;
    for (const auto& h : g.header) out << h << ',';
    out << s.options.time_column << ',' << s.options.event_column << '\n';
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (std::size_t i = 0; i < s.rows; ++i) {
        const double t = g.scale * std::pow(expo(rng) * std::exp(-(rows[i].risk - mean_risk)), 1.0 / g.shape);
        const double observed = event[i] ? t : u(rng) * t;
        for (const auto& c : rows[i].cells) out << c << ',';
        out << std::max(1.0, std::round(observed)) << ',' << event[i] << '\n';
    }
    return out.str();
}

bool has_real_copy(const RealSchema& s) {
    const auto dir = real_dir();
    return !dir.empty() && std::filesystem::exists(std::filesystem::path(dir) / s.file);
}

std::string fixture_path(const RealSchema& s, const std::string& dir, std::uint64_t seed) {
    if (has_real_copy(s)) return (std::filesystem::path(real_dir()) / s.file).string();
    const auto path = (std::filesystem::path(dir) / ("synthetic_" + s.file)).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << synthetic_csv(s, seed);
    return path;
}

}  // namespace fixtures
