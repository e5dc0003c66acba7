#include "survbex/benchmark.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <ostream>
#include <random>
#include <thread>

#include "survbex/metrics.hpp"

namespace survbex {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::one_cluster: return "one_cluster";
        case Scenario::two_cluster: return "two_cluster";
        case Scenario::real_csv: return "real_csv";
    }
    return "?";
}

std::string to_string(BlackBoxKind k) {
    switch (k) {
        case BlackBoxKind::cox: return "cox";
        case BlackBoxKind::rsf: return "rsf";
        case BlackBoxKind::beran: return "beran";
    }
    return "?";
}

std::string to_string(ExplainerKind k) { return k == ExplainerKind::survbex ? "survbex" : "survlime"; }

namespace {

template <class E>
E parse_enum(const std::string& key, const std::string& v, std::initializer_list<std::pair<const char*, E>> options) {
    for (const auto& [name, value] : options) {
        if (v == name) return value;
    }
    throw DataError("config key '" + key + "': unknown value '" + v + "'");
}

template <class T>
T non_negative(const std::string& key, long long v) {
    if (v < 0) throw DataError("config key '" + key + "' must be nonnegative");
    return static_cast<T>(v);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

enum Stream : std::uint64_t { kData = 1, kTest, kForest, kPick, kExplain };

}  // namespace

ExplainConfig read_explain_config(const KeyValueConfig& kv, ExplainConfig c) {
    c.n_perturbations = non_negative<std::size_t>("explain.n_perturbations",
                                                  kv.get_int("explain.n_perturbations", static_cast<long long>(c.n_perturbations)));
    c.perturb_std = kv.get_double("explain.perturb_std", c.perturb_std);
    c.sigma = kv.get_double("explain.sigma", c.sigma);
    c.tau = kv.get_double("explain.tau", c.tau);
    if (kv.has("explain.kernel")) {
        c.kernel = parse_enum<KernelKind>("explain.kernel", kv.get_string("explain.kernel", ""),
                                          {{"gaussian", KernelKind::gaussian}, {"abs_exponential", KernelKind::abs_exponential}});
    }
    c.norm_power = static_cast<int>(kv.get_int("explain.norm_power", c.norm_power));
    if (kv.has("explain.space")) {
        c.space = parse_enum<FitSpace>("explain.space", kv.get_string("explain.space", ""),
                                       {{"sf", FitSpace::sf}, {"log_sf", FitSpace::log_sf}});
    }
    c.epsilon = kv.get_double("explain.epsilon", c.epsilon);
    c.max_iter = static_cast<int>(kv.get_int("explain.max_iter", c.max_iter));
    c.tol = kv.get_double("explain.tol", c.tol);
    c.extra_starts = static_cast<int>(kv.get_int("explain.extra_starts", c.extra_starts));
    c.survlime_intercept = kv.get_bool("explain.survlime_intercept", c.survlime_intercept);
    c.seed = non_negative<std::uint64_t>("explain.seed", kv.get_int("explain.seed", static_cast<long long>(c.seed)));
    return c;
}

void ExperimentConfig::validate() const {
    if (n_points < 1) throw std::domain_error("ExperimentConfig: M must be >= 1");
    if (seeds.empty()) throw std::domain_error("ExperimentConfig: at least one seed required");
    if (explainers.empty()) throw std::domain_error("ExperimentConfig: at least one explainer required");
    if (scenario == Scenario::real_csv && csv_path.empty()) {
        throw std::domain_error("ExperimentConfig: real_csv scenario needs csv.path");
    }
    if (scenario != Scenario::real_csv && d < 1) throw std::domain_error("ExperimentConfig: d must be >= 1");
    if (!(synthetic.censor_fraction >= 0.0 && synthetic.censor_fraction < 1.0)) {
        throw std::domain_error("ExperimentConfig: censor_fraction must lie in [0, 1)");
    }
    if (!(beran_tau > 0.0)) throw std::domain_error("ExperimentConfig: beran.tau must be positive");
    if (forest.n_trees < 1) throw std::domain_error("ExperimentConfig: rsf.n_trees must be >= 1");
    explain.validate();
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& kv) {
    ExperimentConfig c;
    if (kv.has("scenario")) {
        c.scenario = parse_enum<Scenario>("scenario", kv.get_string("scenario", ""),
                                          {{"one_cluster", Scenario::one_cluster},
                                           {"two_cluster", Scenario::two_cluster},
                                           {"real_csv", Scenario::real_csv}});
    }
    c.d = non_negative<std::size_t>("d", kv.get_int("d", static_cast<long long>(c.d)));
    c.synthetic.censor_fraction = kv.get_double("censor_fraction", c.synthetic.censor_fraction);
    if (kv.has("covariates")) {
        c.synthetic.covariates = parse_enum<CovariateShape>("covariates", kv.get_string("covariates", ""),
                                                            {{"box", CovariateShape::box}, {"ball", CovariateShape::ball}});
    }

    c.csv_path = kv.get_string("csv.path", "");
    c.csv.time_column = kv.get_string("csv.time_column", c.csv.time_column);
    c.csv.event_column = kv.get_string("csv.event_column", c.csv.event_column);
    c.csv.feature_columns = kv.get_list("csv.feature_columns", {});
    c.csv_scale = kv.get_string("csv.scale", "minmax") == "minmax";
    if (const auto sc = kv.get_string("csv.scale", "minmax"); sc != "minmax" && sc != "none") {
        throw DataError("config key 'csv.scale': unknown value '" + sc + "'");
    }
    const auto delim = kv.get_string("csv.delimiter", ",");
    if (delim.size() != 1) throw DataError("config key 'csv.delimiter' must be one character");
    c.csv.delimiter = delim[0];
    const std::string prefix = "csv.encode.";
    for (const auto& [key, value] : kv.values()) {
        if (key.rfind(prefix, 0) != 0) continue;
        auto& codes = c.csv.encodings[key.substr(prefix.size())];
        for (const auto& item : split_list(kv.get_string(key, ""))) {
            const auto colon = item.rfind(':');
            if (colon == std::string::npos) throw DataError("config key '" + key + "': expected category:code pairs");
            KeyValueConfig one;
            one.set(key, item.substr(colon + 1));
            codes[item.substr(0, colon)] = one.get_double(key, 0.0);
        }
    }

    if (kv.has("blackbox")) {
        c.blackbox = parse_enum<BlackBoxKind>("blackbox", kv.get_string("blackbox", ""),
                                              {{"cox", BlackBoxKind::cox}, {"rsf", BlackBoxKind::rsf}, {"beran", BlackBoxKind::beran}});
    }
    c.forest.n_trees = static_cast<int>(kv.get_int("rsf.n_trees", c.forest.n_trees));
    c.forest.max_depth = static_cast<int>(kv.get_int("rsf.max_depth", c.forest.max_depth));
    c.forest.mtry = static_cast<int>(kv.get_int("rsf.mtry", c.forest.mtry));
    c.forest.min_node_size = static_cast<int>(kv.get_int("rsf.min_node_size", c.forest.min_node_size));
    c.forest.min_leaf_size = static_cast<int>(kv.get_int("rsf.min_leaf_size", c.forest.min_leaf_size));
    c.forest.bootstrap = kv.get_bool("rsf.bootstrap", c.forest.bootstrap);
    c.forest.threads = non_negative<unsigned>("rsf.threads", kv.get_int("rsf.threads", c.forest.threads));
    c.cox.tol = kv.get_double("cox.tol", c.cox.tol);
    c.cox.max_iter = static_cast<int>(kv.get_int("cox.max_iter", c.cox.max_iter));
    c.beran_tau = kv.get_double("beran.tau", c.beran_tau);

    if (kv.has("explainers")) {
        c.explainers.clear();
        for (const auto& e : kv.get_list("explainers", {})) {
            c.explainers.push_back(parse_enum<ExplainerKind>("explainers", e,
                                                             {{"survbex", ExplainerKind::survbex},
                                                              {"survlime", ExplainerKind::survlime}}));
        }
    }
    c.explain = read_explain_config(kv, c.explain);
    c.n_points = non_negative<std::size_t>("M", kv.get_int("M", static_cast<long long>(c.n_points)));
    if (kv.has("seeds")) {
        c.seeds.clear();
        for (const auto& s : kv.get_list("seeds", {})) {
            KeyValueConfig one;
            one.set("seeds", s);
            c.seeds.push_back(non_negative<std::uint64_t>("seeds", one.get_int("seeds", 0)));
        }
    }
    c.threads = non_negative<unsigned>("threads", kv.get_int("threads", c.threads));
    c.include_curves = kv.get_bool("report.curves", c.include_curves);

    if (auto unused = kv.unused_keys(); !unused.empty()) {
        throw DataError("unknown config key '" + unused.front() + "'");
    }
    c.validate();
    return c;
}

std::unique_ptr<BlackBoxModel> train_blackbox(const ExperimentConfig& config, const SurvivalDataset& data,
                                              std::uint64_t seed) {
    switch (config.blackbox) {
        case BlackBoxKind::cox:
            return std::make_unique<CoxModel>(cox_fit(data, config.cox));
        case BlackBoxKind::beran:
            return std::make_unique<BeranModel>(data, config.beran_tau);
        case BlackBoxKind::rsf: {
            ForestOptions fo = config.forest;
            fo.seed = derive_seed(seed, kForest, 0);
            return std::make_unique<SurvivalForest>(forest_fit(data, fo));
        }
    }
    throw std::logic_error("train_blackbox: unreachable");
}

std::optional<Aggregate> aggregate(const std::vector<double>& values) {
    if (values.empty()) return std::nullopt;
    Aggregate a;
    a.count = values.size();
    for (double v : values) a.mean += v;
    a.mean /= static_cast<double>(a.count);
    for (double v : values) a.std += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(a.std / static_cast<double>(a.count));
    return a;
}

Summary summarize(const std::vector<PointMetrics>& points, std::optional<std::uint64_t> seed) {
    Summary s;
    std::vector<double> d, kl, c, sfd;
    for (const auto& p : points) {
        if (seed && p.seed != *seed) continue;
        if (!p.ok) {
            ++s.failures;
            continue;
        }
        if (p.distance) d.push_back(*p.distance);
        if (p.kl) kl.push_back(*p.kl);
        if (p.cindex) {
            c.push_back(*p.cindex);
        } else if (!p.true_importance.empty()) {
            ++s.undefined_cindex;
        }
        sfd.push_back(p.sf_distance);
    }
    s.msd = aggregate(d);
    s.mkl = aggregate(kl);
    s.mci = aggregate(c);
    s.msfd = aggregate(sfd);
    return s;
}

const ExplainerReport& MetricsReport::report_for(ExplainerKind kind) const {
    for (const auto& e : explainers) {
        if (e.explainer == kind) return e;
    }
    throw std::out_of_range("MetricsReport: explainer not in report");
}

namespace {

struct SeedRun {
    SurvivalDataset data;
    std::vector<Vector> truth;  // per canonical record; empty without ground truth
};

SeedRun make_data(const ExperimentConfig& cfg, std::uint64_t seed, std::uint64_t stream) {
    if (cfg.scenario == Scenario::real_csv) {
        auto data = load_csv_dataset(cfg.csv_path, cfg.csv);
        return {cfg.csv_scale ? minmax_scaled(data) : std::move(data), {}};
    }
    Rng rng(derive_seed(seed, stream, 0));
    auto syn = cfg.scenario == Scenario::one_cluster ? gen_one_cluster(cfg.d, rng, cfg.synthetic)
                                                     : gen_two_cluster(cfg.d, rng, cfg.synthetic);
    SeedRun run{std::move(syn.dataset), {}};
    for (std::size_t i = 0; i < run.data.size(); ++i) run.truth.push_back(syn.b_true(i));
    return run;
}

std::vector<std::size_t> pick_points(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (m > n) throw std::domain_error("run_benchmark: M exceeds the number of records");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(derive_seed(seed, kPick, 0));
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(m);
    return idx;
}

PointMetrics explain_point(const BlackBoxModel& model, const SeedRun& run, std::size_t index, ExplainerKind kind,
                           const ExplainConfig& cfg, std::uint64_t seed) {
    PointMetrics p;
    p.seed = seed;
    p.index = index;
    try {
        const auto x = run.data.features(index);
        const auto r = kind == ExplainerKind::survbex ? survbex_explain(model, run.data, x, cfg)
                                                      : survlime_explain(model, run.data, x, cfg);
        p.importance = r.importance;
        p.converged = r.converged;
        p.iterations = r.n_iterations;
        p.sf_distance = sf_distance(r.surrogate_sf_at_x, r.blackbox_sf_at_x);
        p.surrogate_sf = r.surrogate_sf_at_x;
        p.blackbox_sf = r.blackbox_sf_at_x;
        if (!run.truth.empty()) {
            p.true_importance = normalize_importance(run.truth[index]).vector;
            p.distance = importance_distance(p.importance, p.true_importance);
            p.kl = importance_kl(p.importance, p.true_importance);
            p.cindex = importance_cindex(p.importance, p.true_importance);
        }
        p.ok = true;
    } catch (const std::exception& e) {
        p.ok = false;
        p.error = e.what();
    }
    return p;
}

}  // namespace

MetricsReport run_benchmark(const ExperimentConfig& cfg) {
    cfg.validate();
    MetricsReport report;
    report.scenario = cfg.scenario;
    report.blackbox = cfg.blackbox;
    report.n_points = cfg.n_points;
    report.seeds = cfg.seeds;
    report.has_truth = cfg.scenario != Scenario::real_csv;
    for (auto kind : cfg.explainers) report.explainers.push_back({kind, {}, {}, {}});

    for (std::uint64_t seed : cfg.seeds) {
        const SeedRun run = make_data(cfg, seed, kData);
        report.d = run.data.dim();
        const auto model = train_blackbox(cfg, run.data, seed);

        SeedInfo info;
        info.seed = seed;
        info.n_records = run.data.size();
        info.n_events = run.data.event_count();
        info.train_cindex = model_concordance(*model, run.data);
        if (report.has_truth) info.test_cindex = model_concordance(*model, make_data(cfg, seed, kTest).data);
        report.seed_info.push_back(info);

        const auto points = pick_points(run.data.size(), cfg.n_points, seed);
        const std::size_t n_tasks = points.size() * cfg.explainers.size();
        std::vector<PointMetrics> results(n_tasks);
        auto task = [&](std::size_t t) {
            const std::size_t m = t / cfg.explainers.size();
            ExplainConfig ec = cfg.explain;
            // Both explainers see the same neighborhood of a given point.
            ec.seed = derive_seed(seed, kExplain, m);
            results[t] = explain_point(*model, run, points[m], cfg.explainers[t % cfg.explainers.size()], ec, seed);
        };
        const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads ? cfg.threads : std::thread::hardware_concurrency(),
                                                                 static_cast<unsigned>(n_tasks)));
        if (workers == 1) {
            for (std::size_t t = 0; t < n_tasks; ++t) task(t);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t t; (t = next.fetch_add(1)) < n_tasks;) task(t);
                });
            }
        }
        for (std::size_t t = 0; t < n_tasks; ++t) {
            report.explainers[t % cfg.explainers.size()].points.push_back(std::move(results[t]));
        }
    }

    for (auto& e : report.explainers) {
        e.overall = summarize(e.points);
        for (std::uint64_t seed : cfg.seeds) e.by_seed.push_back(summarize(e.points, seed));
    }
    return report;
}

namespace {

using nlohmann::json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json aggregate_json(const std::optional<Aggregate>& a) {
    if (!a) return nullptr;
    return {{"mean", a->mean}, {"std", a->std}, {"count", a->count}};
}

json summary_json(const Summary& s) {
    return {{"MSD", aggregate_json(s.msd)},
            {"MKL", aggregate_json(s.mkl)},
            {"MCI", aggregate_json(s.mci)},
            {"MSFD", aggregate_json(s.msfd)},
            {"failures", s.failures},
            {"undefined_cindex", s.undefined_cindex}};
}

}  // namespace

json report_to_json(const MetricsReport& r, bool include_curves) {
    json seeds = json::array();
    for (const auto& s : r.seed_info) {
        seeds.push_back({{"seed", s.seed},
                         {"n_records", s.n_records},
                         {"n_events", s.n_events},
                         {"train_cindex", optional_json(s.train_cindex)},
                         {"test_cindex", optional_json(s.test_cindex)}});
    }
    json explainers = json::array();
    for (const auto& e : r.explainers) {
        json points = json::array();
        for (const auto& p : e.points) {
            json pj{{"seed", p.seed}, {"index", p.index}, {"ok", p.ok}};
            if (!p.ok) {
                pj["error"] = p.error;
                points.push_back(std::move(pj));
                continue;
            }
            pj["D"] = optional_json(p.distance);
            pj["KL"] = optional_json(p.kl);
            pj["C"] = optional_json(p.cindex);
            pj["SFD"] = p.sf_distance;
            pj["converged"] = p.converged;
            pj["iterations"] = p.iterations;
            pj["importance"] = p.importance;
            if (!p.true_importance.empty()) pj["true_importance"] = p.true_importance;
            if (include_curves) {
                const auto sv = p.surrogate_sf.values(), bv = p.blackbox_sf.values(), gv = p.blackbox_sf.grid().times();
                pj["surrogate_sf"] = std::vector<double>(sv.begin(), sv.end());
                pj["blackbox_sf"] = std::vector<double>(bv.begin(), bv.end());
                pj["grid"] = std::vector<double>(gv.begin(), gv.end());
            }
            points.push_back(std::move(pj));
        }
        json by_seed = json::array();
        for (std::size_t k = 0; k < e.by_seed.size(); ++k) {
            auto sj = summary_json(e.by_seed[k]);
            sj["seed"] = r.seeds[k];
            by_seed.push_back(std::move(sj));
        }
        explainers.push_back({{"explainer", to_string(e.explainer)},
                              {"aggregates", summary_json(e.overall)},
                              {"by_seed", by_seed},
                              {"points", points}});
    }
    return {{"scenario", to_string(r.scenario)},
            {"blackbox", to_string(r.blackbox)},
            {"d", r.d},
            {"M", r.n_points},
            {"has_truth", r.has_truth},
            {"seeds", seeds},
            {"explainers", explainers}};
}

void write_metrics_table(std::ostream& out, const ExplainerReport& e) {
    auto cell = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("NA"); };
    out << "seed,index,D,KL,C,SFD,converged,iterations,error\n";
    for (const auto& p : e.points) {
        out << p.seed << ',' << p.index << ',';
        if (p.ok) {
            out << cell(p.distance) << ',' << cell(p.kl) << ',' << cell(p.cindex) << ',' << format_number(p.sf_distance)
                << ',' << (p.converged ? 1 : 0) << ',' << p.iterations << ",\n";
        } else {
            std::string msg = p.error;
            std::replace(msg.begin(), msg.end(), '"', '\'');
            out << "NA,NA,NA,NA,0,0,\"" << msg << "\"\n";
        }
    }
}

}  // namespace survbex
