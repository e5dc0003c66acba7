// survbex command line: data generation, black-box fitting, explanations, benchmarks.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "survbex/benchmark.hpp"
#include "survbex/datagen.hpp"
#include "survbex/explain.hpp"
#include "survbex/io.hpp"
#include "survbex/metrics.hpp"

using namespace survbex;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kConvergence = 3 };

struct CsvArgs {
    std::string time_col = "time";
    std::string event_col = "event";
    std::string features;
    std::vector<std::string> encodings;
    char delimiter = ',';

    void attach(CLI::App* cmd) {
        cmd->add_option("--time-col", time_col, "Name of the time column")->capture_default_str();
        cmd->add_option("--event-col", event_col, "Name of the event column")->capture_default_str();
        cmd->add_option("--features", features, "Comma-separated feature columns (default: all others)");
        cmd->add_option("--encode", encodings, "Categorical codes, e.g. celltype=squamous:0,large:1");
        cmd->add_option("--delimiter", delimiter, "Field delimiter")->capture_default_str();
    }

    CsvOptions options() const {
        CsvOptions o;
        o.time_column = time_col;
        o.event_column = event_col;
        o.feature_columns = split_list(features);
        o.delimiter = delimiter;
        for (const auto& spec : encodings) {
            const auto eq = spec.find('=');
            if (eq == std::string::npos) throw CLI::ValidationError("--encode", "expected column=category:code,...");
            auto& codes = o.encodings[spec.substr(0, eq)];
            for (const auto& item : split_list(spec.substr(eq + 1))) {
                const auto colon = item.rfind(':');
                if (colon == std::string::npos) throw CLI::ValidationError("--encode", "expected category:code");
                codes[item.substr(0, colon)] = std::stod(item.substr(colon + 1));
            }
        }
        return o;
    }
};

Vector parse_vector(const std::string& s, const std::string& what) {
    Vector v;
    for (const auto& item : split_list(s)) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError(what, "'" + item + "' is not a number");
        }
    }
    if (v.empty()) throw CLI::ValidationError(what, "empty vector");
    return v;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << text << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local explanations of black-box survival models"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic clustered survival dataset");
    std::string scenario = "one_cluster", gen_out, truth_out;
    std::size_t d = 5;
    std::uint64_t seed = 1;
    double censor = 0.2;
    std::string shape = "box";
    gen->add_option("--scenario", scenario, "one_cluster or two_cluster")
        ->check(CLI::IsMember({"one_cluster", "two_cluster"}))
        ->capture_default_str();
    gen->add_option("--d", d, "Feature count (presets exist for 5, 10, 20)")->capture_default_str();
    gen->add_option("--seed", seed, "Random seed")->capture_default_str();
    gen->add_option("--censor-fraction", censor, "Share of censored records")->capture_default_str();
    gen->add_option("--covariates", shape, "box or ball")->check(CLI::IsMember({"box", "ball"}))->capture_default_str();
    gen->add_option("--out", gen_out, "Output CSV")->required();
    gen->add_option("--truth", truth_out, "Optional JSON with per-record ground-truth importance");

    // fit
    auto* fit = app.add_subcommand("fit", "Train a black-box model");
    std::string fit_kind = "rsf", fit_data, fit_out;
    ForestOptions forest;
    CoxFitOptions cox;
    double beran_tau = kBeranBlackBoxTau;
    CsvArgs fit_csv;
    fit->add_option("--kind", fit_kind, "cox, rsf or beran")->check(CLI::IsMember({"cox", "rsf", "beran"}))->capture_default_str();
    fit->add_option("--data", fit_data, "Training CSV")->required();
    fit->add_option("--out", fit_out, "Model JSON")->required();
    fit->add_option("--seed", forest.seed, "Forest seed")->capture_default_str();
    fit->add_option("--trees", forest.n_trees, "Forest size")->capture_default_str();
    fit->add_option("--max-depth", forest.max_depth, "Tree depth limit")->capture_default_str();
    fit->add_option("--mtry", forest.mtry, "Features tried per split (0: ceil(sqrt(d)))")->capture_default_str();
    fit->add_option("--min-node-size", forest.min_node_size, "Smallest splittable node")->capture_default_str();
    fit->add_option("--threads", forest.threads, "Worker threads (0: all cores)")->capture_default_str();
    fit->add_option("--cox-tol", cox.tol, "Cox gradient tolerance")->capture_default_str();
    fit->add_option("--tau", beran_tau, "Beran kernel temperature")->capture_default_str();
    fit_csv.attach(fit);

    // explain
    auto* exp = app.add_subcommand("explain", "Explain one prediction of a saved model");
    std::string exp_model, exp_data, exp_config, exp_point, exp_out, explainer = "survbex";
    long long exp_index = -1;
    std::uint64_t exp_seed = 0;
    CsvArgs exp_csv;
    exp->add_option("--model", exp_model, "Model JSON")->required();
    exp->add_option("--data", exp_data, "Training CSV the model was fitted on")->required();
    auto* idx_opt = exp->add_option("--index", exp_index, "Row of the training CSV to explain (0-based, file order)");
    auto* pt_opt = exp->add_option("--point", exp_point, "Comma-separated feature vector to explain");
    idx_opt->excludes(pt_opt);
    exp->add_option("--explainer", explainer, "survbex or survlime")->check(CLI::IsMember({"survbex", "survlime"}))->capture_default_str();
    exp->add_option("--config", exp_config, "key = value file with explain.* settings");
    exp->add_option("--seed", exp_seed, "Neighborhood seed")->capture_default_str();
    exp->add_option("--out", exp_out, "Result JSON (default: stdout)");
    exp_csv.attach(exp);

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "Run an experiment described by a config file");
    std::string bench_config, bench_out, bench_tables;
    bench->add_option("--config", bench_config, "Experiment config")->required();
    bench->add_option("--out", bench_out, "Report JSON (default: stdout)");
    bench->add_option("--tables", bench_tables, "Prefix for per-explainer CSV tables");

    // metrics
    auto* met = app.add_subcommand("metrics", "Compare two importance vectors");
    std::string b_model, b_true;
    met->add_option("--model", b_model, "Explainer importance, comma-separated")->required();
    met->add_option("--true", b_true, "Ground-truth importance, comma-separated")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*gen) {
            SyntheticOptions so;
            so.censor_fraction = censor;
            so.covariates = shape == "ball" ? CovariateShape::ball : CovariateShape::box;
            Rng rng(seed);
            auto syn = scenario == "two_cluster" ? gen_two_cluster(d, rng, so) : gen_one_cluster(d, rng, so);
            save_csv_dataset(gen_out, syn.dataset);
            if (!truth_out.empty()) {
                nlohmann::json t = nlohmann::json::array();
                for (std::size_t i = 0; i < syn.dataset.size(); ++i) {
                    t.push_back({{"row", i}, {"cluster", syn.cluster_of[i]}, {"b_true", syn.b_true(i)}});
                }
                write_text(truth_out, t.dump());
            }
            std::cerr << "wrote " << syn.dataset.size() << " records (" << syn.dataset.event_count() << " events)\n";
        } else if (*fit) {
            const auto data = load_csv_dataset(fit_data, fit_csv.options());
            std::unique_ptr<BlackBoxModel> model;
            if (fit_kind == "cox") {
                auto m = cox_fit(data, cox);
                for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
                model = std::make_unique<CoxModel>(std::move(m));
            } else if (fit_kind == "beran") {
                model = std::make_unique<BeranModel>(data, beran_tau);
            } else {
                model = std::make_unique<SurvivalForest>(forest_fit(data, forest));
            }
            save_model(fit_out, *model);
            if (auto c = model_concordance(*model, data)) std::cerr << "training C-index " << *c << '\n';
        } else if (*exp) {
            const auto model = load_model(exp_model);
            const auto data = load_csv_dataset(exp_data, exp_csv.options());
            ExplainConfig cfg;
            if (!exp_config.empty()) {
                const auto kv = KeyValueConfig::load(exp_config);
                cfg = read_explain_config(kv, cfg);
                if (auto unused = kv.unused_keys(); !unused.empty()) throw DataError("unknown config key '" + unused.front() + "'");
            }
            if (exp->count("--seed")) cfg.seed = exp_seed;
            Vector x;
            if (!exp_point.empty()) {
                x = parse_vector(exp_point, "--point");
            } else if (exp_index >= 0) {
                // --index counts rows in file order; map to the canonical record.
                const auto row = static_cast<std::size_t>(exp_index);
                if (row >= data.size()) throw DataError("--index beyond the last data row");
                for (std::size_t i = 0; i < data.size(); ++i) {
                    if (data.original_index(i) == row) {
                        auto f = data.features(i);
                        x.assign(f.begin(), f.end());
                    }
                }
            } else {
                throw CLI::ValidationError("explain", "one of --index or --point is required");
            }
            if (x.size() != data.dim()) throw DataError("point dimension does not match the dataset");
            if (!(model->grid() == data.grid())) throw DataError("model was not trained on this dataset (time grids differ)");
            const auto r = explainer == "survlime" ? survlime_explain(*model, data, x, cfg) : survbex_explain(*model, data, x, cfg);
            write_text(exp_out, explanation_to_json(r).dump(2));
            if (!r.converged) {
                std::cerr << "explanation did not converge\n";
                return kConvergence;
            }
        } else if (*bench) {
            const auto cfg = ExperimentConfig::from_config(KeyValueConfig::load(bench_config));
            const auto report = run_benchmark(cfg);
            write_text(bench_out, report_to_json(report, cfg.include_curves).dump(2));
            if (!bench_tables.empty()) {
                for (const auto& e : report.explainers) {
                    std::ofstream out(bench_tables + "." + to_string(e.explainer) + ".csv");
                    if (!out) throw DataError("cannot write table for " + to_string(e.explainer));
                    write_metrics_table(out, e);
                }
            }
        } else if (*met) {
            const auto bm = normalize_importance(parse_vector(b_model, "--model"));
            const auto bt = normalize_importance(parse_vector(b_true, "--true"));
            if (bm.vector.size() != bt.vector.size()) throw CLI::ValidationError("metrics", "vectors differ in length");
            const auto c = importance_cindex(bm.vector, bt.vector);
            std::cout << "D " << format_number(importance_distance(bm.vector, bt.vector)) << '\n'
                      << "KL " << format_number(importance_kl(bm.vector, bt.vector)) << '\n'
                      << "C " << (c ? format_number(*c) : std::string("undefined")) << '\n';
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << '\n';
        return kConvergence;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::domain_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}
