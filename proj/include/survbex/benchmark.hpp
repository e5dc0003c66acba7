#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "survbex/config.hpp"
#include "survbex/datagen.hpp"
#include "survbex/explain.hpp"
#include "survbex/io.hpp"
#include "survbex/models.hpp"

namespace survbex {

enum class Scenario { one_cluster, two_cluster, real_csv };
enum class BlackBoxKind { cox, rsf, beran };
enum class ExplainerKind { survbex, survlime };

std::string to_string(Scenario s);
std::string to_string(BlackBoxKind k);
std::string to_string(ExplainerKind k);

struct ExperimentConfig {
    Scenario scenario = Scenario::two_cluster;
    std::size_t d = 5;
    SyntheticOptions synthetic;
    std::string csv_path;
    CsvOptions csv;
    bool csv_scale = true;  // min-max scale loaded features to [0, 1]

    BlackBoxKind blackbox = BlackBoxKind::rsf;
    ForestOptions forest;
    CoxFitOptions cox;
    double beran_tau = kBeranBlackBoxTau;

    std::vector<ExplainerKind> explainers{ExplainerKind::survbex, ExplainerKind::survlime};
    ExplainConfig explain;
    std::size_t n_points = 20;  // M explained points per seed
    std::vector<std::uint64_t> seeds{1};
    unsigned threads = 1;       // explanations run concurrently; 0 selects hardware concurrency
    bool include_curves = true; // SF overlays in the JSON report

    void validate() const;

    /// Reads every documented key; unknown keys are a DataError.
    static ExperimentConfig from_config(const KeyValueConfig& kv);
};

/// Overrides fields of `base` from explain.* keys.
ExplainConfig read_explain_config(const KeyValueConfig& kv, ExplainConfig base = {});

/// Trains the configured black box. Forest seeds come from `seed`.
std::unique_ptr<BlackBoxModel> train_blackbox(const ExperimentConfig& config, const SurvivalDataset& data,
                                              std::uint64_t seed);

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::size_t count = 0;
};

/// Mean and population standard deviation; nullopt for an empty sample.
std::optional<Aggregate> aggregate(const std::vector<double>& values);

struct PointMetrics {
    std::uint64_t seed = 0;
    std::size_t index = 0;  // canonical record index of the explained point
    bool ok = false;
    std::string error;
    std::optional<double> distance, kl, cindex;  // absent without ground truth
    double sf_distance = 0.0;
    bool converged = false;
    int iterations = 0;
    Vector importance;
    Vector true_importance;
    StepFunction surrogate_sf;
    StepFunction blackbox_sf;
};

struct Summary {
    std::optional<Aggregate> msd, mkl, mci, msfd;
    std::size_t failures = 0;
    std::size_t undefined_cindex = 0;
};

Summary summarize(const std::vector<PointMetrics>& points, std::optional<std::uint64_t> seed = std::nullopt);

struct ExplainerReport {
    ExplainerKind explainer = ExplainerKind::survbex;
    std::vector<PointMetrics> points;
    Summary overall;
    std::vector<Summary> by_seed;  // parallel to MetricsReport::seeds
};

struct SeedInfo {
    std::uint64_t seed = 0;
    std::size_t n_records = 0;
    std::size_t n_events = 0;
    std::optional<double> train_cindex;
    std::optional<double> test_cindex;  // synthetic scenarios: fresh sample from the same generator
};

struct MetricsReport {
    Scenario scenario = Scenario::two_cluster;
    BlackBoxKind blackbox = BlackBoxKind::rsf;
    std::size_t d = 0;
    std::size_t n_points = 0;
    bool has_truth = false;
    std::vector<std::uint64_t> seeds;
    std::vector<SeedInfo> seed_info;
    std::vector<ExplainerReport> explainers;

    const ExplainerReport& report_for(ExplainerKind kind) const;
};

MetricsReport run_benchmark(const ExperimentConfig& config);

nlohmann::json report_to_json(const MetricsReport& report, bool include_curves = true);

/// One row per explained point: seed,index,D,KL,C,SFD,converged,iterations,error.
void write_metrics_table(std::ostream& out, const ExplainerReport& report);

}  // namespace survbex
