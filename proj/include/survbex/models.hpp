#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "survbex/optim.hpp"
#include "survbex/survival.hpp"

namespace survbex {

/// Opaque survival model: feature vector in, survival function on the training grid out.
/// Implementations are immutable after training and safe to call concurrently.
class BlackBoxModel {
public:
    virtual ~BlackBoxModel() = default;

    virtual StepFunction predict_sf(std::span<const double> x) const = 0;
    virtual const TimeGrid& grid() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::string kind() const = 0;
};

// ---------------------------------------------------------------------------
// Cox proportional hazards
// ---------------------------------------------------------------------------

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, Vector last_iterate)
        : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}
    const Vector& last_iterate() const { return last_iterate_; }

private:
    Vector last_iterate_;
};

struct CoxFitOptions {
    double tol = 1e-9;  // gradient infinity norm, standardized coordinates
    int max_iter = 500;
};

class CoxModel final : public BlackBoxModel {
public:
    /// baseline_chf is H_0 on the training grid (covariates all zero).
    CoxModel(Vector coefficients, StepFunction baseline_chf);

    StepFunction predict_sf(std::span<const double> x) const override;
    const TimeGrid& grid() const override { return baseline_chf_.grid(); }
    std::size_t dim() const override { return coefficients_.size(); }
    std::string kind() const override { return "cox"; }

    const Vector& coefficients() const { return coefficients_; }
    const StepFunction& baseline_chf() const { return baseline_chf_; }
    StepFunction baseline_sf() const { return chf_to_sf(baseline_chf_); }
    double linear_predictor(std::span<const double> x) const;

    // Fit diagnostics; empty for models loaded from disk.
    int iterations = 0;
    double gradient_norm = 0.0;
    std::vector<std::string> warnings;

private:
    Vector coefficients_;
    StepFunction baseline_chf_;
};

/// Breslow log partial likelihood; writes its gradient into grad when grad is non-empty.
double cox_log_partial_likelihood(const SurvivalDataset& dataset, std::span<const double> b,
                                  std::span<double> grad = {});

/// Maximizes the partial likelihood with BFGS, then builds the Breslow baseline.
/// Throws ConvergenceError (carrying the last iterate) when BFGS does not converge.
CoxModel cox_fit(const SurvivalDataset& dataset, const CoxFitOptions& options = {});

/// Breslow cumulative baseline hazard for fixed coefficients.
StepFunction breslow_baseline(const SurvivalDataset& dataset, std::span<const double> b);

StepFunction cox_predict_sf(const CoxModel& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// Random survival forest
// ---------------------------------------------------------------------------

/// Standardized two-sample log-rank statistic (observed minus expected events in
/// the left group over its standard deviation). Zero when the variance vanishes.
double logrank_statistic(const SurvivalDataset& left, const SurvivalDataset& right);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf = -1;
};

/// Nelson-Aalen increments of one leaf: (grid index, hazard increment).
using LeafHazard = std::vector<std::pair<std::uint32_t, double>>;

struct SurvivalTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    std::vector<LeafHazard> leaves;

    const LeafHazard& leaf_for(std::span<const double> x) const;
    int depth() const;
};

struct ForestOptions {
    int n_trees = 100;
    int max_depth = 8;
    int mtry = 0;           // 0 selects ceil(sqrt(d))
    int min_node_size = 5;  // smallest node that may be split
    int min_leaf_size = 1;
    bool bootstrap = true;  // false trains every tree on the full dataset
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 selects hardware concurrency
};

class SurvivalForest final : public BlackBoxModel {
public:
    SurvivalForest(TimeGrid grid, std::size_t dim, std::vector<SurvivalTree> trees);

    StepFunction predict_sf(std::span<const double> x) const override;
    const TimeGrid& grid() const override { return grid_; }
    std::size_t dim() const override { return dim_; }
    std::string kind() const override { return "rsf"; }

    /// Mean of the leaf cumulative hazards over trees.
    StepFunction predict_chf(std::span<const double> x) const;

    const std::vector<SurvivalTree>& trees() const { return trees_; }

private:
    TimeGrid grid_;
    std::size_t dim_;
    std::vector<SurvivalTree> trees_;
};

SurvivalForest forest_fit(const SurvivalDataset& dataset, const ForestOptions& options = {});

StepFunction forest_predict_sf(const SurvivalForest& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// Beran estimator with a fixed Gaussian kernel
// ---------------------------------------------------------------------------

inline constexpr double kBeranBlackBoxTau = 1.0 / 250.0;

class BeranModel final : public BlackBoxModel {
public:
    BeranModel(SurvivalDataset dataset, double tau = kBeranBlackBoxTau);

    StepFunction predict_sf(std::span<const double> x) const override;
    const TimeGrid& grid() const override { return dataset_.grid(); }
    std::size_t dim() const override { return dataset_.dim(); }
    std::string kind() const override { return "beran"; }

    double tau() const { return tau_; }
    const SurvivalDataset& dataset() const { return dataset_; }

private:
    SurvivalDataset dataset_;
    double tau_;
};

StepFunction beran_blackbox_predict(const SurvivalDataset& dataset, std::span<const double> x,
                                    double tau = kBeranBlackBoxTau);

/// Restricted mean survival time of a model's prediction; the score used for C-index.
double predicted_rmst(const BlackBoxModel& model, std::span<const double> x);

/// C-index of a model on a dataset using predicted_rmst as the score.
std::optional<double> model_concordance(const BlackBoxModel& model, const SurvivalDataset& data);

}  // namespace survbex
