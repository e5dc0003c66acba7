#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "survbex/models.hpp"
#include "survbex/optim.hpp"
#include "survbex/survival.hpp"

namespace survbex {

enum class KernelKind { gaussian, abs_exponential };

/// Which curves the SurvBeX objective compares: survival functions or their logarithms.
enum class FitSpace { sf, log_sf };

struct ExplainConfig {
    std::size_t n_perturbations = 100;
    double perturb_std = 0.2;
    double sigma = 0.4;  // neighborhood weight kernel
    double tau = 10.0;   // surrogate Beran kernel temperature
    KernelKind kernel = KernelKind::gaussian;
    int norm_power = 2;
    FitSpace space = FitSpace::sf;
    double epsilon = kDefaultLogFloor;
    int max_iter = 500;
    double tol = 1e-6;      // gradient tolerance on the normalized objective
    int extra_starts = 3;   // random restarts drawn from Uniform(0, 2)^d
    bool survlime_intercept = false;  // let SurvLIME absorb the baseline offset in a free constant
    std::uint64_t seed = 0;

    void validate() const;
};

struct ExplanationResult {
    std::string method;
    Vector importance;    // |b| normalized to sum to one
    Vector coefficients;  // raw b
    double objective_value = 0.0;
    bool converged = false;
    int n_iterations = 0;
    bool ridge_fallback = false;
    StepFunction surrogate_sf_at_x;
    StepFunction blackbox_sf_at_x;
};

/// softmax(-||b * (x - x_i)||^2 / tau) for the Gaussian kind, or the normalized
/// exp(-||b * (x - x_i)||_1 / tau) for the absolute-exponential kind, where * is
/// the element-wise product.
Vector modified_beran_weights(std::span<const double> x, const SurvivalDataset& dataset,
                              std::span<const double> b, double tau,
                              KernelKind kernel = KernelKind::gaussian);

/// Weighted distance between black-box curves and the b-parameterized Beran
/// surrogate over a fixed set of perturbed points. Precomputes everything that
/// does not depend on b.
class SurvbexObjective {
public:
    SurvbexObjective(const SurvivalDataset& dataset, std::vector<Vector> points, Vector weights,
                     const std::vector<StepFunction>& blackbox_sfs, const ExplainConfig& config);

    double value(std::span<const double> b) const;
    double value_and_gradient(std::span<const double> b, std::span<double> grad) const;
    Vector gradient(std::span<const double> b) const;

    std::size_t dim() const { return dataset_.dim(); }

private:
    double point_term(std::size_t j, std::span<const double> b, std::span<double> grad,
                      std::vector<double>& scratch) const;

    SurvivalDataset dataset_;
    std::vector<Vector> points_;
    Vector weights_;
    ExplainConfig config_;
    std::vector<double> target_;        // N x G black-box values (log-space when configured)
    std::vector<double> diffs_;         // N x n x d, squared or absolute coordinate differences
    std::vector<double> widths_;        // interval lengths, last entry 0
    std::vector<std::size_t> closes_;   // per record: grid index it closes, or npos
};

double survbex_objective(std::span<const double> b, const std::vector<StepFunction>& blackbox_sfs,
                         const std::vector<Vector>& points, std::span<const double> weights,
                         const SurvivalDataset& dataset, const ExplainConfig& config);

Vector objective_gradient(std::span<const double> b, const std::vector<StepFunction>& blackbox_sfs,
                          const std::vector<Vector>& points, std::span<const double> weights,
                          const SurvivalDataset& dataset, const ExplainConfig& config);

/// Quadratic-series approximation of ln S_B after records 0..upto (canonical order):
/// -sum_i event_i * a_i * (1 - a_i / 2 + sum_{j <= i} a_j).
double log_sf_series(std::span<const double> alphas, std::span<const int> events, std::size_t upto);

ExplanationResult survbex_explain(const BlackBoxModel& blackbox, const SurvivalDataset& dataset,
                                  std::span<const double> x, const ExplainConfig& config = {});

/// Cox-surrogate baseline: weighted least squares on log cumulative hazards.
ExplanationResult survlime_explain(const BlackBoxModel& blackbox, const SurvivalDataset& dataset,
                                   std::span<const double> x, const ExplainConfig& config = {});

}  // namespace survbex
