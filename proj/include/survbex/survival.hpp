#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace survbex {

using Vector = std::vector<double>;

/// Floor applied to survival probabilities before taking logarithms.
inline constexpr double kDefaultLogFloor = 1e-5;

/// Floor for the Beran normalizing denominator once the weight mass is used up.
inline constexpr double kDenominatorFloor = 1e-12;

struct SurvivalRecord {
    Vector features;
    double time = 0.0;
    int event = 0;  // 1 = event observed, 0 = right-censored
};

/// Strictly increasing time points t_0 = 0 < t_1 < ... < t_m.
///
/// The points are held behind a shared pointer so that step functions built
/// on the same grid share storage and compare equal cheaply.
class TimeGrid {
public:
    TimeGrid();
    explicit TimeGrid(std::vector<double> times);

    /// Collapses duplicates, sorts, and prepends 0.
    static TimeGrid from_observed(std::span<const double> observed);

    std::size_t size() const { return times_->size(); }
    double operator[](std::size_t k) const { return (*times_)[k]; }
    std::span<const double> times() const { return *times_; }
    double last() const { return times_->back(); }

    /// Index k with t_k <= t < t_{k+1} (k = size()-1 past the last point). Requires t >= 0.
    std::size_t locate(double t) const;

    friend bool operator==(const TimeGrid& a, const TimeGrid& b);

private:
    std::shared_ptr<const std::vector<double>> times_;
};

/// Piecewise-constant function on a grid: values[k] holds on [t_k, t_{k+1}),
/// and the final value holds on [t_m, inf).
class StepFunction {
public:
    StepFunction() = default;
    StepFunction(TimeGrid grid, std::vector<double> values);

    const TimeGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double value(std::size_t k) const { return values_[k]; }
    std::size_t size() const { return values_.size(); }

    double operator()(double t) const;

    /// Integral over [0, t_m]; for a survival function this is the restricted mean.
    double integral() const;

    bool is_survival_function(double tol = 1e-12) const;
    bool is_cumulative_hazard(double tol = 1e-12) const;

private:
    TimeGrid grid_;
    std::vector<double> values_;
};

/// A right-censored training set kept in canonical order: time ascending,
/// events before censored records at tied times, input order otherwise.
class SurvivalDataset {
public:
    SurvivalDataset() = default;
    explicit SurvivalDataset(std::vector<SurvivalRecord> records);

    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }
    std::size_t dim() const { return dim_; }

    std::span<const double> features(std::size_t i) const {
        return {features_.data() + i * dim_, dim_};
    }
    std::span<const double> feature_matrix() const { return features_; }
    double time(std::size_t i) const { return times_[i]; }
    int event(std::size_t i) const { return events_[i]; }
    std::span<const double> times() const { return times_; }
    std::span<const int> events() const { return events_; }
    std::size_t event_count() const;

    /// Position of record i in the input sequence the dataset was built from.
    std::size_t original_index(std::size_t i) const { return origin_[i]; }

    /// Grid over all distinct observed times, with t_0 = 0.
    const TimeGrid& grid() const { return grid_; }

    /// Index k such that grid()[k] == time(i).
    std::size_t grid_index(std::size_t i) const { return grid_pos_[i]; }

    SurvivalRecord record(std::size_t i) const;
    std::vector<SurvivalRecord> records() const;

    /// Records in the given canonical positions, re-sorted; duplicates allowed.
    SurvivalDataset subset(std::span<const std::size_t> indices) const;

private:
    std::size_t dim_ = 0;
    std::vector<double> features_;
    std::vector<double> times_;
    std::vector<int> events_;
    std::vector<std::size_t> origin_;
    std::vector<std::size_t> grid_pos_;
    TimeGrid grid_;
};

/// Product-limit estimate over the dataset's grid. Throws std::domain_error when empty.
StepFunction kaplan_meier(const SurvivalDataset& dataset);

/// Nelson-Aalen cumulative hazard over the dataset's grid.
StepFunction nelson_aalen(const SurvivalDataset& dataset);

/// Gaussian kernel weights softmax(-||x - x_i||^2 / tau) in canonical record order.
Vector kernel_weights(std::span<const double> x, const SurvivalDataset& dataset, double tau);

/// Beran estimate given weights aligned to the canonical record order.
StepFunction beran_sf(const SurvivalDataset& dataset, std::span<const double> weights);

/// Writes Beran values on the dataset grid into out (size = grid size).
void beran_values(const SurvivalDataset& dataset, std::span<const double> weights,
                  std::span<double> out);

StepFunction sf_to_chf(const StepFunction& sf, double floor = kDefaultLogFloor);
StepFunction chf_to_sf(const StepFunction& chf);

/// Fraction of admissible pairs (T_i < T_j, event_i = 1) with score_i < score_j.
/// Higher score means longer predicted survival. Tied scores earn no credit.
/// Returns nullopt when there are no admissible pairs.
std::optional<double> concordance_index(std::span<const double> times,
                                        std::span<const double> scores,
                                        std::span<const int> events);

}  // namespace survbex
