#include "survbex/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace survbex {

// ---------------------------------------------------------------------------
// TimeGrid
// ---------------------------------------------------------------------------

TimeGrid::TimeGrid() : times_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

TimeGrid::TimeGrid(std::vector<double> times) {
    if (times.empty() || times.front() != 0.0) {
        throw std::domain_error("TimeGrid: first point must be 0");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1]) || !std::isfinite(times[k])) {
            throw std::domain_error("TimeGrid: points must be finite and strictly increasing");
        }
    }
    times_ = std::make_shared<const std::vector<double>>(std::move(times));
}

TimeGrid TimeGrid::from_observed(std::span<const double> observed) {
    std::vector<double> t(observed.begin(), observed.end());
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    if (!t.empty() && t.front() <= 0.0) {
        throw std::domain_error("TimeGrid: observed times must be positive");
    }
    t.insert(t.begin(), 0.0);
    return TimeGrid(std::move(t));
}

std::size_t TimeGrid::locate(double t) const {
    const auto& v = *times_;
    auto it = std::upper_bound(v.begin(), v.end(), t);
    if (it == v.begin()) {
        throw std::domain_error("TimeGrid::locate: negative time");
    }
    return static_cast<std::size_t>(it - v.begin()) - 1;
}

bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.times_ == b.times_ || *a.times_ == *b.times_;
}

// ---------------------------------------------------------------------------
// StepFunction
// ---------------------------------------------------------------------------

StepFunction::StepFunction(TimeGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw std::domain_error("StepFunction: value count " + std::to_string(values_.size()) +
                                " does not match grid size " + std::to_string(grid_.size()));
    }
}

double StepFunction::operator()(double t) const {
    return values_[grid_.locate(t)];
}

double StepFunction::integral() const {
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < values_.size(); ++k) {
        area += values_[k] * (grid_[k + 1] - grid_[k]);
    }
    return area;
}

bool StepFunction::is_survival_function(double tol) const {
    if (values_.empty() || std::abs(values_.front() - 1.0) > tol) return false;
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (values_[k] < -tol || values_[k] > 1.0 + tol) return false;
        if (k > 0 && values_[k] > values_[k - 1] + tol) return false;
    }
    return true;
}

bool StepFunction::is_cumulative_hazard(double tol) const {
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (values_[k] < -tol) return false;
        if (k > 0 && values_[k] < values_[k - 1] - tol) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// SurvivalDataset
// ---------------------------------------------------------------------------

SurvivalDataset::SurvivalDataset(std::vector<SurvivalRecord> records) {
    if (records.empty()) return;
    dim_ = records.front().features.size();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const std::string where = "record " + std::to_string(i) + ": ";
        if (r.features.size() != dim_) {
            throw std::domain_error(where + "feature count differs from the first record");
        }
        if (!(r.time > 0.0) || !std::isfinite(r.time)) {
            throw std::domain_error(where + "time must be positive and finite");
        }
        if (r.event != 0 && r.event != 1) {
            throw std::domain_error(where + "event must be 0 or 1");
        }
        for (double f : r.features) {
            if (!std::isfinite(f)) throw std::domain_error(where + "non-finite feature");
        }
    }

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (records[a].time != records[b].time) return records[a].time < records[b].time;
        return records[a].event > records[b].event;
    });

    const std::size_t n = records.size();
    features_.reserve(n * dim_);
    times_.reserve(n);
    events_.reserve(n);
    origin_ = order;
    for (std::size_t i : order) {
        features_.insert(features_.end(), records[i].features.begin(), records[i].features.end());
        times_.push_back(records[i].time);
        events_.push_back(records[i].event);
    }

    grid_ = TimeGrid::from_observed(times_);
    grid_pos_.resize(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (grid_[k] < times_[i]) ++k;
        grid_pos_[i] = k;
    }
}

std::size_t SurvivalDataset::event_count() const {
    return static_cast<std::size_t>(std::count(events_.begin(), events_.end(), 1));
}

SurvivalRecord SurvivalDataset::record(std::size_t i) const {
    auto f = features(i);
    return {Vector(f.begin(), f.end()), times_[i], events_[i]};
}

std::vector<SurvivalRecord> SurvivalDataset::records() const {
    std::vector<SurvivalRecord> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(record(i));
    return out;
}

SurvivalDataset SurvivalDataset::subset(std::span<const std::size_t> indices) const {
    std::vector<SurvivalRecord> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(record(i));
    return SurvivalDataset(std::move(out));
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

StepFunction kaplan_meier(const SurvivalDataset& dataset) {
    if (dataset.empty()) throw std::domain_error("kaplan_meier: empty dataset");
    const auto& grid = dataset.grid();
    std::vector<double> values(grid.size(), 1.0);
    std::size_t at_risk = dataset.size();
    std::size_t i = 0;
    double s = 1.0;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        std::size_t deaths = 0, leaving = 0;
        while (i < dataset.size() && dataset.grid_index(i) == k) {
            deaths += static_cast<std::size_t>(dataset.event(i));
            ++leaving;
            ++i;
        }
        s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
        at_risk -= leaving;
        values[k] = s;
    }
    return StepFunction(grid, std::move(values));
}

StepFunction nelson_aalen(const SurvivalDataset& dataset) {
    if (dataset.empty()) throw std::domain_error("nelson_aalen: empty dataset");
    const auto& grid = dataset.grid();
    std::vector<double> values(grid.size(), 0.0);
    std::size_t at_risk = dataset.size();
    std::size_t i = 0;
    double h = 0.0;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        std::size_t deaths = 0, leaving = 0;
        while (i < dataset.size() && dataset.grid_index(i) == k) {
            deaths += static_cast<std::size_t>(dataset.event(i));
            ++leaving;
            ++i;
        }
        h += static_cast<double>(deaths) / static_cast<double>(at_risk);
        at_risk -= leaving;
        values[k] = h;
    }
    return StepFunction(grid, std::move(values));
}

Vector kernel_weights(std::span<const double> x, const SurvivalDataset& dataset, double tau) {
    if (!(tau > 0.0)) throw std::domain_error("kernel_weights: tau must be positive");
    if (x.size() != dataset.dim()) throw std::domain_error("kernel_weights: dimension mismatch");
    const std::size_t n = dataset.size();
    Vector logits(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = dataset.features(i);
        double d2 = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double diff = x[j] - xi[j];
            d2 += diff * diff;
        }
        logits[i] = -d2 / tau;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& v : logits) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : logits) v /= total;
    return logits;
}

void beran_values(const SurvivalDataset& dataset, std::span<const double> weights,
                  std::span<double> out) {
    const std::size_t n = dataset.size();
    if (weights.size() != n) {
        throw std::domain_error("beran: weight count does not match the dataset");
    }
    if (out.size() != dataset.grid().size()) {
        throw std::domain_error("beran: output size does not match the grid");
    }
    out[0] = 1.0;
    double cum = 0.0;
    double s = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double next = cum + weights[i];
        if (dataset.event(i) == 1) {
            const double num = std::max(1.0 - next, 0.0);
            const double den = std::max(1.0 - cum, kDenominatorFloor);
            s *= std::min(num / den, 1.0);
        }
        cum = next;
        out[dataset.grid_index(i)] = s;
    }
}

StepFunction beran_sf(const SurvivalDataset& dataset, std::span<const double> weights) {
    std::vector<double> values(dataset.grid().size());
    beran_values(dataset, weights, values);
    return StepFunction(dataset.grid(), std::move(values));
}

StepFunction sf_to_chf(const StepFunction& sf, double floor) {
    std::vector<double> h(sf.size());
    for (std::size_t k = 0; k < h.size(); ++k) h[k] = -std::log(std::max(sf.value(k), floor));
    return StepFunction(sf.grid(), std::move(h));
}

StepFunction chf_to_sf(const StepFunction& chf) {
    std::vector<double> s(chf.size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::exp(-chf.value(k));
    return StepFunction(chf.grid(), std::move(s));
}

std::optional<double> concordance_index(std::span<const double> times,
                                        std::span<const double> scores,
                                        std::span<const int> events) {
    if (times.size() != scores.size() || times.size() != events.size()) {
        throw std::domain_error("concordance_index: length mismatch");
    }
    double admissible = 0.0, concordant = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (events[i] != 1) continue;
        for (std::size_t j = 0; j < times.size(); ++j) {
            if (times[i] < times[j]) {
                admissible += 1.0;
                if (scores[i] < scores[j]) concordant += 1.0;
            }
        }
    }
    if (admissible == 0.0) return std::nullopt;
    return concordant / admissible;
}

}  // namespace survbex
