#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "survbex/models.hpp"

namespace survbex {
namespace {

double linear(std::span<const double> b, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) s += b[j] * x[j];
    return s;
}

}  // namespace

CoxModel::CoxModel(Vector coefficients, StepFunction baseline_chf)
    : coefficients_(std::move(coefficients)), baseline_chf_(std::move(baseline_chf)) {
    if (!baseline_chf_.is_cumulative_hazard()) {
        throw std::domain_error("CoxModel: baseline CHF must be nonnegative and nondecreasing");
    }
}

double CoxModel::linear_predictor(std::span<const double> x) const {
    if (x.size() != coefficients_.size()) throw std::domain_error("CoxModel: dimension mismatch");
    return linear(coefficients_, x);
}

StepFunction CoxModel::predict_sf(std::span<const double> x) const {
    const double risk = std::exp(linear_predictor(x));
    std::vector<double> s(baseline_chf_.size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::exp(-baseline_chf_.value(k) * risk);
    return StepFunction(baseline_chf_.grid(), std::move(s));
}

StepFunction cox_predict_sf(const CoxModel& model, std::span<const double> x) {
    return model.predict_sf(x);
}

double cox_log_partial_likelihood(const SurvivalDataset& dataset, std::span<const double> b,
                                  std::span<double> grad) {
    const std::size_t n = dataset.size();
    const std::size_t d = dataset.dim();
    if (b.size() != d) throw std::domain_error("cox_log_partial_likelihood: dimension mismatch");
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

    std::vector<double> eta(n);
    for (std::size_t i = 0; i < n; ++i) eta[i] = linear(b, dataset.features(i));
    const double shift = n ? *std::max_element(eta.begin(), eta.end()) : 0.0;

    // Sweep from the latest time so the running sums cover the risk set {k : T_k >= t}.
    double s0 = 0.0;
    std::vector<double> s1(d, 0.0);
    double ll = 0.0;
    std::size_t end = n;
    while (end > 0) {
        std::size_t begin = end - 1;
        while (begin > 0 && dataset.time(begin - 1) == dataset.time(end - 1)) --begin;
        for (std::size_t i = begin; i < end; ++i) {
            const double w = std::exp(eta[i] - shift);
            s0 += w;
            if (want_grad) {
                auto xi = dataset.features(i);
                for (std::size_t j = 0; j < d; ++j) s1[j] += w * xi[j];
            }
        }
        const double log_s0 = std::log(s0) + shift;
        for (std::size_t i = begin; i < end; ++i) {
            if (dataset.event(i) != 1) continue;
            ll += eta[i] - log_s0;
            if (want_grad) {
                auto xi = dataset.features(i);
                for (std::size_t j = 0; j < d; ++j) grad[j] += xi[j] - s1[j] / s0;
            }
        }
        end = begin;
    }
    return ll;
}

StepFunction breslow_baseline(const SurvivalDataset& dataset, std::span<const double> b) {
    const std::size_t n = dataset.size();
    const auto& grid = dataset.grid();
    std::vector<double> risk(n);
    for (std::size_t i = 0; i < n; ++i) risk[i] = std::exp(linear(b, dataset.features(i)));

    // Risk-set sums per grid point: sum of exp(b.x) over records with T >= t_k.
    std::vector<double> at_risk(grid.size(), 0.0);
    std::vector<double> deaths(grid.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        at_risk[dataset.grid_index(i)] += risk[i];
        deaths[dataset.grid_index(i)] += dataset.event(i);
    }
    for (std::size_t k = grid.size() - 1; k-- > 1;) at_risk[k] += at_risk[k + 1];

    std::vector<double> h(grid.size(), 0.0);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        h[k] = h[k - 1] + (deaths[k] > 0.0 ? deaths[k] / at_risk[k] : 0.0);
    }
    return StepFunction(grid, std::move(h));
}

CoxModel cox_fit(const SurvivalDataset& dataset, const CoxFitOptions& options) {
    if (dataset.event_count() < 2) {
        throw std::domain_error("cox_fit: at least two uncensored records are required");
    }
    const std::size_t n = dataset.size();
    const std::size_t d = dataset.dim();

    // Optimize in standardized coordinates; the likelihood is shift invariant.
    std::vector<double> mean(d, 0.0), scale(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto x = dataset.features(i);
        for (std::size_t j = 0; j < d; ++j) mean[j] += x[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto x = dataset.features(i);
        for (std::size_t j = 0; j < d; ++j) scale[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
    }
    std::vector<std::string> warnings;
    for (std::size_t j = 0; j < d; ++j) {
        scale[j] = std::sqrt(scale[j] / static_cast<double>(n));
        if (scale[j] == 0.0) {
            warnings.push_back("feature " + std::to_string(j) +
                               " is constant; its coefficient is unidentifiable and left at 0");
            scale[j] = 1.0;
        }
    }

    std::vector<SurvivalRecord> std_records = dataset.records();
    for (auto& r : std_records) {
        for (std::size_t j = 0; j < d; ++j) r.features[j] = (r.features[j] - mean[j]) / scale[j];
    }
    const SurvivalDataset standardized(std::move(std_records));

    ValueAndGradient neg_ll = [&](std::span<const double> beta, std::span<double> grad) {
        const double ll = cox_log_partial_likelihood(standardized, beta, grad);
        for (double& g : grad) g = -g;
        return -ll;
    };
    BfgsOptions bopt;
    bopt.tol = options.tol;
    bopt.max_iter = options.max_iter;
    OptimResult res = bfgs_minimize(neg_ll, Vector(d, 0.0), bopt);

    Vector b(d);
    for (std::size_t j = 0; j < d; ++j) b[j] = res.minimizer[j] / scale[j];
    if (!res.converged) {
        throw ConvergenceError("cox_fit: " + res.message + " after " +
                                   std::to_string(res.iterations) + " iterations",
                               b);
    }

    CoxModel model(b, breslow_baseline(dataset, b));
    model.iterations = res.iterations;
    model.gradient_norm = res.gradient_norm;
    model.warnings = std::move(warnings);
    return model;
}

}  // namespace survbex
