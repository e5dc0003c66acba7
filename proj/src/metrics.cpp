#include "survbex/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace survbex {

NormalizedImportance normalize_importance(std::span<const double> b) {
    if (b.empty()) throw std::domain_error("normalize_importance: empty vector");
    NormalizedImportance out;
    out.vector.resize(b.size());
    double mass = 0.0;
    for (double v : b) mass += std::abs(v);
    if (mass == 0.0) {
        out.all_zero = true;
        out.vector.assign(b.size(), 1.0 / static_cast<double>(b.size()));
        return out;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
        out.vector[j] = std::abs(b[j]) + kNormEpsilon;
        total += out.vector[j];
    }
    for (double& v : out.vector) v /= total;
    return out;
}

double importance_distance(std::span<const double> b_model, std::span<const double> b_true) {
    if (b_model.size() != b_true.size()) throw std::domain_error("importance_distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < b_true.size(); ++j) s += (b_model[j] - b_true[j]) * (b_model[j] - b_true[j]);
    return s;
}

double importance_kl(std::span<const double> b_model, std::span<const double> b_true) {
    if (b_model.size() != b_true.size()) throw std::domain_error("importance_kl: dimension mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < b_true.size(); ++j) {
        if (b_true[j] <= 0.0) continue;
        if (b_model[j] <= 0.0) throw std::domain_error("importance_kl: model vector must be positive");
        s += b_true[j] * std::log(b_true[j] / b_model[j]);
    }
    return s;
}

std::optional<double> importance_cindex(std::span<const double> b_model, std::span<const double> b_true) {
    if (b_model.size() != b_true.size()) throw std::domain_error("importance_cindex: dimension mismatch");
    double pairs = 0.0, kept = 0.0;
    for (std::size_t i = 0; i < b_true.size(); ++i) {
        for (std::size_t j = 0; j < b_true.size(); ++j) {
            if (b_true[i] < b_true[j]) {
                pairs += 1.0;
                if (b_model[i] < b_model[j]) kept += 1.0;
            }
        }
    }
    if (pairs == 0.0) return std::nullopt;
    return kept / pairs;
}

double sf_distance(const StepFunction& a, const StepFunction& b) {
    if (!(a.grid() == b.grid())) throw std::domain_error("sf_distance: grids differ");
    const auto& grid = a.grid();
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double diff = a.value(k) - b.value(k);
        s += diff * diff * (grid[k + 1] - grid[k]);
    }
    return s;
}

}  // namespace survbex
