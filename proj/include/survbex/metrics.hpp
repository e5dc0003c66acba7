#pragma once

#include <optional>
#include <span>

#include "survbex/survival.hpp"

namespace survbex {

inline constexpr double kNormEpsilon = 1e-12;

struct NormalizedImportance {
    Vector vector;
    bool all_zero = false;  // input had no mass; vector is uniform
};

/// (|b_j| + eps) / sum_k (|b_k| + eps).
NormalizedImportance normalize_importance(std::span<const double> b);

/// Squared Euclidean distance.
double importance_distance(std::span<const double> b_model, std::span<const double> b_true);

/// sum_i b_true_i ln(b_true_i / b_model_i); expects strictly positive inputs.
double importance_kl(std::span<const double> b_model, std::span<const double> b_true);

/// Share of pairs with b_true_i < b_true_j that keep the strict order in b_model.
/// nullopt when b_true has no strictly ordered pair.
std::optional<double> importance_cindex(std::span<const double> b_model, std::span<const double> b_true);

/// sum_k (a_k - b_k)^2 (t_{k+1} - t_k) over the shared grid.
double sf_distance(const StepFunction& a, const StepFunction& b);

}  // namespace survbex
