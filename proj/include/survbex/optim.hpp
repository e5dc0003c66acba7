#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "survbex/survival.hpp"

namespace survbex {

struct OptimResult {
    Vector minimizer;
    double value = 0.0;
    double gradient_norm = 0.0;  // infinity norm at the minimizer
    int iterations = 0;
    bool converged = false;
    std::string message;
    std::vector<std::pair<int, double>> trace;  // (iteration, value), filled on request
};

struct BfgsOptions {
    double tol = 1e-6;  // on the gradient infinity norm
    int max_iter = 500;
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_step_halvings = 20;  // retries after a non-finite evaluation
    bool record_trace = false;
};

using Objective = std::function<double(std::span<const double>)>;
using Gradient = std::function<Vector(std::span<const double>)>;

/// Returns f(x) and writes the gradient into grad.
using ValueAndGradient = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Dense BFGS on the inverse Hessian with a strong-Wolfe line search.
OptimResult bfgs_minimize(const ValueAndGradient& fg, Vector x0, const BfgsOptions& options = {});

OptimResult bfgs_minimize(const Objective& objective, const Gradient& gradient, Vector x0,
                          const BfgsOptions& options = {});

/// Central differences (f(x + h e_j) - f(x - h e_j)) / 2h.
Vector finite_diff_gradient(const Objective& objective, std::span<const double> x, double h = 1e-6);

}  // namespace survbex
