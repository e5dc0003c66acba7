#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "survbex/datagen.hpp"
#include "survbex/explain.hpp"
#include "survbex/metrics.hpp"

namespace survbex {

void ExplainConfig::validate() const {
    if (n_perturbations < 1) throw std::domain_error("ExplainConfig: n_perturbations must be >= 1");
    if (!(perturb_std > 0.0)) throw std::domain_error("ExplainConfig: perturb_std must be positive");
    if (!(sigma > 0.0)) throw std::domain_error("ExplainConfig: sigma must be positive");
    if (!(tau > 0.0)) throw std::domain_error("ExplainConfig: tau must be positive");
    if (norm_power != 1 && norm_power != 2) throw std::domain_error("ExplainConfig: norm_power must be 1 or 2");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::domain_error("ExplainConfig: epsilon must lie in (0, 1)");
    if (max_iter < 0) throw std::domain_error("ExplainConfig: max_iter must be nonnegative");
    if (!(tol > 0.0)) throw std::domain_error("ExplainConfig: tol must be positive");
    if (extra_starts < 0) throw std::domain_error("ExplainConfig: extra_starts must be nonnegative");
}

namespace {

double kernel_term(double b, double diff, KernelKind kind) {
    return kind == KernelKind::gaussian ? b * b * diff : std::abs(b) * diff;
}

void softmax_inplace(std::span<double> v) {
    const double top = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (double& x : v) {
        x = std::exp(x - top);
        total += x;
    }
    for (double& x : v) x /= total;
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

Vector modified_beran_weights(std::span<const double> x, const SurvivalDataset& dataset,
                              std::span<const double> b, double tau, KernelKind kernel) {
    if (!(tau > 0.0)) throw std::domain_error("modified_beran_weights: tau must be positive");
    if (x.size() != dataset.dim() || b.size() != dataset.dim()) {
        throw std::domain_error("modified_beran_weights: dimension mismatch");
    }
    Vector logits(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto xi = dataset.features(i);
        double acc = 0.0;
        for (std::size_t l = 0; l < x.size(); ++l) {
            const double diff = x[l] - xi[l];
            acc += kernel_term(b[l], kernel == KernelKind::gaussian ? diff * diff : std::abs(diff), kernel);
        }
        logits[i] = -acc / tau;
    }
    softmax_inplace(logits);
    return logits;
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

SurvbexObjective::SurvbexObjective(const SurvivalDataset& dataset, std::vector<Vector> points,
                                   Vector weights, const std::vector<StepFunction>& blackbox_sfs,
                                   const ExplainConfig& config)
    : dataset_(dataset), points_(std::move(points)), weights_(std::move(weights)), config_(config) {
    config_.validate();
    const std::size_t N = points_.size();
    const std::size_t n = dataset_.size();
    const std::size_t d = dataset_.dim();
    const std::size_t G = dataset_.grid().size();
    if (n == 0) throw std::domain_error("SurvbexObjective: empty training set");
    if (weights_.size() != N || blackbox_sfs.size() != N) {
        throw std::domain_error("SurvbexObjective: points, weights and curves differ in count");
    }

    target_.resize(N * G);
    for (std::size_t j = 0; j < N; ++j) {
        if (!(blackbox_sfs[j].grid() == dataset_.grid())) {
            throw std::domain_error("SurvbexObjective: black-box curve is not on the training grid");
        }
        if (points_[j].size() != d) throw std::domain_error("SurvbexObjective: point dimension mismatch");
        for (std::size_t k = 0; k < G; ++k) {
            const double s = blackbox_sfs[j].value(k);
            target_[j * G + k] =
                config_.space == FitSpace::log_sf ? std::log(std::max(s, config_.epsilon)) : s;
        }
    }

    diffs_.resize(N * n * d);
    for (std::size_t j = 0; j < N; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            auto xi = dataset_.features(i);
            for (std::size_t l = 0; l < d; ++l) {
                const double diff = points_[j][l] - xi[l];
                diffs_[(j * n + i) * d + l] =
                    config_.kernel == KernelKind::gaussian ? diff * diff : std::abs(diff);
            }
        }
    }

    widths_.assign(G, 0.0);
    for (std::size_t k = 0; k + 1 < G; ++k) widths_[k] = dataset_.grid()[k + 1] - dataset_.grid()[k];

    closes_.assign(n, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < n; ++i) {
        if (i + 1 == n || dataset_.grid_index(i + 1) != dataset_.grid_index(i)) {
            closes_[i] = dataset_.grid_index(i);
        }
    }
}

double SurvbexObjective::point_term(std::size_t j, std::span<const double> b, std::span<double> grad,
                                    std::vector<double>& scratch) const {
    const std::size_t n = dataset_.size();
    const std::size_t d = dataset_.dim();
    const std::size_t G = widths_.size();
    const bool want_grad = !grad.empty();
    const double power = config_.norm_power;
    const bool log_space = config_.space == FitSpace::log_sf;

    scratch.resize(4 * n + G);
    std::span<double> alpha(scratch.data(), n);
    std::span<double> cum(scratch.data() + n, n);
    std::span<double> prod(scratch.data() + 2 * n, n);
    std::span<double> adj(scratch.data() + 3 * n, n);
    std::span<double> curve_adj(scratch.data() + 4 * n, G);

    const double* dj = diffs_.data() + j * n * d;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t l = 0; l < d; ++l) acc += kernel_term(b[l], dj[i * d + l], config_.kernel);
        alpha[i] = -acc / config_.tau;
    }
    softmax_inplace(alpha);

    // Forward Beran product; prod[i] is the survival value after record i.
    double c = 0.0, s = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double next = c + alpha[i];
        if (dataset_.event(i) == 1) {
            const double num = std::max(1.0 - next, 0.0);
            const double den = std::max(1.0 - c, kDenominatorFloor);
            s *= std::min(num / den, 1.0);
        }
        c = next;
        cum[i] = c;
        prod[i] = s;
    }

    // Loss over intervals [t_k, t_{k+1}); interval 0 carries S = 1 for both curves.
    const double* target = target_.data() + j * G;
    auto interval_loss = [&](std::size_t k, double surrogate, double& dloss) {
        double model = surrogate;
        double dmodel = 1.0;
        if (log_space) {
            if (surrogate > config_.epsilon) {
                model = std::log(surrogate);
                dmodel = 1.0 / surrogate;
            } else {
                model = std::log(config_.epsilon);
                dmodel = 0.0;
            }
        }
        const double err = target[k] - model;
        const double mag = std::abs(err);
        const double loss = (power == 2.0 ? err * err : mag) * widths_[k];
        dloss = -(power == 2.0 ? 2.0 * err : sign(err)) * widths_[k] * dmodel;
        return loss;
    };

    double loss = 0.0;
    double dummy = 0.0;
    loss += interval_loss(0, 1.0, dummy);
    std::fill(curve_adj.begin(), curve_adj.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = closes_[i];
        if (k == std::numeric_limits<std::size_t>::max() || k + 1 >= G) continue;
        loss += interval_loss(k, prod[i], curve_adj[k]);
    }
    if (!want_grad) return loss;

    // Reverse pass through the product, then the cumulative sums, then the softmax.
    std::fill(adj.begin(), adj.end(), 0.0);  // adjoint of cum[i]
    double carry = 0.0;                      // adjoint of prod[i] flowing from later records
    for (std::size_t i = n; i-- > 0;) {
        double p_adj = carry;
        if (closes_[i] != std::numeric_limits<std::size_t>::max()) p_adj += curve_adj[closes_[i]];
        if (dataset_.event(i) == 1) {
            const double prev_cum = i ? cum[i - 1] : 0.0;
            const double prev_prod = i ? prod[i - 1] : 1.0;
            const double num = std::max(1.0 - cum[i], 0.0);
            const double raw_den = 1.0 - prev_cum;
            const double den = std::max(raw_den, kDenominatorFloor);
            const double factor = std::min(num / den, 1.0);
            const double f_adj = p_adj * prev_prod;
            if (num / den < 1.0) {
                if (1.0 - cum[i] > 0.0) adj[i] -= f_adj / den;
                if (i > 0 && raw_den > kDenominatorFloor) adj[i - 1] += f_adj * num / (den * den);
            }
            carry = p_adj * factor;
        } else {
            carry = p_adj;
        }
    }
    // d cum[r] / d alpha[m] = 1 for r >= m.
    double suffix = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        suffix += adj[i];
        adj[i] = suffix;
    }
    double mean_adj = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_adj += alpha[i] * adj[i];
    const double w = weights_[j];
    for (std::size_t i = 0; i < n; ++i) {
        const double logit_adj = alpha[i] * (adj[i] - mean_adj) * w;
        if (logit_adj == 0.0) continue;
        for (std::size_t l = 0; l < d; ++l) {
            const double dd = dj[i * d + l];
            const double dterm = config_.kernel == KernelKind::gaussian ? 2.0 * b[l] * dd : sign(b[l]) * dd;
            grad[l] -= logit_adj * dterm / config_.tau;
        }
    }
    return loss;
}

double SurvbexObjective::value(std::span<const double> b) const {
    if (b.size() != dim()) throw std::domain_error("SurvbexObjective: dimension mismatch");
    std::vector<double> scratch;
    double total = 0.0;
    for (std::size_t j = 0; j < points_.size(); ++j) total += weights_[j] * point_term(j, b, {}, scratch);
    return total;
}

double SurvbexObjective::value_and_gradient(std::span<const double> b, std::span<double> grad) const {
    if (b.size() != dim() || grad.size() != dim()) {
        throw std::domain_error("SurvbexObjective: dimension mismatch");
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> scratch;
    double total = 0.0;
    for (std::size_t j = 0; j < points_.size(); ++j) total += weights_[j] * point_term(j, b, grad, scratch);
    return total;
}

Vector SurvbexObjective::gradient(std::span<const double> b) const {
    Vector g(dim());
    value_and_gradient(b, g);
    return g;
}

double survbex_objective(std::span<const double> b, const std::vector<StepFunction>& blackbox_sfs,
                         const std::vector<Vector>& points, std::span<const double> weights,
                         const SurvivalDataset& dataset, const ExplainConfig& config) {
    SurvbexObjective obj(dataset, points, Vector(weights.begin(), weights.end()), blackbox_sfs, config);
    return obj.value(b);
}

Vector objective_gradient(std::span<const double> b, const std::vector<StepFunction>& blackbox_sfs,
                          const std::vector<Vector>& points, std::span<const double> weights,
                          const SurvivalDataset& dataset, const ExplainConfig& config) {
    SurvbexObjective obj(dataset, points, Vector(weights.begin(), weights.end()), blackbox_sfs, config);
    return obj.gradient(b);
}

double log_sf_series(std::span<const double> alphas, std::span<const int> events, std::size_t upto) {
    if (alphas.size() != events.size()) throw std::domain_error("log_sf_series: length mismatch");
    if (alphas.empty()) return 0.0;
    upto = std::min(upto, alphas.size() - 1);
    double cum = 0.0, total = 0.0;
    for (std::size_t i = 0; i <= upto; ++i) {
        cum += alphas[i];
        if (events[i] == 1) total -= alphas[i] * (1.0 - 0.5 * alphas[i] + cum);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Explainer
// ---------------------------------------------------------------------------

ExplanationResult survbex_explain(const BlackBoxModel& blackbox, const SurvivalDataset& dataset,
                                  std::span<const double> x, const ExplainConfig& config) {
    config.validate();
    const std::size_t d = dataset.dim();
    if (x.size() != d || blackbox.dim() != d) throw std::domain_error("survbex_explain: dimension mismatch");

    Rng rng(config.seed);
    auto hood = gen_neighborhood(x, {config.n_perturbations, config.perturb_std, config.sigma}, rng);
    std::vector<StepFunction> curves;
    curves.reserve(hood.points.size());
    for (const auto& z : hood.points) curves.push_back(blackbox.predict_sf(z));

    SurvbexObjective objective(dataset, hood.points, hood.weights, curves, config);

    // Work on a normalized scale so that the gradient tolerance does not depend
    // on the time units or the neighborhood size.
    double weight_total = 0.0;
    for (double w : hood.weights) weight_total += w;
    const double scale = 1.0 / (std::max(weight_total, 1e-300) * dataset.grid().last());
    ValueAndGradient fg = [&](std::span<const double> b, std::span<double> grad) {
        const double f = objective.value_and_gradient(b, grad) * scale;
        for (double& g : grad) g *= scale;
        return f;
    };

    std::vector<Vector> starts{Vector(d, 1.0)};
    std::uniform_real_distribution<double> start_dist(0.0, 2.0);
    for (int s = 0; s < config.extra_starts; ++s) {
        Vector b0(d);
        for (double& v : b0) v = start_dist(rng);
        starts.push_back(std::move(b0));
    }

    BfgsOptions bopt;
    bopt.tol = config.tol;
    bopt.max_iter = config.max_iter;
    OptimResult best;
    best.value = std::numeric_limits<double>::infinity();
    int total_iterations = 0;
    bool any_converged = false;
    for (auto& b0 : starts) {
        OptimResult r = bfgs_minimize(fg, std::move(b0), bopt);
        total_iterations += r.iterations;
        any_converged = any_converged || r.converged;
        if (r.value < best.value) best = std::move(r);
    }

    ExplanationResult out;
    out.method = "survbex";
    out.coefficients = best.minimizer;
    out.importance = normalize_importance(best.minimizer).vector;
    out.objective_value = objective.value(best.minimizer);
    out.converged = any_converged;
    out.n_iterations = total_iterations;
    out.surrogate_sf_at_x = beran_sf(dataset, modified_beran_weights(x, dataset, best.minimizer,
                                                                     config.tau, config.kernel));
    out.blackbox_sf_at_x = blackbox.predict_sf(x);
    return out;
}

}  // namespace survbex
