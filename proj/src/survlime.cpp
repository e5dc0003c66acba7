#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "survbex/datagen.hpp"
#include "survbex/explain.hpp"
#include "survbex/metrics.hpp"

namespace survbex {

ExplanationResult survlime_explain(const BlackBoxModel& blackbox, const SurvivalDataset& dataset,
                                   std::span<const double> x, const ExplainConfig& config) {
    config.validate();
    const std::size_t d = dataset.dim();
    const std::size_t p = config.survlime_intercept ? d + 1 : d;
    if (x.size() != d || blackbox.dim() != d) throw std::domain_error("survlime_explain: dimension mismatch");

    Rng rng(config.seed);
    auto hood = gen_neighborhood(x, {config.n_perturbations, config.perturb_std, config.sigma}, rng);

    const auto& grid = dataset.grid();
    const std::size_t G = grid.size();
    const StepFunction baseline = nelson_aalen(dataset);
    const double log_eps = std::log(config.epsilon);

    // Normal equations of sum_j w_j sum_k dt_k (ln H_jk - ln H0_k - b.z_j)^2.
    const auto P = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(P, P);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(P);
    Eigen::VectorXd z(P);
    std::vector<double> mass(hood.points.size(), 0.0), target_sum(hood.points.size(), 0.0),
        target_sq(hood.points.size(), 0.0);
    for (std::size_t j = 0; j < hood.points.size(); ++j) {
        const StepFunction sf = blackbox.predict_sf(hood.points[j]);
        if (!(sf.grid() == grid)) throw std::domain_error("survlime_explain: black box is not on the training grid");
        for (std::size_t k = 0; k + 1 < G; ++k) {
            const double h = -std::log(std::max(sf.value(k), config.epsilon));
            const double h0 = baseline.value(k);
            if (h < config.epsilon || h0 < config.epsilon) continue;
            const double log_h = std::log(h);
            if (log_h < log_eps) continue;
            const double dt = grid[k + 1] - grid[k];
            const double y = log_h - std::log(h0);
            mass[j] += dt;
            target_sum[j] += dt * y;
            target_sq[j] += dt * y * y;
        }
        for (std::size_t l = 0; l < d; ++l) z[static_cast<Eigen::Index>(l)] = hood.points[j][l];
        if (p > d) z[P - 1] = 1.0;
        gram.noalias() += hood.weights[j] * mass[j] * z * z.transpose();
        rhs.noalias() += hood.weights[j] * target_sum[j] * z;
    }

    ExplanationResult out;
    out.method = "survlime";
    Eigen::VectorXd b;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const double diag_max = gram.diagonal().cwiseAbs().maxCoeff();
    const double pivot_min = ldlt.info() == Eigen::Success ? ldlt.vectorD().cwiseAbs().minCoeff() : 0.0;
    if (diag_max > 0.0 && pivot_min > 1e-12 * diag_max) {
        b = ldlt.solve(rhs);
    } else {
        const double ridge = 1e-8 * std::max(diag_max, 1.0);
        Eigen::MatrixXd reg = gram;
        reg.diagonal().array() += ridge;
        b = reg.ldlt().solve(rhs);
        out.ridge_fallback = true;
    }

    out.coefficients.assign(b.data(), b.data() + d);
    const double offset = p > d ? b[P - 1] : 0.0;
    out.importance = normalize_importance(out.coefficients).vector;
    double residual = 0.0;
    for (std::size_t j = 0; j < hood.points.size(); ++j) {
        double pred = offset;
        for (std::size_t l = 0; l < d; ++l) pred += out.coefficients[l] * hood.points[j][l];
        residual += hood.weights[j] *
                    (target_sq[j] - 2.0 * pred * target_sum[j] + pred * pred * mass[j]);
    }
    out.objective_value = std::max(residual, 0.0);
    out.converged = !out.ridge_fallback;

    double lp = offset;
    for (std::size_t l = 0; l < d; ++l) lp += out.coefficients[l] * x[l];
    const double risk = std::exp(lp);
    std::vector<double> s(G);
    for (std::size_t k = 0; k < G; ++k) s[k] = std::exp(-baseline.value(k) * risk);
    out.surrogate_sf_at_x = StepFunction(grid, std::move(s));
    out.blackbox_sf_at_x = blackbox.predict_sf(x);
    return out;
}

}  // namespace survbex
