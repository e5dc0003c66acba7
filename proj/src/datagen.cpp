#include "survbex/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace survbex {

void ClusterSpec::validate() const {
    if (!(radius > 0.0)) throw std::domain_error("ClusterSpec: radius must be positive");
    if (!(lambda > 0.0)) throw std::domain_error("ClusterSpec: lambda must be positive");
    if (!(shape > 0.0)) throw std::domain_error("ClusterSpec: shape must be positive");
    if (center.size() != b_true.size()) {
        throw std::domain_error("ClusterSpec: center and b_true dimensions differ");
    }
}

void PerturbationSpec::validate() const {
    if (n_points < 1) throw std::domain_error("PerturbationSpec: need at least one point");
    if (!(std > 0.0)) throw std::domain_error("PerturbationSpec: std must be positive");
    if (!(sigma > 0.0)) throw std::domain_error("PerturbationSpec: sigma must be positive");
}

std::vector<Vector> gen_covariates(const ClusterSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t d = spec.center.size();
    std::vector<Vector> out(spec.n, Vector(d));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (auto& x : out) {
        if (spec.covariates == CovariateShape::box) {
            for (std::size_t j = 0; j < d; ++j) x[j] = spec.center[j] + spec.radius * unit(rng);
        } else {
            double norm = 0.0;
            for (double& v : x) {
                v = normal(rng);
                norm += v * v;
            }
            norm = std::sqrt(norm);
            const double r = spec.radius * std::pow(u01(rng), 1.0 / static_cast<double>(d));
            for (std::size_t j = 0; j < d; ++j) x[j] = spec.center[j] + r * x[j] / norm;
        }
    }
    return out;
}

double weibull_cox_time(double u, double linear_predictor, double lambda, double shape) {
    if (!(u > 0.0 && u <= 1.0)) throw std::domain_error("weibull_cox_time: u must lie in (0, 1]");
    return std::pow(-std::log(u) / (lambda * std::exp(linear_predictor)), 1.0 / shape);
}

double gen_survival_time(std::span<const double> x, std::span<const double> b_true, double lambda,
                         double shape, Rng& rng) {
    if (!(lambda > 0.0) || !(shape > 0.0)) {
        throw std::domain_error("gen_survival_time: lambda and shape must be positive");
    }
    if (x.size() != b_true.size()) throw std::domain_error("gen_survival_time: dimension mismatch");
    double lp = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) lp += b_true[j] * x[j];
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double t = 0.0;
    // U = 1 gives T = 0; redraw so that generated times stay strictly positive.
    do {
        t = weibull_cox_time(1.0 - u01(rng), lp, lambda, shape);
    } while (!(t > 0.0));
    return t;
}

CensoredTimes apply_censoring(std::span<const double> times, double censor_fraction, Rng& rng) {
    if (!(censor_fraction >= 0.0 && censor_fraction < 1.0)) {
        throw std::domain_error("apply_censoring: censor_fraction must lie in [0, 1)");
    }
    CensoredTimes out{std::vector<double>(times.begin(), times.end()),
                      std::vector<int>(times.size(), 1)};
    std::bernoulli_distribution censor(censor_fraction);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!censor(rng)) continue;
        double c = 0.0;
        do {
            c = times[i] * u01(rng);
        } while (!(c > 0.0));
        out.times[i] = c;
        out.events[i] = 0;
    }
    return out;
}

Vector preset_b_true(std::size_t d) {
    Vector b(d, 0.0);
    switch (d) {
        case 5:
        case 20:
            b[0] = 0.5;
            b[1] = 0.25;
            b[2] = 0.12;
            return b;
        case 10:
            b[0] = 0.6;
            b[1] = 0.3;
            b[2] = 0.1;
            return b;
        default:
            throw std::domain_error("no preset b_true for d = " + std::to_string(d) +
                                    "; supply cluster specs explicitly");
    }
}

std::vector<ClusterSpec> one_cluster_specs(std::size_t d) {
    ClusterSpec c;
    c.center.assign(d, 0.5);
    c.radius = 0.5;
    c.n = 200;
    c.b_true = preset_b_true(d);
    return {c};
}

std::vector<ClusterSpec> two_cluster_specs(std::size_t d) {
    ClusterSpec first;
    first.center.assign(d, 0.25);
    first.radius = 0.2;
    first.n = 200;
    first.b_true = preset_b_true(d);
    ClusterSpec second = first;
    second.center.assign(d, 0.75);
    std::reverse(second.b_true.begin(), second.b_true.end());
    return {first, second};
}

SyntheticData gen_clusters(const std::vector<ClusterSpec>& clusters, Rng& rng,
                           const SyntheticOptions& options) {
    if (clusters.empty()) throw std::domain_error("gen_clusters: no clusters");
    std::vector<SurvivalRecord> records;
    std::vector<std::size_t> label;
    std::vector<double> times;
    std::vector<ClusterSpec> specs = clusters;
    for (std::size_t c = 0; c < specs.size(); ++c) {
        specs[c].covariates = options.covariates;
        for (auto& x : gen_covariates(specs[c], rng)) {
            times.push_back(gen_survival_time(x, specs[c].b_true, specs[c].lambda, specs[c].shape, rng));
            records.push_back({std::move(x), 0.0, 1});
            label.push_back(c);
        }
    }
    auto censored = apply_censoring(times, options.censor_fraction, rng);
    for (std::size_t i = 0; i < records.size(); ++i) {
        records[i].time = censored.times[i];
        records[i].event = censored.events[i];
    }
    SyntheticData out{SurvivalDataset(std::move(records)), std::move(specs), {}};
    out.cluster_of.resize(out.dataset.size());
    for (std::size_t i = 0; i < out.dataset.size(); ++i) {
        out.cluster_of[i] = label[out.dataset.original_index(i)];
    }
    return out;
}

SyntheticData gen_one_cluster(std::size_t d, Rng& rng, const SyntheticOptions& options) {
    return gen_clusters(one_cluster_specs(d), rng, options);
}

SyntheticData gen_two_cluster(std::size_t d, Rng& rng, const SyntheticOptions& options) {
    return gen_clusters(two_cluster_specs(d), rng, options);
}

double neighborhood_weight(std::span<const double> x, std::span<const double> z, double sigma) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) d2 += (x[j] - z[j]) * (x[j] - z[j]);
    return std::exp(-d2 / sigma);
}

Neighborhood gen_neighborhood(std::span<const double> x, const PerturbationSpec& spec, Rng& rng) {
    spec.validate();
    Neighborhood out;
    out.points.reserve(spec.n_points);
    out.weights.reserve(spec.n_points);
    std::normal_distribution<double> noise(0.0, spec.std);
    for (std::size_t k = 0; k < spec.n_points; ++k) {
        Vector z(x.begin(), x.end());
        for (double& v : z) v += noise(rng);
        out.weights.push_back(neighborhood_weight(x, z, spec.sigma));
        out.points.push_back(std::move(z));
    }
    return out;
}

}  // namespace survbex
