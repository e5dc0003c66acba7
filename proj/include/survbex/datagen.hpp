#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "survbex/survival.hpp"

namespace survbex {

using Rng = std::mt19937_64;

enum class CovariateShape { box, ball };

struct ClusterSpec {
    Vector center;
    double radius = 0.5;
    std::size_t n = 200;
    Vector b_true;
    double lambda = 1e-5;  // Weibull scale
    double shape = 2.0;    // Weibull shape v
    CovariateShape covariates = CovariateShape::box;

    void validate() const;
};

struct PerturbationSpec {
    std::size_t n_points = 100;
    double std = 0.2;
    double sigma = 0.4;

    void validate() const;
};

/// n points uniform on the box [p - R, p + R]^d, or on the ball of radius R.
std::vector<Vector> gen_covariates(const ClusterSpec& spec, Rng& rng);

/// Inverse-transform Weibull/Cox time for a given uniform draw u in (0, 1].
double weibull_cox_time(double u, double linear_predictor, double lambda, double shape);

/// T = (-ln U / (lambda exp(b.x)))^(1/v) with U ~ Uniform(0, 1].
double gen_survival_time(std::span<const double> x, std::span<const double> b_true, double lambda,
                         double shape, Rng& rng);

struct CensoredTimes {
    std::vector<double> times;
    std::vector<int> events;
};

/// Each record is censored with probability censor_fraction; a censored time is
/// replaced by C ~ Uniform(0, T).
CensoredTimes apply_censoring(std::span<const double> times, double censor_fraction, Rng& rng);

struct SyntheticOptions {
    double censor_fraction = 0.2;
    CovariateShape covariates = CovariateShape::box;
};

/// A generated dataset together with its ground truth.
struct SyntheticData {
    SurvivalDataset dataset;
    std::vector<ClusterSpec> clusters;
    std::vector<std::size_t> cluster_of;  // per canonical record

    const Vector& b_true(std::size_t canonical_index) const {
        return clusters[cluster_of[canonical_index]].b_true;
    }
};

/// Canonical importance vectors for d in {5, 10, 20}; throws std::domain_error otherwise.
Vector preset_b_true(std::size_t d);

std::vector<ClusterSpec> one_cluster_specs(std::size_t d);
std::vector<ClusterSpec> two_cluster_specs(std::size_t d);

SyntheticData gen_clusters(const std::vector<ClusterSpec>& clusters, Rng& rng,
                           const SyntheticOptions& options = {});

SyntheticData gen_one_cluster(std::size_t d, Rng& rng, const SyntheticOptions& options = {});
SyntheticData gen_two_cluster(std::size_t d, Rng& rng, const SyntheticOptions& options = {});

struct Neighborhood {
    std::vector<Vector> points;
    Vector weights;
};

/// w = exp(-||x - z||^2 / sigma); note the division by sigma, not sigma^2.
double neighborhood_weight(std::span<const double> x, std::span<const double> z, double sigma);

/// N points z ~ Normal(x, std^2 I) with their kernel weights.
Neighborhood gen_neighborhood(std::span<const double> x, const PerturbationSpec& spec, Rng& rng);

}  // namespace survbex
