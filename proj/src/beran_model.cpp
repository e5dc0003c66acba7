#include <stdexcept>

#include "survbex/models.hpp"

namespace survbex {

BeranModel::BeranModel(SurvivalDataset dataset, double tau)
    : dataset_(std::move(dataset)), tau_(tau) {
    if (dataset_.empty()) throw std::domain_error("BeranModel: empty training set");
    if (!(tau_ > 0.0)) throw std::domain_error("BeranModel: tau must be positive");
}

StepFunction BeranModel::predict_sf(std::span<const double> x) const {
    return beran_sf(dataset_, kernel_weights(x, dataset_, tau_));
}

StepFunction beran_blackbox_predict(const SurvivalDataset& dataset, std::span<const double> x,
                                    double tau) {
    return beran_sf(dataset, kernel_weights(x, dataset, tau));
}

double predicted_rmst(const BlackBoxModel& model, std::span<const double> x) {
    return model.predict_sf(x).integral();
}

std::optional<double> model_concordance(const BlackBoxModel& model, const SurvivalDataset& data) {
    std::vector<double> scores(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) scores[i] = predicted_rmst(model, data.features(i));
    return concordance_index(data.times(), scores, data.events());
}

}  // namespace survbex
