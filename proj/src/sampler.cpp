#include "ood/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "ood/rng.hpp"
#include "ood/scores.hpp"

namespace ood {

void SamplerConfig::validate() const {
    if (num_samples < 1)
        throw std::invalid_argument("SamplerConfig: num_samples must be >= 1");
}

void LogitEnsemble::validate() const {
    if (rows.empty()) throw std::invalid_argument("LogitEnsemble: empty");
    if (num_classes < 2) throw std::invalid_argument("LogitEnsemble: num_classes < 2");
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != num_classes)
            throw std::invalid_argument("LogitEnsemble: ragged rows");
        for (double z : row)
            if (!std::isfinite(z))
                throw std::invalid_argument("LogitEnsemble: non-finite logit");
    }
}

std::vector<PointWeights> draw_weight_samples(const VariationalPosterior& posterior,
                                              const SamplerConfig& config) {
    config.validate();
    const std::size_t n = posterior.mu.size();
    auto rng = make_rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<PointWeights> samples;
    samples.reserve(config.num_samples);
    std::vector<double> eps(n);
    for (int m = 0; m < config.num_samples; ++m) {
        for (double& e : eps) e = normal(rng);
        samples.push_back(sample_weights(posterior, eps));
    }
    return samples;
}

LogitEnsemble logit_ensemble(const std::vector<PointWeights>& weight_samples,
                             std::span<const double> input) {
    if (weight_samples.empty())
        throw std::invalid_argument("logit_ensemble: no weight samples");
    LogitEnsemble ensemble;
    ensemble.num_classes = weight_samples.front().arch.num_classes;
    ensemble.rows.reserve(weight_samples.size());
    for (const auto& w : weight_samples)
        ensemble.rows.push_back(forward_logits(w, input));
    return ensemble;
}

std::vector<double> expected_logit_vector(const LogitEnsemble& ensemble) {
    ensemble.validate();
    std::vector<double> mean(ensemble.num_classes, 0.0);
    for (const auto& row : ensemble.rows)
        for (int k = 0; k < ensemble.num_classes; ++k) mean[k] += row[k];
    const double inv = 1.0 / static_cast<double>(ensemble.rows.size());
    for (double& m : mean) m *= inv;
    return mean;
}

std::vector<double> posterior_predictive(const LogitEnsemble& ensemble) {
    ensemble.validate();
    std::vector<double> mean(ensemble.num_classes, 0.0);
    for (const auto& row : ensemble.rows) {
        const auto p = softmax(row);
        for (int k = 0; k < ensemble.num_classes; ++k) mean[k] += p[k];
    }
    const double inv = 1.0 / static_cast<double>(ensemble.rows.size());
    for (double& m : mean) m *= inv;
    return mean;
}

} // namespace ood
