#ifndef OOD_SAMPLER_HPP
#define OOD_SAMPLER_HPP

#include <cstdint>
#include <vector>

#include "ood/net.hpp"

namespace ood {

struct SamplerConfig {
    int num_samples = 500;
    std::uint64_t seed = 0;
    // Draw the weight samples once and reuse them for every input, so index
    // and query ELVs live in the same sampled-geometry.
    bool share_samples_across_inputs = true;

    void validate() const;
};

// M x K logit matrix for a single input; row m is the logit vector under
// weight sample m.
struct LogitEnsemble {
    int num_classes = 0;
    std::vector<std::vector<double>> rows;

    int num_samples() const { return static_cast<int>(rows.size()); }
    void validate() const;
};

// M independent reparameterized posterior draws; deterministic given seed.
std::vector<PointWeights> draw_weight_samples(const VariationalPosterior& posterior,
                                              const SamplerConfig& config);

LogitEnsemble logit_ensemble(const std::vector<PointWeights>& weight_samples,
                             std::span<const double> input);

// Column-wise mean of the ensemble.
std::vector<double> expected_logit_vector(const LogitEnsemble& ensemble);

// Mean over rows of softmax(row); a valid probability vector.
std::vector<double> posterior_predictive(const LogitEnsemble& ensemble);

} // namespace ood

#endif
