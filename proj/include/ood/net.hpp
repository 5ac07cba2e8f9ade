#ifndef OOD_NET_HPP
#define OOD_NET_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace ood {

// Fully-connected classifier: affine layers with softplus hidden activations
// and a linear output layer producing one logit per class.
struct NetworkArch {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int num_classes = 0;
    double softplus_beta = 1.0;

    // Throws std::invalid_argument on non-positive dimensions or K < 2.
    void validate() const;

    // (fan_in, fan_out) per affine layer, input to output order.
    std::vector<std::pair<int, int>> layer_dims() const;

    // Total parameter count, biases included: sum of (fan_in+1)*fan_out.
    std::size_t weight_count() const;

    bool operator==(const NetworkArch&) const = default;
};

// A point in weight space. Layout per layer: W row-major (fan_out x fan_in),
// then the fan_out biases.
struct PointWeights {
    NetworkArch arch;
    std::vector<double> values;

    PointWeights() = default;
    PointWeights(NetworkArch a, std::vector<double> v);
};

// Mean-field Gaussian over weights: w_i ~ N(mu_i, softplus(rho_i)^2).
struct VariationalPosterior {
    NetworkArch arch;
    std::vector<double> mu;
    std::vector<double> rho;

    VariationalPosterior() = default;
    VariationalPosterior(NetworkArch a, std::vector<double> mu, std::vector<double> rho);

    std::vector<double> sigma() const;  // softplus(rho), elementwise
};

// Overflow-safe softplus_beta(x) = (1/beta) * log(1 + exp(beta*x)).
double softplus(double x, double beta = 1.0);
// d/dx softplus_beta(x) = sigmoid(beta*x).
double softplus_prime(double x, double beta = 1.0);
// Inverse of softplus with beta=1; requires y > 0.
double inverse_softplus(double y);

// Elementwise softplus(rho) with beta=1. Throws on non-finite input.
std::vector<double> sigma_from_rho(const std::vector<double>& rho);

// Controls how the initialization spread constant is read: as a variance
// (std = sqrt(spread)) or directly as a standard deviation.
struct PosteriorInit {
    double mu_mean = 0.0;
    double rho_mean = -5.0;
    double spread = 0.01;
    bool spread_is_variance = true;

    double stddev() const;
};

// mu ~ N(mu_mean, .), rho ~ N(rho_mean, .); deterministic given seed.
VariationalPosterior init_posterior(const NetworkArch& arch, std::uint64_t seed,
                                    const PosteriorInit& init = {});

// Reparameterized draw: w_i = mu_i + softplus(rho_i) * eps_i.
PointWeights sample_weights(const VariationalPosterior& posterior,
                            std::span<const double> eps);

// Forward pass to the logit vector (length K).
std::vector<double> forward_logits(const PointWeights& weights,
                                   std::span<const double> input);

// Cached activations for backprop. pre[l] holds the affine outputs of layer l;
// hidden layers additionally get softplus applied before feeding layer l+1.
struct ForwardTrace {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;
};

// Forward pass that records the trace; returns the logits.
std::vector<double> forward_logits_traced(const NetworkArch& arch,
                                          std::span<const double> weights,
                                          std::span<const double> input,
                                          ForwardTrace& trace);

// Accumulates d(loss)/d(weights) into grad given d(loss)/d(logits).
void backward_logits(const NetworkArch& arch, std::span<const double> weights,
                     const ForwardTrace& trace, std::span<const double> dlogits,
                     std::span<double> grad);

} // namespace ood

#endif
