#ifndef OOD_PRIOR_HPP
#define OOD_PRIOR_HPP

#include <variant>
#include <vector>

#include "ood/net.hpp"

namespace ood {

// Two-component zero-mean Gaussian scale mixture, shared across all weights:
// p(w_j) = pi * N(w_j; 0, sigma1^2) + (1-pi) * N(w_j; 0, sigma2^2).
struct ScaleMixturePrior {
    double pi = 0.75;
    double sigma1 = 0.1;
    double sigma2 = 0.5;

    void validate() const;
};

// Per-weight independent Gaussian prior.
struct DiagonalGaussianPrior {
    std::vector<double> mean;
    std::vector<double> stddev;

    void validate() const;
};

using PriorSpec = std::variant<ScaleMixturePrior, DiagonalGaussianPrior>;

void validate_prior(const PriorSpec& prior);

// Sum over weights of the per-weight log prior density. The mixture case is
// evaluated with log-sum-exp of the component log densities.
double log_prior_density(const PriorSpec& prior, const PointWeights& weights);

// KL(N(mu_m, sigma_m^2) || N(mu_n, sigma_n^2)), closed form.
double kl_gaussian_gaussian(double mu_m, double sigma_m, double mu_n, double sigma_n);

// Jensen upper bound on KL(q || mixture): per weight,
// sum_i pi_i * KL(N(mu_k, sigma_k^2) || N(0, sigma_i^2)), summed over weights.
double kl_mixture_upper_bound(const VariationalPosterior& posterior,
                              const ScaleMixturePrior& prior);

// Exact KL between the factorized posterior and a diagonal Gaussian prior.
double kl_posterior_prior_diagonal(const VariationalPosterior& posterior,
                                   const DiagonalGaussianPrior& prior);

// Dispatch: exact KL for the diagonal case, the Jensen bound for the mixture.
double kl_posterior_prior(const VariationalPosterior& posterior, const PriorSpec& prior);

// Gradients of kl_posterior_prior with respect to mu and rho, accumulated into
// grad_mu/grad_rho with the given scale factor.
void kl_posterior_prior_grad(const VariationalPosterior& posterior, const PriorSpec& prior,
                             double scale, std::span<double> grad_mu,
                             std::span<double> grad_rho);

// Empirical-Bayes prior construction from pretrained point weights:
// prior mean = w, prior std_i = max(delta*|w_i|, floor); the returned posterior
// starts at the prior (mu = w, sigma_i = prior std_i), so KL is zero there.
struct MopedResult {
    DiagonalGaussianPrior prior;
    VariationalPosterior posterior;
};
MopedResult moped_prior_from_pretrained(const PointWeights& pretrained, double delta,
                                        double floor = 1e-6);

} // namespace ood

#endif
