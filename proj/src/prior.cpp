#include "ood/prior.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ood {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727417803297; // 0.5*log(2*pi)

double log_normal_density(double x, double mean, double stddev) {
    const double z = (x - mean) / stddev;
    return -kHalfLog2Pi - std::log(stddev) - 0.5 * z * z;
}

} // namespace

void ScaleMixturePrior::validate() const {
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("ScaleMixturePrior: pi must be in (0,1)");
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
        throw std::invalid_argument("ScaleMixturePrior: component stds must be > 0");
}

void DiagonalGaussianPrior::validate() const {
    if (mean.size() != stddev.size())
        throw std::invalid_argument("DiagonalGaussianPrior: mean/stddev length mismatch");
    for (std::size_t i = 0; i < stddev.size(); ++i) {
        if (!std::isfinite(mean[i]) || !std::isfinite(stddev[i]) || !(stddev[i] > 0.0))
            throw std::invalid_argument("DiagonalGaussianPrior: stds must be finite and > 0");
    }
}

void validate_prior(const PriorSpec& prior) {
    std::visit([](const auto& p) { p.validate(); }, prior);
}

double log_prior_density(const PriorSpec& prior, const PointWeights& weights) {
    validate_prior(prior);
    for (double w : weights.values)
        if (!std::isfinite(w))
            throw std::invalid_argument("log_prior_density: non-finite weight");

    if (const auto* mix = std::get_if<ScaleMixturePrior>(&prior)) {
        const double lp1 = std::log(mix->pi);
        const double lp2 = std::log1p(-mix->pi);
        double total = 0.0;
        for (double w : weights.values) {
            const double a = lp1 + log_normal_density(w, 0.0, mix->sigma1);
            const double b = lp2 + log_normal_density(w, 0.0, mix->sigma2);
            const double m = std::max(a, b);
            total += m + std::log(std::exp(a - m) + std::exp(b - m));
        }
        return total;
    }
    const auto& diag = std::get<DiagonalGaussianPrior>(prior);
    if (diag.mean.size() != weights.values.size())
        throw std::invalid_argument("log_prior_density: prior/weights length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < weights.values.size(); ++i)
        total += log_normal_density(weights.values[i], diag.mean[i], diag.stddev[i]);
    return total;
}

double kl_gaussian_gaussian(double mu_m, double sigma_m, double mu_n, double sigma_n) {
    if (!(sigma_m > 0.0) || !(sigma_n > 0.0))
        throw std::invalid_argument("kl_gaussian_gaussian: stds must be > 0");
    const double d = mu_m - mu_n;
    return std::log(sigma_n / sigma_m) +
           (sigma_m * sigma_m + d * d) / (2.0 * sigma_n * sigma_n) - 0.5;
}

double kl_mixture_upper_bound(const VariationalPosterior& posterior,
                              const ScaleMixturePrior& prior) {
    prior.validate();
    double total = 0.0;
    for (std::size_t k = 0; k < posterior.mu.size(); ++k) {
        const double s = softplus(posterior.rho[k]);
        total += prior.pi * kl_gaussian_gaussian(posterior.mu[k], s, 0.0, prior.sigma1);
        total += (1.0 - prior.pi) * kl_gaussian_gaussian(posterior.mu[k], s, 0.0, prior.sigma2);
    }
    return total;
}

double kl_posterior_prior_diagonal(const VariationalPosterior& posterior,
                                   const DiagonalGaussianPrior& prior) {
    prior.validate();
    if (prior.mean.size() != posterior.mu.size())
        throw std::invalid_argument("kl_posterior_prior_diagonal: length mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < posterior.mu.size(); ++k) {
        const double s = softplus(posterior.rho[k]);
        total += kl_gaussian_gaussian(posterior.mu[k], s, prior.mean[k], prior.stddev[k]);
    }
    return total;
}

double kl_posterior_prior(const VariationalPosterior& posterior, const PriorSpec& prior) {
    if (const auto* mix = std::get_if<ScaleMixturePrior>(&prior))
        return kl_mixture_upper_bound(posterior, *mix);
    return kl_posterior_prior_diagonal(posterior, std::get<DiagonalGaussianPrior>(prior));
}

void kl_posterior_prior_grad(const VariationalPosterior& posterior, const PriorSpec& prior,
                             double scale, std::span<double> grad_mu,
                             std::span<double> grad_rho) {
    const std::size_t n = posterior.mu.size();
    if (grad_mu.size() != n || grad_rho.size() != n)
        throw std::invalid_argument("kl_posterior_prior_grad: grad length mismatch");

    for (std::size_t k = 0; k < n; ++k) {
        const double mu = posterior.mu[k];
        const double rho = posterior.rho[k];
        const double s = softplus(rho);
        double dmu = 0.0, dsigma = 0.0;
        if (const auto* mix = std::get_if<ScaleMixturePrior>(&prior)) {
            const double v1 = mix->sigma1 * mix->sigma1;
            const double v2 = mix->sigma2 * mix->sigma2;
            dmu = mix->pi * mu / v1 + (1.0 - mix->pi) * mu / v2;
            dsigma = -1.0 / s + mix->pi * s / v1 + (1.0 - mix->pi) * s / v2;
        } else {
            const auto& diag = std::get<DiagonalGaussianPrior>(prior);
            const double v = diag.stddev[k] * diag.stddev[k];
            dmu = (mu - diag.mean[k]) / v;
            dsigma = -1.0 / s + s / v;
        }
        grad_mu[k] += scale * dmu;
        grad_rho[k] += scale * dsigma * softplus_prime(rho);
    }
}

MopedResult moped_prior_from_pretrained(const PointWeights& pretrained, double delta,
                                        double floor) {
    if (!(delta > 0.0))
        throw std::invalid_argument("moped_prior_from_pretrained: delta must be > 0");
    if (!(floor > 0.0))
        throw std::invalid_argument("moped_prior_from_pretrained: floor must be > 0");

    const std::size_t n = pretrained.values.size();
    DiagonalGaussianPrior prior;
    prior.mean = pretrained.values;
    prior.stddev.resize(n);
    std::vector<double> rho(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::max(delta * std::abs(pretrained.values[i]), floor);
        prior.stddev[i] = s;
        rho[i] = inverse_softplus(s);
    }
    VariationalPosterior posterior(pretrained.arch, pretrained.values, std::move(rho));
    return {std::move(prior), std::move(posterior)};
}

} // namespace ood
