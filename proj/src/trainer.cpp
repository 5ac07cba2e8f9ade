#include "ood/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ood/errors.hpp"
#include "ood/rng.hpp"

namespace ood {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (kl_weight < 0.0) throw std::invalid_argument("TrainConfig: kl_weight must be >= 0");
    if (mc_samples_per_batch < 1)
        throw std::invalid_argument("TrainConfig: mc_samples_per_batch must be >= 1");
}

AdamOptimizer::AdamOptimizer(std::size_t dim, double lr, double beta1, double beta2,
                             double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(dim, 0.0), v_(dim, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw std::invalid_argument("AdamOptimizer: dimension mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < m_.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
    }
}

double nll_softmax(std::span<const double> logits, int label,
                   std::span<double> dlogits, double scale) {
    const std::size_t k = logits.size();
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t i = 0; i < k; ++i) {
        const double p = std::exp(logits[i] - lse);
        dlogits[i] += scale * (p - (static_cast<int>(i) == label ? 1.0 : 0.0));
    }
    return lse - logits[label];
}

ElboResult elbo_loss(const VariationalPosterior& posterior, const PriorSpec& prior,
                     const LabeledDataset& batch, std::span<const double> noise,
                     double kl_scale) {
    if (batch.inputs.empty()) throw std::invalid_argument("elbo_loss: empty batch");
    const std::size_t n = posterior.mu.size();
    if (noise.size() == 0 || noise.size() % n != 0)
        throw std::invalid_argument("elbo_loss: noise length must be a multiple of weight count");
    const std::size_t num_samples = noise.size() / n;
    const std::size_t batch_n = batch.inputs.size();

    ElboResult res;
    res.grad_mu.assign(n, 0.0);
    res.grad_rho.assign(n, 0.0);

    std::vector<double> grad_w(n);
    std::vector<double> dlogits(posterior.arch.num_classes);
    ForwardTrace trace;
    const double inv = 1.0 / (static_cast<double>(num_samples) * static_cast<double>(batch_n));

    for (std::size_t s = 0; s < num_samples; ++s) {
        const auto eps = noise.subspan(s * n, n);
        PointWeights w = sample_weights(posterior, eps);
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        for (std::size_t b = 0; b < batch_n; ++b) {
            auto logits = forward_logits_traced(posterior.arch, w.values,
                                                batch.inputs[b], trace);
            std::fill(dlogits.begin(), dlogits.end(), 0.0);
            res.nll_term += inv * nll_softmax(logits, batch.labels[b], dlogits, inv);
            backward_logits(posterior.arch, w.values, trace, dlogits, grad_w);
        }
        for (std::size_t i = 0; i < n; ++i) {
            res.grad_mu[i] += grad_w[i];
            res.grad_rho[i] += grad_w[i] * eps[i] * softplus_prime(posterior.rho[i]);
        }
    }

    if (kl_scale != 0.0) {
        res.kl_term = kl_scale * kl_posterior_prior(posterior, prior);
        kl_posterior_prior_grad(posterior, prior, kl_scale, res.grad_mu, res.grad_rho);
    }
    res.loss = res.nll_term + res.kl_term;
    return res;
}

double accuracy(const PointWeights& weights, const LabeledDataset& dataset) {
    if (dataset.inputs.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < dataset.inputs.size(); ++i) {
        auto logits = forward_logits(weights, dataset.inputs[i]);
        const auto best = std::max_element(logits.begin(), logits.end());
        if (static_cast<int>(best - logits.begin()) == dataset.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.inputs.size());
}

namespace {

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(start + batch_size, n);
        batches.emplace_back(idx.begin() + start, idx.begin() + end);
    }
    return batches;
}

} // namespace

BnnTrainResult train_bnn(const LabeledDataset& train, const LabeledDataset& val,
                         const NetworkArch& arch, const PriorSpec& prior,
                         const TrainConfig& config,
                         const VariationalPosterior* initial_posterior) {
    config.validate();
    arch.validate();
    train.validate(arch.num_classes);
    val.validate(arch.num_classes);
    validate_prior(prior);

    VariationalPosterior posterior =
        initial_posterior != nullptr
            ? *initial_posterior
            : init_posterior(arch, derive_seed(config.seed, "bnn-init"));
    if (posterior.arch != arch)
        throw std::invalid_argument("train_bnn: initial posterior arch mismatch");
    const std::size_t n = posterior.mu.size();

    const std::size_t num_batches =
        (train.size() + config.batch_size - 1) / config.batch_size;
    const double kl_scale = config.kl_weight_per_batch
                                ? config.kl_weight
                                : config.kl_weight / static_cast<double>(num_batches);

    auto shuffle_rng = make_rng(derive_seed(config.seed, "bnn-shuffle"));
    auto noise_rng = make_rng(derive_seed(config.seed, "bnn-noise"));
    std::normal_distribution<double> normal(0.0, 1.0);

    // One Adam state over the concatenated (mu, rho) vector.
    std::vector<double> params(2 * n);
    std::copy(posterior.mu.begin(), posterior.mu.end(), params.begin());
    std::copy(posterior.rho.begin(), posterior.rho.end(), params.begin() + n);
    AdamOptimizer adam(2 * n, config.learning_rate);

    BnnTrainResult result;
    result.posterior = posterior;
    double best_acc = -1.0;
    std::vector<double> noise(static_cast<std::size_t>(config.mc_samples_per_batch) * n);
    std::vector<double> grad(2 * n);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        double epoch_loss = 0.0, epoch_kl = 0.0;
        const auto batches = make_batches(train.size(), config.batch_size, shuffle_rng);
        for (const auto& rows : batches) {
            LabeledDataset batch = train.select(rows);
            for (double& e : noise) e = normal(noise_rng);
            std::copy(params.begin(), params.begin() + n, posterior.mu.begin());
            std::copy(params.begin() + n, params.end(), posterior.rho.begin());
            ElboResult elbo = elbo_loss(posterior, prior, batch, noise, kl_scale);
            if (!std::isfinite(elbo.loss))
                throw TrainingDiverged(
                    "train_bnn: non-finite loss at epoch " + std::to_string(epoch), epoch);
            epoch_loss += elbo.loss;
            epoch_kl += elbo.kl_term;
            std::copy(elbo.grad_mu.begin(), elbo.grad_mu.end(), grad.begin());
            std::copy(elbo.grad_rho.begin(), elbo.grad_rho.end(), grad.begin() + n);
            adam.step(params, grad);
        }
        std::copy(params.begin(), params.begin() + n, posterior.mu.begin());
        std::copy(params.begin() + n, params.end(), posterior.rho.begin());

        const double val_acc = accuracy(PointWeights(arch, posterior.mu), val);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / static_cast<double>(batches.size());
        rec.kl_term = epoch_kl / static_cast<double>(batches.size());
        rec.val_accuracy = val_acc;
        rec.checkpointed = val_acc > best_acc;
        if (rec.checkpointed) {
            best_acc = val_acc;
            result.posterior = posterior;
        }
        result.log.push_back(rec);
    }
    result.final_posterior = posterior;
    return result;
}

MleTrainResult train_mle(const LabeledDataset& train, const LabeledDataset& val,
                         const NetworkArch& arch, const TrainConfig& config) {
    config.validate();
    arch.validate();
    train.validate(arch.num_classes);
    val.validate(arch.num_classes);

    const std::size_t n = arch.weight_count();
    // Small random init with the same spread convention as the posterior means.
    PosteriorInit init;
    auto init_rng = make_rng(derive_seed(config.seed, "mle-init"));
    std::normal_distribution<double> normal(0.0, init.stddev());
    std::vector<double> params(n);
    for (double& w : params) w = normal(init_rng);

    auto shuffle_rng = make_rng(derive_seed(config.seed, "mle-shuffle"));
    AdamOptimizer adam(n, config.learning_rate);

    MleTrainResult result;
    result.weights = PointWeights(arch, params);
    double best_acc = -1.0;

    std::vector<double> grad(n);
    std::vector<double> dlogits(arch.num_classes);
    ForwardTrace trace;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        const auto batches = make_batches(train.size(), config.batch_size, shuffle_rng);
        for (const auto& rows : batches) {
            std::fill(grad.begin(), grad.end(), 0.0);
            const double inv = 1.0 / static_cast<double>(rows.size());
            double batch_loss = 0.0;
            for (std::size_t r : rows) {
                auto logits = forward_logits_traced(arch, params, train.inputs[r], trace);
                std::fill(dlogits.begin(), dlogits.end(), 0.0);
                batch_loss += inv * nll_softmax(logits, train.labels[r], dlogits, inv);
                backward_logits(arch, params, trace, dlogits, grad);
            }
            if (!std::isfinite(batch_loss))
                throw TrainingDiverged(
                    "train_mle: non-finite loss at epoch " + std::to_string(epoch), epoch);
            epoch_loss += batch_loss;
            adam.step(params, grad);
        }
        const double val_acc = accuracy(PointWeights(arch, params), val);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / static_cast<double>(batches.size());
        rec.kl_term = 0.0;
        rec.val_accuracy = val_acc;
        rec.checkpointed = val_acc > best_acc;
        if (rec.checkpointed) {
            best_acc = val_acc;
            result.weights = PointWeights(arch, params);
        }
        result.log.push_back(rec);
    }
    return result;
}

void write_training_log(const std::vector<EpochRecord>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open training log for writing: " + path);
    out << "epoch,train_loss,kl_term,val_accuracy,checkpoint_flag\n";
    out.precision(17);
    for (const auto& rec : log)
        out << rec.epoch << ',' << rec.train_loss << ',' << rec.kl_term << ','
            << rec.val_accuracy << ',' << (rec.checkpointed ? 1 : 0) << '\n';
}

} // namespace ood
