#ifndef OOD_TRAINER_HPP
#define OOD_TRAINER_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ood/dataset.hpp"
#include "ood/net.hpp"
#include "ood/prior.hpp"

namespace ood {

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 256;
    int epochs = 200;
    double kl_weight = 0.1;
    int mc_samples_per_batch = 1;
    // false: kl_weight is spread over the epoch (divided by batches per epoch);
    // true: the full kl_weight is applied to every minibatch.
    bool kl_weight_per_batch = false;
    std::uint64_t seed = 0;

    void validate() const;
};

// Adam with the standard published defaults.
class AdamOptimizer {
public:
    explicit AdamOptimizer(std::size_t dim, double lr, double beta1 = 0.9,
                           double beta2 = 0.999, double eps = 1e-8);
    void step(std::span<double> params, std::span<const double> grad);

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

// Per-sample negative log softmax likelihood and its logit gradient
// (softmax - onehot), added into dlogits with the given scale.
double nll_softmax(std::span<const double> logits, int label,
                   std::span<double> dlogits, double scale);

struct ElboResult {
    double loss = 0.0;       // nll_term + kl_term
    double nll_term = 0.0;   // MC mean of the batch-mean NLL
    double kl_term = 0.0;    // kl_scale * KL(q || p)
    std::vector<double> grad_mu;
    std::vector<double> grad_rho;
};

// Reparameterized minibatch ELBO loss. noise supplies S complete weight-noise
// vectors back to back (S = noise.size() / weight_count). Gradients flow to
// both mu and rho through w = mu + softplus(rho) * eps.
ElboResult elbo_loss(const VariationalPosterior& posterior, const PriorSpec& prior,
                     const LabeledDataset& batch, std::span<const double> noise,
                     double kl_scale);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double kl_term = 0.0;
    double val_accuracy = 0.0;
    bool checkpointed = false;
};

struct BnnTrainResult {
    VariationalPosterior posterior;        // best validation checkpoint
    VariationalPosterior final_posterior;  // state after the last epoch
    std::vector<EpochRecord> log;
};

struct MleTrainResult {
    PointWeights weights;  // best validation checkpoint
    std::vector<EpochRecord> log;
};

// Fraction of dataset rows whose argmax logit equals the label.
double accuracy(const PointWeights& weights, const LabeledDataset& dataset);

// Minibatch Adam on (mu, rho); validation accuracy after each epoch is
// evaluated with the posterior-mean weights and the best checkpoint returned.
// initial_posterior overrides the default random initialization (MOPED runs
// start from the posterior returned by the prior construction).
BnnTrainResult train_bnn(const LabeledDataset& train, const LabeledDataset& val,
                         const NetworkArch& arch, const PriorSpec& prior,
                         const TrainConfig& config,
                         const VariationalPosterior* initial_posterior = nullptr);

// Cross-entropy point training, same loop without a KL term.
MleTrainResult train_mle(const LabeledDataset& train, const LabeledDataset& val,
                         const NetworkArch& arch, const TrainConfig& config);

// CSV: epoch,train_loss,kl_term,val_accuracy,checkpoint_flag
void write_training_log(const std::vector<EpochRecord>& log, const std::string& path);

} // namespace ood

#endif
