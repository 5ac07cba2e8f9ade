#ifndef OOD_SCORES_HPP
#define OOD_SCORES_HPP

#include <span>
#include <string>
#include <vector>

#include "ood/knn.hpp"
#include "ood/net.hpp"
#include "ood/sampler.hpp"

namespace ood {

// The nine OOD scores. One orientation convention throughout: higher score
// means more OOD.
enum class ScoreMethod {
    SE,           // softmax entropy of a deterministic forward pass
    PE,           // predictive entropy of the posterior predictive
    MI,           // mutual information (epistemic part of PE)
    MaxLogitDet,  // negated max logit, deterministic
    MaxLogitElv,  // negated max logit of the expected logit vector
    KnnDet,       // k-NN distance in deterministic logit space
    KnnElv,       // k-NN distance in ELV space
    KnnPlusDet,   // class-conditioned k-NN score, deterministic
    KnnPlusElv,   // class-conditioned k-NN score, ELV
};

std::string score_method_name(ScoreMethod m);
ScoreMethod parse_score_method(const std::string& name);
std::vector<ScoreMethod> all_score_methods();
bool method_uses_posterior(ScoreMethod m);
bool method_uses_index(ScoreMethod m);

// Max-subtracted exp normalization; sums to 1.
std::vector<double> softmax(std::span<const double> logits);

// Natural-log entropy of softmax(logits); in [0, log K].
double softmax_entropy(std::span<const double> logits);

// -max_i z_i, so higher = more OOD.
double max_logit_score(std::span<const double> logits);

double predictive_entropy(const LogitEnsemble& ensemble);

// Predictive entropy minus the mean per-row entropy; tiny negative round-off
// (within 1e-9) is clamped to zero.
double mutual_information(const LogitEnsemble& ensemble);

double knn_score(const LogitIndex& index, std::span<const double> query, int k,
                 bool exclude_self);

// d_knn + d_class(c*) - mean over c' != c* of d_class(c'), where c* is the
// argmin class (ties to the smallest class id).
double knn_plus_score(const LogitIndex& index, std::span<const double> query, int k,
                      bool exclude_self);

// Everything batch scoring needs; which fields must be populated depends on
// the method (ConfigError otherwise).
struct ScoringArtifacts {
    const PointWeights* point_weights = nullptr;
    const std::vector<PointWeights>* weight_samples = nullptr;
    const LogitIndex* det_index = nullptr;
    const LogitIndex* elv_index = nullptr;
    int k = 5;
    bool exclude_self = false;
};

std::vector<double> score_dataset(ScoreMethod method, const ScoringArtifacts& artifacts,
                                  const std::vector<std::vector<double>>& inputs);

} // namespace ood

#endif
