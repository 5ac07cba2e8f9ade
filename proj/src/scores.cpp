#include "ood/scores.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ood/errors.hpp"

namespace ood {

std::string score_method_name(ScoreMethod m) {
    switch (m) {
        case ScoreMethod::SE: return "SE";
        case ScoreMethod::PE: return "PE";
        case ScoreMethod::MI: return "MI";
        case ScoreMethod::MaxLogitDet: return "MLE_ML";
        case ScoreMethod::MaxLogitElv: return "EL_ML";
        case ScoreMethod::KnnDet: return "MLE_kNN";
        case ScoreMethod::KnnElv: return "EL_kNN";
        case ScoreMethod::KnnPlusDet: return "MLE_kNN+";
        case ScoreMethod::KnnPlusElv: return "EL_kNN+";
    }
    throw std::invalid_argument("score_method_name: unknown method");
}

ScoreMethod parse_score_method(const std::string& name) {
    for (ScoreMethod m : all_score_methods())
        if (score_method_name(m) == name) return m;
    throw ConfigError("unknown score method: " + name);
}

std::vector<ScoreMethod> all_score_methods() {
    return {ScoreMethod::SE,          ScoreMethod::PE,         ScoreMethod::MI,
            ScoreMethod::MaxLogitDet, ScoreMethod::MaxLogitElv, ScoreMethod::KnnDet,
            ScoreMethod::KnnElv,      ScoreMethod::KnnPlusDet, ScoreMethod::KnnPlusElv};
}

bool method_uses_posterior(ScoreMethod m) {
    switch (m) {
        case ScoreMethod::PE:
        case ScoreMethod::MI:
        case ScoreMethod::MaxLogitElv:
        case ScoreMethod::KnnElv:
        case ScoreMethod::KnnPlusElv:
            return true;
        default:
            return false;
    }
}

bool method_uses_index(ScoreMethod m) {
    switch (m) {
        case ScoreMethod::KnnDet:
        case ScoreMethod::KnnElv:
        case ScoreMethod::KnnPlusDet:
        case ScoreMethod::KnnPlusElv:
            return true;
        default:
            return false;
    }
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
    for (double z : logits)
        if (!std::isfinite(z)) throw std::invalid_argument("softmax: non-finite logit");
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

namespace {

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

} // namespace

double softmax_entropy(std::span<const double> logits) {
    return entropy(softmax(logits));
}

double max_logit_score(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("max_logit_score: empty logits");
    for (double z : logits)
        if (!std::isfinite(z))
            throw std::invalid_argument("max_logit_score: non-finite logit");
    return -*std::max_element(logits.begin(), logits.end());
}

double predictive_entropy(const LogitEnsemble& ensemble) {
    return entropy(posterior_predictive(ensemble));
}

double mutual_information(const LogitEnsemble& ensemble) {
    const double pe = predictive_entropy(ensemble);
    double mean_row_entropy = 0.0;
    for (const auto& row : ensemble.rows) mean_row_entropy += softmax_entropy(row);
    mean_row_entropy /= static_cast<double>(ensemble.rows.size());
    double mi = pe - mean_row_entropy;
    if (mi < 0.0 && mi >= -1e-9) mi = 0.0;
    return std::max(mi, 0.0);
}

double knn_score(const LogitIndex& index, std::span<const double> query, int k,
                 bool exclude_self) {
    return index.kth_neighbor_distance(query, k, exclude_self);
}

double knn_plus_score(const LogitIndex& index, std::span<const double> query, int k,
                      bool exclude_self) {
    const int num_classes = index.num_classes();
    if (num_classes < 2)
        throw std::invalid_argument("knn_plus_score: need at least 2 classes");

    std::vector<double> class_dist(num_classes);
    for (int c = 0; c < num_classes; ++c)
        class_dist[c] = index.kth_neighbor_distance_in_class(query, k, c);

    // argmin with ties broken to the smallest class id
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
        if (class_dist[c] < class_dist[best]) best = c;

    double other_sum = 0.0;
    for (int c = 0; c < num_classes; ++c)
        if (c != best) other_sum += class_dist[c];

    const double global = index.kth_neighbor_distance(query, k, exclude_self);
    return global + class_dist[best] - other_sum / static_cast<double>(num_classes - 1);
}

std::vector<double> score_dataset(ScoreMethod method, const ScoringArtifacts& artifacts,
                                  const std::vector<std::vector<double>>& inputs) {
    const bool needs_posterior = method_uses_posterior(method);
    const bool needs_index = method_uses_index(method);
    const bool det_path = !needs_posterior && method != ScoreMethod::PE;

    if (needs_posterior && artifacts.weight_samples == nullptr)
        throw ConfigError("score_dataset: " + score_method_name(method) +
                          " requires posterior weight samples");
    if (det_path && artifacts.point_weights == nullptr)
        throw ConfigError("score_dataset: " + score_method_name(method) +
                          " requires point weights");
    if (needs_index) {
        const LogitIndex* idx = needs_posterior ? artifacts.elv_index : artifacts.det_index;
        if (idx == nullptr)
            throw ConfigError("score_dataset: " + score_method_name(method) +
                              " requires a logit index");
    }
    if (needs_index && artifacts.k < 1)
        throw ConfigError("score_dataset: k must be >= 1");

    std::vector<double> scores;
    scores.reserve(inputs.size());
    for (const auto& x : inputs) {
        switch (method) {
            case ScoreMethod::SE:
                scores.push_back(softmax_entropy(forward_logits(*artifacts.point_weights, x)));
                break;
            case ScoreMethod::PE:
                scores.push_back(predictive_entropy(logit_ensemble(*artifacts.weight_samples, x)));
                break;
            case ScoreMethod::MI:
                scores.push_back(mutual_information(logit_ensemble(*artifacts.weight_samples, x)));
                break;
            case ScoreMethod::MaxLogitDet:
                scores.push_back(max_logit_score(forward_logits(*artifacts.point_weights, x)));
                break;
            case ScoreMethod::MaxLogitElv:
                scores.push_back(max_logit_score(
                    expected_logit_vector(logit_ensemble(*artifacts.weight_samples, x))));
                break;
            case ScoreMethod::KnnDet:
                scores.push_back(knn_score(*artifacts.det_index,
                                           forward_logits(*artifacts.point_weights, x),
                                           artifacts.k, artifacts.exclude_self));
                break;
            case ScoreMethod::KnnElv:
                scores.push_back(knn_score(
                    *artifacts.elv_index,
                    expected_logit_vector(logit_ensemble(*artifacts.weight_samples, x)),
                    artifacts.k, artifacts.exclude_self));
                break;
            case ScoreMethod::KnnPlusDet:
                scores.push_back(knn_plus_score(*artifacts.det_index,
                                                forward_logits(*artifacts.point_weights, x),
                                                artifacts.k, artifacts.exclude_self));
                break;
            case ScoreMethod::KnnPlusElv:
                scores.push_back(knn_plus_score(
                    *artifacts.elv_index,
                    expected_logit_vector(logit_ensemble(*artifacts.weight_samples, x)),
                    artifacts.k, artifacts.exclude_self));
                break;
        }
    }
    return scores;
}

} // namespace ood
