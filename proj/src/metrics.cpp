#include "ood/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ood {

void ScoredEvalSet::validate() const {
    if (scores.size() != is_ood.size())
        throw std::invalid_argument("ScoredEvalSet: scores/labels size mismatch");
    std::size_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i]))
            throw std::invalid_argument("ScoredEvalSet: non-finite score");
        (is_ood[i] ? pos : neg)++;
    }
    if (pos == 0 || neg == 0)
        throw std::invalid_argument(
            "ScoredEvalSet: need at least one positive and one negative record");
}

std::vector<RocPoint> roc_curve(const ScoredEvalSet& set) {
    set.validate();
    const std::size_t n = set.scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return set.scores[a] > set.scores[b];
    });

    double total_pos = 0, total_neg = 0;
    for (bool o : set.is_ood) (o ? total_pos : total_neg)++;

    std::vector<RocPoint> curve;
    curve.push_back({0.0, 0.0});
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        const double threshold = set.scores[order[i]];
        // Consume the whole tie group so FPR and TPR move jointly.
        while (i < n && set.scores[order[i]] == threshold) {
            (set.is_ood[order[i]] ? tp : fp)++;
            ++i;
        }
        curve.push_back({fp / total_neg, tp / total_pos});
    }
    return curve;
}

double auc_roc(const ScoredEvalSet& set) {
    set.validate();
    const std::size_t n = set.scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return set.scores[a] < set.scores[b];
    });

    // Mann-Whitney via tie-averaged ranks of the positive scores.
    double pos_rank_sum = 0.0;
    double total_pos = 0, total_neg = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && set.scores[order[j]] == set.scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) {
            if (set.is_ood[order[t]]) {
                pos_rank_sum += avg_rank;
                total_pos++;
            } else {
                total_neg++;
            }
        }
        i = j;
    }
    return (pos_rank_sum - total_pos * (total_pos + 1.0) / 2.0) / (total_pos * total_neg);
}

double fpr_at_tpr(const ScoredEvalSet& set, double tpr_target) {
    if (!(tpr_target > 0.0 && tpr_target <= 1.0))
        throw std::invalid_argument("fpr_at_tpr: target must be in (0,1]");
    const auto curve = roc_curve(set);
    // Points come in threshold-decreasing order and are monotone in both
    // coordinates, so the first one reaching the target has the smallest FPR.
    for (const auto& pt : curve)
        if (pt.tpr >= tpr_target) return pt.fpr;
    return 1.0;
}

MetricReport compute_metrics(const ScoredEvalSet& set,
                             const std::vector<double>& tpr_targets) {
    MetricReport report;
    report.auc_roc = auc_roc(set);
    for (double t : tpr_targets) report.fpr_at[t] = fpr_at_tpr(set, t);
    for (bool o : set.is_ood) (o ? report.num_positive : report.num_negative)++;
    return report;
}

namespace {

std::pair<double, double> mean_and_population_std(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / n)};
}

} // namespace

MetricSummary summarize(const std::vector<MetricReport>& per_dataset) {
    if (per_dataset.empty()) throw std::invalid_argument("summarize: empty report list");
    MetricSummary summary;
    std::vector<double> aucs;
    for (const auto& r : per_dataset) aucs.push_back(r.auc_roc);
    std::tie(summary.auc_mean, summary.auc_std) = mean_and_population_std(aucs);
    for (const auto& [target, _] : per_dataset.front().fpr_at) {
        std::vector<double> fprs;
        for (const auto& r : per_dataset) fprs.push_back(r.fpr_at.at(target));
        summary.fpr_at[target] = mean_and_population_std(fprs);
    }
    return summary;
}

} // namespace ood
