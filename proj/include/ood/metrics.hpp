#ifndef OOD_METRICS_HPP
#define OOD_METRICS_HPP

#include <map>
#include <vector>

namespace ood {

// (score, is_ood) pairs; OOD is the positive class.
struct ScoredEvalSet {
    std::vector<double> scores;
    std::vector<bool> is_ood;

    // Finite scores, at least one positive and one negative record.
    void validate() const;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct MetricReport {
    double auc_roc = 0.0;
    std::map<double, double> fpr_at;  // TPR target -> achieved FPR
    std::size_t num_positive = 0;
    std::size_t num_negative = 0;
};

inline const std::vector<double> kDefaultTprTargets = {0.90, 0.95, 0.99};

// Threshold sweep from (0,0) to (1,1); ties at a threshold move both
// coordinates jointly.
std::vector<RocPoint> roc_curve(const ScoredEvalSet& set);

// Mann-Whitney AUC with ties counted 1/2; identical to the trapezoidal area
// under roc_curve.
double auc_roc(const ScoredEvalSet& set);

// Smallest achievable FPR among operating points with TPR >= tpr_target.
double fpr_at_tpr(const ScoredEvalSet& set, double tpr_target);

MetricReport compute_metrics(const ScoredEvalSet& set,
                             const std::vector<double>& tpr_targets = kDefaultTprTargets);

struct MetricSummary {
    double auc_mean = 0.0, auc_std = 0.0;
    std::map<double, std::pair<double, double>> fpr_at;  // target -> (mean, std)
};

// Mean and population standard deviation per metric over the reports.
MetricSummary summarize(const std::vector<MetricReport>& per_dataset);

} // namespace ood

#endif
