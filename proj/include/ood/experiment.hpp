#ifndef OOD_EXPERIMENT_HPP
#define OOD_EXPERIMENT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ood/dataset.hpp"
#include "ood/metrics.hpp"
#include "ood/net.hpp"
#include "ood/prior.hpp"
#include "ood/sampler.hpp"
#include "ood/scores.hpp"
#include "ood/trainer.hpp"

namespace ood {

struct OodDatasetSpec {
    std::string name;
    std::string path;
};

// MOPED runs construct both prior and initial posterior from a pretrained
// point-weight file at run time.
struct MopedSpec {
    std::string pretrained_weights_path;
    double delta = 0.01;
    double floor = 1e-6;
};

struct PriorConfig {
    std::optional<ScaleMixturePrior> scale_mixture;
    std::optional<double> diagonal_mean;    // broadcast over all weights
    std::optional<double> diagonal_stddev;
    std::optional<MopedSpec> moped;
};

struct ExperimentConfig {
    NetworkArch arch;
    PriorConfig prior;
    TrainConfig train;
    SamplerConfig sampler;
    std::vector<ScoreMethod> methods;
    int knn_k = 5;
    bool knn_exclude_self = false;

    DataFormat data_format = DataFormat::Csv;
    std::string id_train_path;
    std::string id_test_path;
    std::vector<OodDatasetSpec> ood_sets;

    std::size_t train_size = 500;
    std::size_t eval_id_count = 5000;
    std::size_t eval_ood_count = 5000;
    double split_ratio = 0.8;
    std::uint64_t master_seed = 0;

    void validate() const;
};

// Strict JSON config parsing; unknown keys are errors.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& origin = "<config>");

struct MethodDatasetResult {
    std::string ood_name;
    ScoreMethod method = ScoreMethod::SE;
    std::vector<double> id_scores;
    std::vector<double> ood_scores;
    MetricReport report;
};

struct MethodSummary {
    ScoreMethod method = ScoreMethod::SE;
    MetricSummary summary;
};

struct ExperimentRecord {
    ExperimentConfig config;
    BnnTrainResult bnn;
    MleTrainResult mle;
    std::vector<PointWeights> weight_samples;
    std::vector<MethodDatasetResult> results;
    std::vector<MethodSummary> summaries;
};

struct TrainedModel {
    BnnTrainResult bnn;
    MleTrainResult mle;
};

// Training half of the pipeline: load ID train data, balanced subsample,
// train/val split, BNN + MLE training.
TrainedModel train_model(const ExperimentConfig& config);

// Scoring half: posterior sampling, index construction over the effective
// training set, eval-set assembly, scoring, metrics.
ExperimentRecord evaluate_model(const ExperimentConfig& config, const TrainedModel& model);

// Full pipeline: balanced subsample, train/val split, BNN + MLE training,
// posterior sampling, index construction, scoring, metrics. Deterministic
// given (config, master_seed).
ExperimentRecord run_experiment(const ExperimentConfig& config);

// Weight files (posterior mu/rho, MLE weights) in a model directory.
void save_model(const TrainedModel& model, const std::string& dir);
TrainedModel load_model(const ExperimentConfig& config, const std::string& dir);

struct ManifestEntry {
    std::string file;
    std::string checksum;  // FNV-1a 64 over file bytes, hex
};

// Writes metric reports, per-method score dumps, training logs, and the
// score-distribution histogram CSV into out_dir; returns the file manifest
// (also written as manifest.csv).
std::vector<ManifestEntry> emit_reports(const ExperimentRecord& record,
                                        const std::string& out_dir);

// Hex FNV-1a 64 of a file's bytes.
std::string file_checksum(const std::string& path);

} // namespace ood

#endif
