// Command-line front end: train models, score datasets, evaluate score dumps,
// and run the full experiment pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ood/errors.hpp"
#include "ood/experiment.hpp"
#include "ood/metrics.hpp"
#include "ood/rng.hpp"
#include "ood/serialize.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::string methods_csv;
};

ood::ExperimentConfig load_config(const CommonOpts& opts) {
    auto cfg = ood::load_experiment_config(opts.config_path);
    if (opts.seed) {
        cfg.master_seed = *opts.seed;
        cfg.train.seed = ood::derive_seed(cfg.master_seed, "train");
        cfg.sampler.seed = ood::derive_seed(cfg.master_seed, "sampler");
    }
    if (!opts.methods_csv.empty()) {
        cfg.methods.clear();
        std::stringstream ss(opts.methods_csv);
        std::string name;
        while (std::getline(ss, name, ','))
            cfg.methods.push_back(ood::parse_score_method(name));
        if (cfg.methods.empty())
            throw ood::ConfigError("--methods: empty method list");
    }
    return cfg;
}

// Score dump: input_id,method,score,is_ood_label
ood::ScoredEvalSet load_score_dump(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ood::DataError("cannot open score dump: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ood::DataError(path + ": missing header row");
    ood::ScoredEvalSet set;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, method, score, flag;
        if (!std::getline(ss, id, ',') || !std::getline(ss, method, ',') ||
            !std::getline(ss, score, ',') || !std::getline(ss, flag, ','))
            throw ood::DataError(path + ":" + std::to_string(lineno) + ": bad row");
        try {
            set.scores.push_back(std::stod(score));
            set.is_ood.push_back(std::stoi(flag) != 0);
        } catch (const std::exception&) {
            throw ood::DataError(path + ":" + std::to_string(lineno) +
                                 ": cannot parse score/flag");
        }
    }
    return set;
}

void print_report(std::ostream& out, const std::string& tag,
                  const ood::MetricReport& report) {
    out.precision(6);
    out << tag << ": auc_roc=" << report.auc_roc
        << " fpr90=" << report.fpr_at.at(0.90) << " fpr95=" << report.fpr_at.at(0.95)
        << " fpr99=" << report.fpr_at.at(0.99) << " (pos=" << report.num_positive
        << " neg=" << report.num_negative << ")\n";
}

int cmd_run(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    auto record = ood::run_experiment(cfg);
    auto manifest = ood::emit_reports(record, opts.out_dir);
    std::cout << "wrote " << manifest.size() << " report files to " << opts.out_dir << "\n";
    for (const auto& s : record.summaries)
        std::cout << ood::score_method_name(s.method)
                  << ": mean auc=" << s.summary.auc_mean
                  << " mean fpr95=" << s.summary.fpr_at.at(0.95).first << "\n";
    return kExitOk;
}

int cmd_train(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    auto model = ood::train_model(cfg);
    ood::save_model(model, opts.out_dir);
    std::cout << "model saved to " << opts.out_dir << "\n";
    if (!model.bnn.log.empty()) {
        double best = 0.0;
        for (const auto& rec : model.bnn.log)
            if (rec.checkpointed) best = rec.val_accuracy;
        std::cout << "bnn best val accuracy: " << best << "\n";
    }
    return kExitOk;
}

int cmd_score(const CommonOpts& opts, const std::string& model_dir) {
    auto cfg = load_config(opts);
    auto model = ood::load_model(cfg, model_dir);
    auto record = ood::evaluate_model(cfg, model);
    auto manifest = ood::emit_reports(record, opts.out_dir);
    std::cout << "wrote " << manifest.size() << " files to " << opts.out_dir << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& in_path) {
    auto set = load_score_dump(in_path);
    print_report(std::cout, in_path, ood::compute_metrics(set));
    return kExitOk;
}

int cmd_report(const std::string& in_dir, const std::string& out_path) {
    std::map<std::string, std::vector<ood::MetricReport>> by_method;
    std::vector<std::pair<std::string, std::string>> dumps;  // (method, file)
    for (const auto& entry : fs::directory_iterator(in_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("scores_", 0) != 0 || entry.path().extension() != ".csv") continue;
        dumps.emplace_back(name, entry.path().string());
    }
    if (dumps.empty()) throw ood::DataError("no scores_*.csv dumps found in " + in_dir);
    std::sort(dumps.begin(), dumps.end());

    std::ofstream out(out_path);
    if (!out) throw ood::DataError("cannot open report output: " + out_path);
    out.precision(17);
    out << "dump,auc_roc,fpr90,fpr95,fpr99\n";
    for (const auto& [name, path] : dumps) {
        const auto report = ood::compute_metrics(load_score_dump(path));
        out << name << ',' << report.auc_roc << ',' << report.fpr_at.at(0.90) << ','
            << report.fpr_at.at(0.95) << ',' << report.fpr_at.at(0.99) << '\n';
        print_report(std::cout, name, report);
    }
    std::cout << "report written to " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian post-hoc OOD detection experiments"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string model_dir, in_path, report_out = "report.csv";

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opts.config_path, "experiment config JSON");
        if (needs_config) c->required();
        sub->add_option("--seed", opts.seed, "master seed override");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--methods", opts.methods_csv,
                        "comma-separated score method subset");
    };

    auto* run = app.add_subcommand("run", "end-to-end experiment");
    add_common(run, true);
    auto* train = app.add_subcommand("train", "train BNN + MLE models");
    add_common(train, true);
    auto* score = app.add_subcommand("score", "score eval sets with a trained model");
    add_common(score, true);
    score->add_option("--model", model_dir, "trained model directory")->required();
    auto* eval = app.add_subcommand("eval", "metrics for one score dump CSV");
    eval->add_option("--in", in_path, "score dump CSV")->required();
    auto* report = app.add_subcommand("report", "aggregate score dumps in a directory");
    report->add_option("--in", in_path, "directory with scores_*.csv")->required();
    report->add_option("--out", report_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(opts);
        if (train->parsed()) return cmd_train(opts);
        if (score->parsed()) return cmd_score(opts, model_dir);
        if (eval->parsed()) return cmd_eval(in_path);
        if (report->parsed()) return cmd_report(in_path, report_out);
    } catch (const ood::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ood::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ood::TrainingDiverged& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
