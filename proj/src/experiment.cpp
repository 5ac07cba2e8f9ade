#include "ood/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "ood/errors.hpp"
#include "ood/rng.hpp"
#include "ood/serialize.hpp"

namespace ood {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
    arch.validate();
    train.validate();
    sampler.validate();
    if (methods.empty()) throw ConfigError("config: no score methods selected");
    if (knn_k < 1) throw ConfigError("config: knn k must be >= 1");
    if (train_size < static_cast<std::size_t>(arch.num_classes))
        throw ConfigError("config: train_size smaller than class count");
    if (eval_id_count < 1 || eval_ood_count < 1)
        throw ConfigError("config: eval sample counts must be >= 1");
    if (!(split_ratio > 0.0 && split_ratio < 1.0))
        throw ConfigError("config: split_ratio must be in (0,1)");
    if (id_train_path.empty() || id_test_path.empty())
        throw ConfigError("config: ID train/test paths required");
    if (ood_sets.empty()) throw ConfigError("config: at least one OOD dataset required");

    int prior_variants = 0;
    if (prior.scale_mixture) ++prior_variants;
    if (prior.diagonal_stddev) ++prior_variants;
    if (prior.moped) ++prior_variants;
    if (prior_variants != 1)
        throw ConfigError("config: exactly one prior variant must be specified");
}

namespace {

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
                return key == a;
            }) == allowed.end())
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

template <typename T>
T get_required(const json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    check_keys(root, origin,
               {"arch", "prior", "train", "sampler", "scores", "data", "train_size",
                "eval_id_count", "eval_ood_count", "split_ratio", "seed"});

    ExperimentConfig cfg;

    const json arch = get_required<json>(root, origin, "arch");
    check_keys(arch, origin + ".arch",
               {"input_dim", "hidden_dims", "num_classes", "softplus_beta"});
    cfg.arch.input_dim = get_required<int>(arch, origin + ".arch", "input_dim");
    cfg.arch.hidden_dims = get_or<std::vector<int>>(arch, "hidden_dims", {64});
    cfg.arch.num_classes = get_required<int>(arch, origin + ".arch", "num_classes");
    cfg.arch.softplus_beta = get_or<double>(arch, "softplus_beta", 1.0);

    const json prior = get_required<json>(root, origin, "prior");
    const std::string ptype = get_required<std::string>(prior, origin + ".prior", "type");
    if (ptype == "scale_mixture") {
        check_keys(prior, origin + ".prior", {"type", "pi", "sigma1", "sigma2"});
        ScaleMixturePrior mix;
        mix.pi = get_or<double>(prior, "pi", 0.75);
        mix.sigma1 = get_or<double>(prior, "sigma1", 0.1);
        mix.sigma2 = get_or<double>(prior, "sigma2", 0.5);
        cfg.prior.scale_mixture = mix;
    } else if (ptype == "diagonal") {
        check_keys(prior, origin + ".prior", {"type", "mean", "stddev"});
        cfg.prior.diagonal_mean = get_or<double>(prior, "mean", 0.0);
        cfg.prior.diagonal_stddev = get_required<double>(prior, origin + ".prior", "stddev");
    } else if (ptype == "moped") {
        check_keys(prior, origin + ".prior",
                   {"type", "pretrained_weights", "delta", "floor"});
        MopedSpec moped;
        moped.pretrained_weights_path =
            get_required<std::string>(prior, origin + ".prior", "pretrained_weights");
        moped.delta = get_or<double>(prior, "delta", 0.01);
        moped.floor = get_or<double>(prior, "floor", 1e-6);
        cfg.prior.moped = moped;
    } else {
        throw ConfigError(origin + ".prior: unknown type '" + ptype + "'");
    }

    const json train = get_or<json>(root, "train", json::object());
    check_keys(train, origin + ".train",
               {"learning_rate", "batch_size", "epochs", "kl_weight",
                "mc_samples_per_batch", "kl_weight_per_batch"});
    cfg.train.learning_rate = get_or<double>(train, "learning_rate", 0.001);
    cfg.train.batch_size = get_or<int>(train, "batch_size", 256);
    cfg.train.epochs = get_or<int>(train, "epochs", 200);
    cfg.train.kl_weight = get_or<double>(train, "kl_weight", 0.1);
    cfg.train.mc_samples_per_batch = get_or<int>(train, "mc_samples_per_batch", 1);
    cfg.train.kl_weight_per_batch = get_or<bool>(train, "kl_weight_per_batch", false);

    const json sampler = get_or<json>(root, "sampler", json::object());
    check_keys(sampler, origin + ".sampler", {"num_samples", "share_samples_across_inputs"});
    cfg.sampler.num_samples = get_or<int>(sampler, "num_samples", 500);
    cfg.sampler.share_samples_across_inputs =
        get_or<bool>(sampler, "share_samples_across_inputs", true);

    const json scores = get_or<json>(root, "scores", json::object());
    check_keys(scores, origin + ".scores", {"methods", "k", "exclude_self"});
    if (scores.contains("methods")) {
        for (const auto& name : get_required<std::vector<std::string>>(
                 scores, origin + ".scores", "methods"))
            cfg.methods.push_back(parse_score_method(name));
    } else {
        cfg.methods = all_score_methods();
    }
    cfg.knn_k = get_or<int>(scores, "k", 5);
    cfg.knn_exclude_self = get_or<bool>(scores, "exclude_self", false);

    const json data = get_required<json>(root, origin, "data");
    check_keys(data, origin + ".data", {"format", "id_train", "id_test", "ood"});
    cfg.data_format = parse_format(get_or<std::string>(data, "format", "csv"));
    cfg.id_train_path = get_required<std::string>(data, origin + ".data", "id_train");
    cfg.id_test_path = get_required<std::string>(data, origin + ".data", "id_test");
    const json ood_obj = get_required<json>(data, origin + ".data", "ood");
    if (!ood_obj.is_object())
        throw ConfigError(origin + ".data.ood: expected an object of name -> path");
    for (const auto& [name, path] : ood_obj.items())
        cfg.ood_sets.push_back({name, path.get<std::string>()});
    std::sort(cfg.ood_sets.begin(), cfg.ood_sets.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });

    cfg.train_size = get_or<std::size_t>(root, "train_size", 500);
    cfg.eval_id_count = get_or<std::size_t>(root, "eval_id_count", 5000);
    cfg.eval_ood_count = get_or<std::size_t>(root, "eval_ood_count", 5000);
    cfg.split_ratio = get_or<double>(root, "split_ratio", 0.8);
    cfg.master_seed = get_or<std::uint64_t>(root, "seed", 0);
    cfg.train.seed = derive_seed(cfg.master_seed, "train");
    cfg.sampler.seed = derive_seed(cfg.master_seed, "sampler");

    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str(), path);
}

namespace {

std::uint64_t fnv1a(const char* data, std::size_t n, std::uint64_t h = 14695981039346656037ull) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ull;
    }
    return h;
}

std::size_t hash_row(const std::vector<double>& row) {
    return fnv1a(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(double));
}

LabeledDataset clamp_subsample(const LabeledDataset& ds, std::size_t want,
                               std::uint64_t seed, const std::string& what) {
    std::size_t n = want;
    if (n > ds.size()) {
        std::cerr << "warning: requested " << want << " " << what
                  << " samples but only " << ds.size() << " available; clamping\n";
        n = ds.size();
    }
    return random_subsample(ds, n, seed);
}

} // namespace

namespace {

// The effective training set and validation split, recomputable from the
// config alone (seeded).
std::pair<LabeledDataset, LabeledDataset> effective_split(const ExperimentConfig& config) {
    LabeledDataset id_train_full = load_dataset(config.id_train_path, config.data_format);
    id_train_full.validate(config.arch.num_classes);
    LabeledDataset pool = balanced_subsample(id_train_full, config.train_size,
                                             derive_seed(config.master_seed, "subsample"));
    return split_train_val(pool, config.split_ratio,
                           derive_seed(config.master_seed, "split"));
}

} // namespace

TrainedModel train_model(const ExperimentConfig& config) {
    config.validate();
    auto [train_split, val_split] = effective_split(config);

    // Resolve the prior (MOPED also fixes the posterior starting point).
    PriorSpec prior = ScaleMixturePrior{};
    std::optional<VariationalPosterior> init_post;
    if (config.prior.scale_mixture) {
        prior = *config.prior.scale_mixture;
    } else if (config.prior.diagonal_stddev) {
        DiagonalGaussianPrior diag;
        diag.mean.assign(config.arch.weight_count(), *config.prior.diagonal_mean);
        diag.stddev.assign(config.arch.weight_count(), *config.prior.diagonal_stddev);
        prior = std::move(diag);
    } else {
        const auto& moped = *config.prior.moped;
        PointWeights pretrained(config.arch,
                                load_weights_binary(moped.pretrained_weights_path));
        MopedResult built =
            moped_prior_from_pretrained(pretrained, moped.delta, moped.floor);
        prior = std::move(built.prior);
        init_post = std::move(built.posterior);
    }

    TrainedModel model;
    model.bnn = train_bnn(train_split, val_split, config.arch, prior, config.train,
                          init_post ? &*init_post : nullptr);
    model.mle = train_mle(train_split, val_split, config.arch, config.train);
    return model;
}

ExperimentRecord evaluate_model(const ExperimentConfig& config, const TrainedModel& model) {
    config.validate();
    const std::uint64_t seed = config.master_seed;

    ExperimentRecord record;
    record.config = config;
    record.bnn = model.bnn;
    record.mle = model.mle;

    const LabeledDataset train_split = effective_split(config).first;
    LabeledDataset id_test = load_dataset(config.id_test_path, config.data_format);

    record.weight_samples = draw_weight_samples(record.bnn.posterior, config.sampler);

    // Reference indices over the effective training set.
    std::vector<std::vector<double>> det_vectors, elv_vectors;
    for (const auto& x : train_split.inputs) {
        det_vectors.push_back(forward_logits(record.mle.weights, x));
        elv_vectors.push_back(
            expected_logit_vector(logit_ensemble(record.weight_samples, x)));
    }
    LogitIndex det_index = build_index(det_vectors, train_split.labels);
    LogitIndex elv_index = build_index(elv_vectors, train_split.labels);

    ScoringArtifacts artifacts;
    artifacts.point_weights = &record.mle.weights;
    artifacts.weight_samples = &record.weight_samples;
    artifacts.det_index = &det_index;
    artifacts.elv_index = &elv_index;
    artifacts.k = config.knn_k;
    artifacts.exclude_self = config.knn_exclude_self;

    LabeledDataset eval_id =
        clamp_subsample(id_test, config.eval_id_count, derive_seed(seed, "eval-id"), "ID test");

    // Never let effective-training rows leak into the ID negative pool.
    std::unordered_set<std::size_t> train_hashes;
    for (const auto& x : train_split.inputs) train_hashes.insert(hash_row(x));
    {
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < eval_id.size(); ++i)
            if (!train_hashes.count(hash_row(eval_id.inputs[i]))) keep.push_back(i);
        if (keep.size() != eval_id.size()) {
            std::cerr << "warning: dropped " << (eval_id.size() - keep.size())
                      << " ID eval rows identical to training rows\n";
            eval_id = eval_id.select(keep);
        }
    }

    // Score the shared ID negatives once per method.
    std::vector<std::vector<double>> id_scores;
    for (ScoreMethod method : config.methods)
        id_scores.push_back(score_dataset(method, artifacts, eval_id.inputs));

    for (const auto& ood_spec : config.ood_sets) {
        LabeledDataset ood = load_dataset(ood_spec.path, config.data_format);
        LabeledDataset eval_ood =
            clamp_subsample(ood, config.eval_ood_count,
                            derive_seed(seed, "eval-ood:" + ood_spec.name), "OOD");
        for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
            MethodDatasetResult res;
            res.ood_name = ood_spec.name;
            res.method = config.methods[mi];
            res.id_scores = id_scores[mi];
            res.ood_scores = score_dataset(res.method, artifacts, eval_ood.inputs);

            ScoredEvalSet set;
            set.scores = res.id_scores;
            set.scores.insert(set.scores.end(), res.ood_scores.begin(),
                              res.ood_scores.end());
            set.is_ood.assign(res.id_scores.size(), false);
            set.is_ood.insert(set.is_ood.end(), res.ood_scores.size(), true);
            res.report = compute_metrics(set);
            record.results.push_back(std::move(res));
        }
    }

    for (ScoreMethod method : config.methods) {
        std::vector<MetricReport> reports;
        for (const auto& res : record.results)
            if (res.method == method) reports.push_back(res.report);
        record.summaries.push_back({method, summarize(reports)});
    }
    return record;
}

ExperimentRecord run_experiment(const ExperimentConfig& config) {
    return evaluate_model(config, train_model(config));
}

void save_model(const TrainedModel& model, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw DataError("cannot create model directory: " + dir);
    save_weights_binary(model.bnn.posterior.mu, (fs::path(dir) / "posterior_mu.bin").string());
    save_weights_binary(model.bnn.posterior.rho,
                        (fs::path(dir) / "posterior_rho.bin").string());
    save_weights_binary(model.mle.weights.values,
                        (fs::path(dir) / "mle_weights.bin").string());
    write_training_log(model.bnn.log, (fs::path(dir) / "train_log_bnn.csv").string());
    write_training_log(model.mle.log, (fs::path(dir) / "train_log_mle.csv").string());
}

TrainedModel load_model(const ExperimentConfig& config, const std::string& dir) {
    TrainedModel model;
    model.bnn.posterior = VariationalPosterior(
        config.arch, load_weights_binary((fs::path(dir) / "posterior_mu.bin").string()),
        load_weights_binary((fs::path(dir) / "posterior_rho.bin").string()));
    model.mle.weights = PointWeights(
        config.arch, load_weights_binary((fs::path(dir) / "mle_weights.bin").string()));
    return model;
}

namespace {

std::string sanitize_filename(std::string s) {
    for (char& c : s)
        if (c == '+')
            c = 'p';
        else if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            c = '_';
    return s;
}

void write_score_histogram(std::ostream& out, const MethodDatasetResult& res) {
    constexpr int kBins = 30;
    double lo = res.id_scores.front(), hi = lo;
    for (double s : res.id_scores) { lo = std::min(lo, s); hi = std::max(hi, s); }
    for (double s : res.ood_scores) { lo = std::min(lo, s); hi = std::max(hi, s); }
    if (hi <= lo) hi = lo + 1.0;
    const double width = (hi - lo) / kBins;

    auto bin_masses = [&](const std::vector<double>& scores) {
        std::vector<double> mass(kBins, 0.0);
        for (double s : scores) {
            int b = static_cast<int>((s - lo) / width);
            b = std::clamp(b, 0, kBins - 1);
            mass[b] += 1.0 / static_cast<double>(scores.size());
        }
        return mass;
    };

    const auto id_mass = bin_masses(res.id_scores);
    const auto ood_mass = bin_masses(res.ood_scores);
    for (int b = 0; b < kBins; ++b) {
        const double blo = lo + b * width, bhi = lo + (b + 1) * width;
        out << score_method_name(res.method) << ',' << res.ood_name << ",id," << blo
            << ',' << bhi << ',' << id_mass[b] << '\n';
        out << score_method_name(res.method) << ',' << res.ood_name << ",ood," << blo
            << ',' << bhi << ',' << ood_mass[b] << '\n';
    }
}

} // namespace

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for checksum: " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

std::vector<ManifestEntry> emit_reports(const ExperimentRecord& record,
                                        const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir))
        throw DataError("cannot create output directory: " + out_dir);

    std::vector<std::string> files;
    auto open = [&](const std::string& name) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path);
        if (!out) throw DataError("cannot open output file: " + path);
        out.precision(17);
        files.push_back(name);
        return out;
    };

    {
        auto out = open("metrics.csv");
        out << "method,dataset,auc_roc,fpr90,fpr95,fpr99,num_positive,num_negative\n";
        for (const auto& res : record.results)
            out << score_method_name(res.method) << ',' << res.ood_name << ','
                << res.report.auc_roc << ',' << res.report.fpr_at.at(0.90) << ','
                << res.report.fpr_at.at(0.95) << ',' << res.report.fpr_at.at(0.99) << ','
                << res.report.num_positive << ',' << res.report.num_negative << '\n';
    }
    {
        auto out = open("summary.csv");
        out << "method,auc_mean,auc_std,fpr90_mean,fpr90_std,fpr95_mean,fpr95_std,"
               "fpr99_mean,fpr99_std\n";
        for (const auto& s : record.summaries) {
            out << score_method_name(s.method) << ',' << s.summary.auc_mean << ','
                << s.summary.auc_std;
            for (double target : {0.90, 0.95, 0.99}) {
                const auto& [mean, stddev] = s.summary.fpr_at.at(target);
                out << ',' << mean << ',' << stddev;
            }
            out << '\n';
        }
    }
    for (const auto& res : record.results) {
        auto out = open("scores_" + sanitize_filename(score_method_name(res.method)) +
                        "_" + sanitize_filename(res.ood_name) + ".csv");
        out << "input_id,method,score,is_ood_label\n";
        std::size_t id = 0;
        for (double s : res.id_scores)
            out << id++ << ',' << score_method_name(res.method) << ',' << s << ",0\n";
        for (double s : res.ood_scores)
            out << id++ << ',' << score_method_name(res.method) << ',' << s << ",1\n";
    }
    {
        auto out = open("histograms.csv");
        out << "method,dataset,split,bin_lo,bin_hi,mass\n";
        for (const auto& res : record.results) write_score_histogram(out, res);
    }
    write_training_log(record.bnn.log, (fs::path(out_dir) / "train_log_bnn.csv").string());
    files.push_back("train_log_bnn.csv");
    write_training_log(record.mle.log, (fs::path(out_dir) / "train_log_mle.csv").string());
    files.push_back("train_log_mle.csv");

    std::sort(files.begin(), files.end());
    std::vector<ManifestEntry> manifest;
    for (const auto& name : files)
        manifest.push_back({name, file_checksum((fs::path(out_dir) / name).string())});

    std::ofstream mout((fs::path(out_dir) / "manifest.csv").string());
    if (!mout) throw DataError("cannot open manifest for writing");
    mout << "file,checksum\n";
    for (const auto& entry : manifest) mout << entry.file << ',' << entry.checksum << '\n';
    return manifest;
}

} // namespace ood
