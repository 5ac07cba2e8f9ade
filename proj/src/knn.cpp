#include "ood/knn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ood/errors.hpp"

namespace ood {

namespace {

double squared_distance(std::span<const double> a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// k-th smallest (1-based) of dists; at most one exact zero removed first when
// exclude_self is set.
double kth_of(std::vector<double>& dists, int k, bool exclude_self) {
    if (exclude_self) {
        auto it = std::find(dists.begin(), dists.end(), 0.0);
        if (it != dists.end()) dists.erase(it);
    }
    if (k < 1 || static_cast<std::size_t>(k) > dists.size())
        throw std::invalid_argument("kth_neighbor_distance: k exceeds available rows");
    std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
    return std::sqrt(dists[k - 1]);
}

} // namespace

LogitIndex::LogitIndex(std::vector<std::vector<double>> vectors, std::vector<int> labels)
    : vectors_(std::move(vectors)), labels_(std::move(labels)) {
    if (vectors_.empty()) throw std::invalid_argument("LogitIndex: empty");
    if (vectors_.size() != labels_.size())
        throw std::invalid_argument("LogitIndex: vectors/labels size mismatch");
    dim_ = static_cast<int>(vectors_[0].size());
    for (const auto& v : vectors_) {
        if (static_cast<int>(v.size()) != dim_)
            throw std::invalid_argument("LogitIndex: ragged vectors");
        for (double x : v)
            if (!std::isfinite(x))
                throw std::invalid_argument("LogitIndex: non-finite vector entry");
    }
    for (int l : labels_)
        if (l < 0) throw std::invalid_argument("LogitIndex: negative label");
    num_classes_ = *std::max_element(labels_.begin(), labels_.end()) + 1;
    by_class_.assign(num_classes_, {});
    for (std::size_t i = 0; i < labels_.size(); ++i)
        by_class_[labels_[i]].push_back(i);
}

const std::vector<std::size_t>& LogitIndex::class_rows(int class_c) const {
    if (class_c < 0 || class_c >= num_classes_)
        throw std::invalid_argument("LogitIndex: class out of range");
    return by_class_[class_c];
}

double LogitIndex::kth_neighbor_distance(std::span<const double> query, int k,
                                         bool exclude_self) const {
    if (static_cast<int>(query.size()) != dim_)
        throw std::invalid_argument("kth_neighbor_distance: query dimension mismatch");
    std::vector<double> dists;
    dists.reserve(vectors_.size());
    for (const auto& v : vectors_) dists.push_back(squared_distance(query, v));
    return kth_of(dists, k, exclude_self);
}

double LogitIndex::kth_neighbor_distance_in_class(std::span<const double> query, int k,
                                                  int class_c) const {
    if (static_cast<int>(query.size()) != dim_)
        throw std::invalid_argument("kth_neighbor_distance_in_class: query dimension mismatch");
    const auto& rows = class_rows(class_c);
    if (k < 1 || static_cast<std::size_t>(k) > rows.size())
        throw InsufficientClassSamples(
            "kth_neighbor_distance_in_class: class " + std::to_string(class_c) +
                " has " + std::to_string(rows.size()) + " rows, need k=" +
                std::to_string(k),
            class_c);
    std::vector<double> dists;
    dists.reserve(rows.size());
    for (std::size_t r : rows) dists.push_back(squared_distance(query, vectors_[r]));
    return kth_of(dists, k, /*exclude_self=*/false);
}

void LogitIndex::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open index CSV for writing: " + path);
    out << "input_id";
    for (int k = 0; k < dim_; ++k) out << ",logit_" << k;
    out << ",label\n";
    out.precision(17);
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
        out << i;
        for (double x : vectors_[i]) out << ',' << x;
        out << ',' << labels_[i] << '\n';
    }
}

LogitIndex LogitIndex::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open index CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": missing header row");

    std::vector<std::vector<double>> vectors;
    std::vector<int> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> fields;
        while (std::getline(ss, cell, ',')) {
            try {
                fields.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(lineno) +
                                ": cannot parse field '" + cell + "'");
            }
        }
        if (fields.size() < 3)
            throw DataError(path + ":" + std::to_string(lineno) + ": too few columns");
        labels.push_back(static_cast<int>(fields.back()));
        vectors.emplace_back(fields.begin() + 1, fields.end() - 1);
    }
    return LogitIndex(std::move(vectors), std::move(labels));
}

LogitIndex build_index(std::vector<std::vector<double>> vectors, std::vector<int> labels) {
    return LogitIndex(std::move(vectors), std::move(labels));
}

} // namespace ood
