#include "ood/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ood/errors.hpp"
#include "ood/rng.hpp"

namespace ood {

int LabeledDataset::max_label() const {
    int m = -1;
    for (int l : labels) m = std::max(m, l);
    return m;
}

void LabeledDataset::validate(int num_classes) const {
    if (inputs.empty()) throw std::invalid_argument("LabeledDataset: empty");
    if (inputs.size() != labels.size())
        throw std::invalid_argument("LabeledDataset: inputs/labels size mismatch");
    const std::size_t d = inputs[0].size();
    if (d == 0) throw std::invalid_argument("LabeledDataset: zero-dimensional inputs");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != d)
            throw std::invalid_argument("LabeledDataset: ragged input dimensions");
        for (double x : inputs[i])
            if (!std::isfinite(x))
                throw std::invalid_argument("LabeledDataset: non-finite feature");
        if (labels[i] < 0 || (num_classes >= 0 && labels[i] >= num_classes))
            throw std::invalid_argument("LabeledDataset: label out of range");
    }
}

LabeledDataset LabeledDataset::select(const std::vector<std::size_t>& rows) const {
    LabeledDataset out;
    out.inputs.reserve(rows.size());
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) {
        out.inputs.push_back(inputs.at(r));
        out.labels.push_back(labels.at(r));
    }
    return out;
}

DataFormat parse_format(const std::string& s) {
    if (s == "csv") return DataFormat::Csv;
    if (s == "idx") return DataFormat::Idx;
    throw ConfigError("unknown dataset format: " + s);
}

LabeledDataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line))
        throw DataError(path + ": missing header row");

    LabeledDataset ds;
    std::size_t lineno = 1;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        bool first = true;
        int label = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                if (first) {
                    label = std::stoi(cell, &pos);
                    if (pos != cell.size() || label < 0)
                        throw std::invalid_argument("label");
                    first = false;
                } else {
                    double v = std::stod(cell, &pos);
                    if (pos != cell.size()) throw std::invalid_argument("feature");
                    row.push_back(v);
                }
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(lineno) +
                                ": cannot parse field '" + cell + "'");
            }
        }
        if (first)
            throw DataError(path + ":" + std::to_string(lineno) + ": empty row");
        if (dim == 0) dim = row.size();
        if (row.size() != dim)
            throw DataError(path + ":" + std::to_string(lineno) + ": ragged row (" +
                            std::to_string(row.size()) + " features, expected " +
                            std::to_string(dim) + ")");
        ds.inputs.push_back(std::move(row));
        ds.labels.push_back(label);
    }
    if (ds.inputs.empty()) throw DataError(path + ": no data rows");
    ds.validate();
    return ds;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError(path + ": truncated IDX header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

} // namespace

std::string idx_labels_path_for(const std::string& images_path) {
    std::string p = images_path;
    auto pos = p.find("images-idx3");
    if (pos != std::string::npos) {
        p.replace(pos, std::strlen("images-idx3"), "labels-idx1");
        return p;
    }
    pos = p.find("images");
    if (pos != std::string::npos) {
        p.replace(pos, std::strlen("images"), "labels");
        return p;
    }
    throw DataError("cannot derive labels path from IDX images path: " + images_path);
}

LabeledDataset load_idx_dataset(const std::string& images_path,
                                const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError("cannot open IDX images file: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError("cannot open IDX labels file: " + labels_path);

    const std::uint32_t img_magic = read_be32(img, images_path);
    if (img_magic != 0x00000803u)
        throw DataError(images_path + ": bad IDX images magic (offset 0)");
    const std::uint32_t count = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);

    const std::uint32_t lab_magic = read_be32(lab, labels_path);
    if (lab_magic != 0x00000801u)
        throw DataError(labels_path + ": bad IDX labels magic (offset 0)");
    const std::uint32_t lab_count = read_be32(lab, labels_path);
    if (lab_count != count)
        throw DataError(labels_path + ": label count " + std::to_string(lab_count) +
                        " != image count " + std::to_string(count));

    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    if (count == 0 || dim == 0)
        throw DataError(images_path + ": empty IDX file");

    LabeledDataset ds;
    ds.inputs.resize(count);
    ds.labels.resize(count);
    std::vector<unsigned char> buf(dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim));
        if (!img)
            throw DataError(images_path + ": truncated image data at record " +
                            std::to_string(i));
        auto& row = ds.inputs[i];
        row.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) row[j] = buf[j] / 255.0;
        int c = lab.get();
        if (c == EOF)
            throw DataError(labels_path + ": truncated label data at record " +
                            std::to_string(i));
        ds.labels[i] = c;
    }
    ds.validate();
    return ds;
}

LabeledDataset load_dataset(const std::string& path, DataFormat format) {
    if (format == DataFormat::Csv) return load_csv_dataset(path);
    return load_idx_dataset(path, idx_labels_path_for(path));
}

std::pair<LabeledDataset, LabeledDataset>
split_train_val(const LabeledDataset& dataset, double ratio, std::uint64_t seed) {
    dataset.validate();
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("split_train_val: ratio must be in (0,1)");
    const std::size_t n = dataset.size();
    if (n < 2) throw std::invalid_argument("split_train_val: need at least 2 samples");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = make_rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    const std::size_t n_train =
        static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n)));
    std::vector<std::size_t> train_rows(idx.begin(), idx.begin() + n_train);
    std::vector<std::size_t> val_rows(idx.begin() + n_train, idx.end());
    return {dataset.select(train_rows), dataset.select(val_rows)};
}

LabeledDataset balanced_subsample(const LabeledDataset& dataset, std::size_t n,
                                  std::uint64_t seed) {
    dataset.validate();
    const int num_classes = dataset.max_label() + 1;
    if (n < static_cast<std::size_t>(num_classes))
        throw std::invalid_argument("balanced_subsample: n smaller than class count");

    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < dataset.size(); ++i)
        by_class[dataset.labels[i]].push_back(i);

    const std::size_t base = n / num_classes;
    const std::size_t rem = n % num_classes;

    auto rng = make_rng(seed);
    std::vector<std::size_t> rows;
    rows.reserve(n);
    for (int c = 0; c < num_classes; ++c) {
        const std::size_t want = base + (static_cast<std::size_t>(c) < rem ? 1 : 0);
        if (by_class[c].size() < want)
            throw InsufficientClassSamples(
                "balanced_subsample: class " + std::to_string(c) + " has only " +
                    std::to_string(by_class[c].size()) + " samples, need " +
                    std::to_string(want),
                c);
        std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
        rows.insert(rows.end(), by_class[c].begin(), by_class[c].begin() + want);
    }
    return dataset.select(rows);
}

LabeledDataset random_subsample(const LabeledDataset& dataset, std::size_t n,
                                std::uint64_t seed) {
    dataset.validate();
    if (n == 0) throw std::invalid_argument("random_subsample: n must be >= 1");
    std::vector<std::size_t> idx(dataset.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = make_rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(n, dataset.size()));
    return dataset.select(idx);
}

} // namespace ood
