#ifndef OOD_DATASET_HPP
#define OOD_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace ood {

struct LabeledDataset {
    std::vector<std::vector<double>> inputs;
    std::vector<int> labels;

    std::size_t size() const { return inputs.size(); }
    int dim() const { return inputs.empty() ? 0 : static_cast<int>(inputs[0].size()); }
    int max_label() const;

    // Non-empty, uniform dimension, finite values, labels in [0, num_classes).
    void validate(int num_classes = -1) const;

    LabeledDataset select(const std::vector<std::size_t>& rows) const;
};

enum class DataFormat { Csv, Idx };

DataFormat parse_format(const std::string& s);

// CSV: header row, first column integer label, remaining columns features.
// IDX: pass the images file path; the labels file is expected alongside with
// the conventional naming (images -> labels). Pixel bytes are scaled to [0,1].
LabeledDataset load_dataset(const std::string& path, DataFormat format);
LabeledDataset load_csv_dataset(const std::string& path);
LabeledDataset load_idx_dataset(const std::string& images_path,
                                const std::string& labels_path);

// Guess the labels path that pairs with an IDX images path
// ("...-images-idx3-ubyte" -> "...-labels-idx1-ubyte").
std::string idx_labels_path_for(const std::string& images_path);

// Random disjoint partition into (ceil(ratio*N), remainder); seeded.
std::pair<LabeledDataset, LabeledDataset>
split_train_val(const LabeledDataset& dataset, double ratio, std::uint64_t seed);

// floor(n/C) samples per class, remainder going to the lowest class ids; seeded.
LabeledDataset balanced_subsample(const LabeledDataset& dataset, std::size_t n,
                                  std::uint64_t seed);

// Uniform subsample without replacement, clamped to availability; seeded.
LabeledDataset random_subsample(const LabeledDataset& dataset, std::size_t n,
                                std::uint64_t seed);

} // namespace ood

#endif
