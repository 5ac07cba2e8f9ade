#ifndef OOD_KNN_HPP
#define OOD_KNN_HPP

#include <span>
#include <string>
#include <vector>

namespace ood {

// Exact Euclidean k-NN over reference logit vectors, immutable after build.
// N <= a few thousand in every experiment, so queries are linear scans.
class LogitIndex {
public:
    LogitIndex(std::vector<std::vector<double>> vectors, std::vector<int> labels);

    std::size_t size() const { return vectors_.size(); }
    int dim() const { return dim_; }
    int num_classes() const { return num_classes_; }
    const std::vector<std::vector<double>>& vectors() const { return vectors_; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<std::size_t>& class_rows(int class_c) const;

    // Distance to the k-th nearest reference row; ties broken by row order.
    // exclude_self skips at most one exact-match (distance 0) row.
    double kth_neighbor_distance(std::span<const double> query, int k,
                                 bool exclude_self) const;

    // Same, restricted to rows labeled class_c. Throws InsufficientClassSamples
    // if the class partition has fewer than k rows.
    double kth_neighbor_distance_in_class(std::span<const double> query, int k,
                                          int class_c) const;

    // CSV interchange: input_id, logit_0..logit_{K-1}, label.
    void save_csv(const std::string& path) const;
    static LogitIndex load_csv(const std::string& path);

private:
    std::vector<std::vector<double>> vectors_;
    std::vector<int> labels_;
    std::vector<std::vector<std::size_t>> by_class_;
    int dim_ = 0;
    int num_classes_ = 0;
};

LogitIndex build_index(std::vector<std::vector<double>> vectors, std::vector<int> labels);

} // namespace ood

#endif
