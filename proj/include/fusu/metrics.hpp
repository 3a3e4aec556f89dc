#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fusu/class_system.hpp"
#include "fusu/dataset.hpp"

namespace fusu::metrics {

/// K x K pixel counts, rows = ground truth, columns = prediction. Pixels whose ground truth
/// equals the ignore label are never counted. Matrices over disjoint pixel sets merge by
/// addition.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes = kNumClasses, int ignore_label = kIgnoreLabel);

    /// Builds a matrix from row-major counts; used for hand-made fixtures.
    static ConfusionMatrix from_counts(int num_classes, std::vector<std::uint64_t> counts,
                                       int ignore_label = kIgnoreLabel);

    void accumulate(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);
    void accumulate(const LabelMap& pred, const LabelMap& gt);

    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) { return a += b; }
    bool operator==(const ConfusionMatrix&) const = default;

    std::uint64_t at(int gt, int pred) const {
        return counts_[static_cast<std::size_t>(gt) * num_classes_ + pred];
    }
    std::uint64_t total() const;
    int num_classes() const { return num_classes_; }
    int ignore_label() const { return ignore_label_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }

private:
    int num_classes_;
    int ignore_label_;
    std::vector<std::uint64_t> counts_;
};

/// IoU = TP / (TP + FP + FN) for every class except the ignore label, in label order.
/// Classes absent from both prediction and ground truth are nullopt.
std::vector<std::optional<double>> iou_per_class(const ConfusionMatrix& cm);

/// Labels matching the entries of iou_per_class.
std::vector<int> evaluated_labels(const ConfusionMatrix& cm);

/// Mean over the defined per-class IoUs. Throws std::domain_error if none is defined.
double mean_iou(const ConfusionMatrix& cm);

/// Mergeable counts for the changed class of a binary change map.
struct BinaryChangeCounts {
    std::uint64_t intersection = 0;  // pred and gt both changed
    std::uint64_t union_ = 0;        // pred or gt changed

    void accumulate(const ChangeLabel& pred, const ChangeLabel& gt);
    BinaryChangeCounts& operator+=(const BinaryChangeCounts& o) {
        intersection += o.intersection;
        union_ += o.union_;
        return *this;
    }
    bool operator==(const BinaryChangeCounts&) const = default;

    /// 1.0 when both masks are empty.
    double iou() const;
};

double binary_change_iou(const ChangeLabel& pred, const ChangeLabel& gt);

/// Changed where sigmoid(logit) > probability_threshold.
ChangeLabel threshold_change(std::span<const float> logits, int height, int width,
                             double probability_threshold = 0.5);

}  // namespace fusu::metrics
