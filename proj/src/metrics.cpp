#include "fusu/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fusu::metrics {

ConfusionMatrix::ConfusionMatrix(int num_classes, int ignore_label)
    : num_classes_(num_classes), ignore_label_(ignore_label),
      counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
    if (num_classes < 2) {
        throw std::invalid_argument("confusion matrix needs at least 2 classes");
    }
}

ConfusionMatrix ConfusionMatrix::from_counts(int num_classes, std::vector<std::uint64_t> counts,
                                             int ignore_label) {
    ConfusionMatrix cm(num_classes, ignore_label);
    if (counts.size() != cm.counts_.size()) {
        throw std::invalid_argument("confusion matrix counts must be K x K");
    }
    cm.counts_ = std::move(counts);
    return cm;
}

void ConfusionMatrix::accumulate(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
    if (pred.size() != gt.size()) {
        throw std::invalid_argument("accumulate: prediction and ground truth sizes differ");
    }
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const int g = gt[i];
        const int p = pred[i];
        if (g >= num_classes_ || p >= num_classes_) {
            throw std::invalid_argument("accumulate: label " + std::to_string(std::max(g, p)) +
                                        " out of range for " + std::to_string(num_classes_) + " classes");
        }
        if (g == ignore_label_) {
            continue;
        }
        ++counts_[static_cast<std::size_t>(g) * num_classes_ + p];
    }
}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& gt) {
    if (!pred.same_shape(gt)) {
        throw std::invalid_argument("accumulate: prediction and ground truth shapes differ");
    }
    accumulate(std::span<const std::uint8_t>(pred.values), std::span<const std::uint8_t>(gt.values));
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (other.num_classes_ != num_classes_ || other.ignore_label_ != ignore_label_) {
        throw std::invalid_argument("cannot merge confusion matrices of different layouts");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        counts_[i] += other.counts_[i];
    }
    return *this;
}

std::uint64_t ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::vector<int> evaluated_labels(const ConfusionMatrix& cm) {
    std::vector<int> labels;
    for (int c = 0; c < cm.num_classes(); ++c) {
        if (c != cm.ignore_label()) {
            labels.push_back(c);
        }
    }
    return labels;
}

std::vector<std::optional<double>> iou_per_class(const ConfusionMatrix& cm) {
    const int k = cm.num_classes();
    std::vector<std::optional<double>> out;
    for (const int c : evaluated_labels(cm)) {
        const std::uint64_t tp = cm.at(c, c);
        std::uint64_t row = 0;
        std::uint64_t col = 0;
        for (int j = 0; j < k; ++j) {
            row += cm.at(c, j);
            col += cm.at(j, c);
        }
        const std::uint64_t uni = row + col - tp;  // TP + FN + FP
        if (uni == 0) {
            out.emplace_back(std::nullopt);
        } else {
            out.emplace_back(static_cast<double>(tp) / static_cast<double>(uni));
        }
    }
    return out;
}

double mean_iou(const ConfusionMatrix& cm) {
    double sum = 0.0;
    int defined = 0;
    for (const auto& iou : iou_per_class(cm)) {
        if (iou) {
            sum += *iou;
            ++defined;
        }
    }
    if (defined == 0) {
        throw std::domain_error("mean_iou: no class has a defined IoU");
    }
    return sum / defined;
}

void BinaryChangeCounts::accumulate(const ChangeLabel& pred, const ChangeLabel& gt) {
    if (!pred.same_shape(gt)) {
        throw std::invalid_argument("binary change: prediction and ground truth shapes differ");
    }
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        const bool p = pred.values[i] != 0;
        const bool g = gt.values[i] != 0;
        intersection += static_cast<std::uint64_t>(p && g);
        union_ += static_cast<std::uint64_t>(p || g);
    }
}

double BinaryChangeCounts::iou() const {
    return union_ == 0 ? 1.0 : static_cast<double>(intersection) / static_cast<double>(union_);
}

double binary_change_iou(const ChangeLabel& pred, const ChangeLabel& gt) {
    BinaryChangeCounts counts;
    counts.accumulate(pred, gt);
    return counts.iou();
}

ChangeLabel threshold_change(std::span<const float> logits, int height, int width,
                             double probability_threshold) {
    if (logits.size() != static_cast<std::size_t>(height) * width) {
        throw std::invalid_argument("threshold_change: logit count does not match shape");
    }
    if (!(probability_threshold > 0.0 && probability_threshold < 1.0)) {
        throw std::invalid_argument("threshold_change: threshold must lie in (0, 1)");
    }
    const double logit_threshold = std::log(probability_threshold / (1.0 - probability_threshold));
    ChangeLabel out(height, width);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.values[i] = static_cast<std::uint8_t>(static_cast<double>(logits[i]) > logit_threshold);
    }
    return out;
}

}  // namespace fusu::metrics
