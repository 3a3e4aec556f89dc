#pragma once

#include <vector>

#include <torch/torch.h>

#include "fusu/class_system.hpp"
#include "fusu/fusu_net.hpp"
#include "fusu/geo_align.hpp"

namespace fusu::supervision {

/// Loss weights (w1, w2, wT, wc); the change term counts double by default.
struct LossWeights {
    double seg_t1 = 1.0;
    double seg_t2 = 1.0;
    double seg_series = 1.0;
    double change = 2.0;
};

struct LossOptions {
    LossWeights weights;
    int ignore_label = kIgnoreLabel;
    /// Per-class cross-entropy weights (one per class); empty for unweighted.
    std::vector<double> class_weights;
    /// Drop pixels where either date is background from the change loss.
    bool change_ignore_background = false;
};

/// The four terms and their weighted sum. Tensors are 0-d and carry gradients.
struct LossBreakdown {
    torch::Tensor l1_seg;
    torch::Tensor l2_seg;
    torch::Tensor lT_seg;
    torch::Tensor l_change;
    torch::Tensor total;
    LossWeights weights;
    /// Set when a segmentation term had no non-ignored pixel and was defined as 0.
    bool empty_segmentation = false;

    double value(const torch::Tensor& t) const { return t.item<double>(); }
};

/// Mean cross-entropy over pixels whose target differs from the ignore label.
/// `logits`: N x K x H x W (or K x H x W); `target`: N x H x W (or H x W) integer labels.
/// With class weights the mean is weighted (sum of w[y] * ce / sum of w[y]).
/// Returns 0 and sets `all_ignored` when every pixel is ignored.
torch::Tensor seg_loss(const torch::Tensor& logits, const torch::Tensor& target, int ignore_label = kIgnoreLabel,
                       const std::vector<double>& class_weights = {}, bool* all_ignored = nullptr);

/// Crops the series logits to the high-res footprint and upsamples them to the label grid.
torch::Tensor series_supervision_target(const torch::Tensor& series_logits,
                                        const std::vector<geo::AlignmentSpec>& specs, int64_t label_rows,
                                        int64_t label_cols);

/// Mean binary cross-entropy with sigmoid semantics. `change_logit`: N x 1 x H x W (or H x W
/// compatible); `target`: same element count, values in {0, 1}. `valid`, when defined,
/// selects the pixels that count.
torch::Tensor change_loss(const torch::Tensor& change_logit, const torch::Tensor& target,
                          const torch::Tensor& valid = {});

/// w1*l1 + w2*l2 + wT*lT + wc*lc, summed in that order.
torch::Tensor weighted_total(const LossBreakdown& breakdown);

/// y1, y2: N x H x W integer label tensors. The change target is derived from them; the
/// series term is supervised with y1. Without a series prediction lT is 0.
LossBreakdown total_loss(const ModelOutputs& outputs, const torch::Tensor& y1, const torch::Tensor& y2,
                         const std::vector<geo::AlignmentSpec>& specs, const LossOptions& options = {});

}  // namespace fusu::supervision
