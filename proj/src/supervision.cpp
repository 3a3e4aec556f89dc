#include "fusu/supervision.hpp"

#include "fusu/tensor_ops.hpp"

namespace fusu::supervision {

torch::Tensor seg_loss(const torch::Tensor& logits_in, const torch::Tensor& target_in, int ignore_label,
                       const std::vector<double>& class_weights, bool* all_ignored) {
    auto logits = logits_in.dim() == 3 ? logits_in.unsqueeze(0) : logits_in;
    auto target = target_in.dim() == 2 ? target_in.unsqueeze(0) : target_in;
    check(logits.dim() == 4 && target.dim() == 3, "seg_loss: expected N x K x H x W logits and N x H x W target");
    check(logits.size(0) == target.size(0) && logits.size(2) == target.size(1) && logits.size(3) == target.size(2),
          "seg_loss: logits " + shape_str(logits) + " and target " + shape_str(target) + " disagree");
    const int64_t k = logits.size(1);
    target = target.to(torch::kInt64);

    auto valid = target != ignore_label;
    if (all_ignored) {
        *all_ignored = false;
    }
    if (!valid.any().item<bool>()) {
        if (all_ignored) {
            *all_ignored = true;
        }
        return (logits * 0.0).sum();
    }
    check(((target >= 0) & (target < k)).all().item<bool>(), "seg_loss: target label outside 0..K-1");

    auto log_probs = torch::log_softmax(logits, 1);
    auto picked = log_probs.gather(1, target.unsqueeze(1)).squeeze(1);  // N H W
    auto validf = valid.to(logits.dtype());
    if (class_weights.empty()) {
        return -(picked * validf).sum() / validf.sum();
    }
    check(static_cast<int64_t>(class_weights.size()) == k, "seg_loss: need one class weight per class");
    auto w = torch::tensor(class_weights, logits.options()).index_select(0, target.flatten()).view_as(picked) * validf;
    return -(picked * w).sum() / w.sum();
}

torch::Tensor series_supervision_target(const torch::Tensor& series_logits,
                                        const std::vector<geo::AlignmentSpec>& specs, int64_t label_rows,
                                        int64_t label_cols) {
    auto logits = series_logits.dim() == 3 ? series_logits.unsqueeze(0) : series_logits;
    check(logits.dim() == 4, "series_supervision_target: expected N x K x h x w, got " + shape_str(series_logits));
    const int64_t n = logits.size(0);
    check(specs.size() == 1 || static_cast<int64_t>(specs.size()) == n,
          "series_supervision_target: need one alignment spec per sample or one shared spec");
    std::vector<torch::Tensor> parts;
    for (int64_t i = 0; i < n; ++i) {
        const auto& spec = specs[specs.size() == 1 ? 0 : static_cast<std::size_t>(i)];
        const auto win = geo::center_crop_window(spec, static_cast<int>(logits.size(2)), static_cast<int>(logits.size(3)));
        parts.push_back(resize_bilinear(crop(logits.narrow(0, i, 1), win), label_rows, label_cols));
    }
    auto out = torch::cat(parts, 0);
    return series_logits.dim() == 3 ? out.squeeze(0) : out;
}

torch::Tensor change_loss(const torch::Tensor& change_logit, const torch::Tensor& target, const torch::Tensor& valid) {
    check(change_logit.numel() == target.numel(), "change_loss: logit " + shape_str(change_logit) +
                                                       " and target " + shape_str(target) + " disagree");
    auto logit = change_logit.reshape({-1});
    auto y = target.reshape({-1}).to(logit.dtype());
    auto per_pixel = torch::binary_cross_entropy_with_logits(logit, y, {}, {}, at::Reduction::None);
    if (!valid.defined()) {
        return per_pixel.mean();
    }
    check(valid.numel() == change_logit.numel(), "change_loss: valid mask size disagrees");
    auto v = valid.reshape({-1}).to(logit.dtype());
    const auto count = v.sum();
    if (count.item<double>() == 0.0) {
        return (logit * 0.0).sum();
    }
    return (per_pixel * v).sum() / count;
}

torch::Tensor weighted_total(const LossBreakdown& lb) {
    const auto& w = lb.weights;
    return lb.l1_seg * w.seg_t1 + lb.l2_seg * w.seg_t2 + lb.lT_seg * w.seg_series + lb.l_change * w.change;
}

LossBreakdown total_loss(const ModelOutputs& out, const torch::Tensor& y1, const torch::Tensor& y2,
                         const std::vector<geo::AlignmentSpec>& specs, const LossOptions& options) {
    LossBreakdown lb;
    lb.weights = options.weights;
    bool empty1 = false;
    bool empty2 = false;
    bool emptyT = false;
    lb.l1_seg = seg_loss(out.seg_t1, y1, options.ignore_label, options.class_weights, &empty1);
    lb.l2_seg = seg_loss(out.seg_t2, y2, options.ignore_label, options.class_weights, &empty2);
    if (out.seg_series.defined()) {
        auto aligned = series_supervision_target(out.seg_series, specs, y1.size(-2), y1.size(-1));
        lb.lT_seg = seg_loss(aligned, y1, options.ignore_label, options.class_weights, &emptyT);
    } else {
        lb.lT_seg = torch::zeros({}, out.seg_t1.options());
    }
    lb.empty_segmentation = empty1 || empty2 || emptyT;

    auto change_target = (y1 != y2);
    torch::Tensor valid;
    if (options.change_ignore_background) {
        valid = (y1 != options.ignore_label) & (y2 != options.ignore_label);
    }
    lb.l_change = change_loss(out.change, change_target, valid);

    lb.total = weighted_total(lb);
    return lb;
}

}  // namespace fusu::supervision
