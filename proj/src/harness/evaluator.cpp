#include "fusu/harness/evaluator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fusu/harness/batching.hpp"
#include "fusu/harness/dataset_tools.hpp"
#include "fusu/tensor_ops.hpp"

namespace fusu::harness {

namespace {

double mean_or_nan(const metrics::ConfusionMatrix& cm) {
    try {
        return metrics::mean_iou(cm);
    } catch (const std::domain_error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

double EvalReport::miou_seg() const { return mean_or_nan(seg); }
double EvalReport::miou_scd() const { return mean_or_nan(scd); }

std::string protocol_tag(const std::string& train_region, const std::string& eval_region) {
    if (!train_region.empty() && eval_region != train_region) {
        return "inter-dataset";
    }
    return "intra-dataset";
}

EvalReport score(const std::vector<Prediction>& predictions, const std::vector<PatchSample>& truth, int num_classes,
                 const EvalOptions& options) {
    check(predictions.size() == truth.size(), "score: prediction and ground-truth counts differ");
    EvalReport r;
    r.part = options.part;
    r.changed_pixels_only = options.changed_pixels_only;
    r.change_threshold = options.change_threshold;
    r.seg = metrics::ConfusionMatrix(num_classes);
    r.scd = metrics::ConfusionMatrix(num_classes);
    r.samples = truth.size();
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& p = predictions[i];
        const auto& t = truth[i];
        check(p.id == t.id, "score: prediction '" + p.id + "' does not match sample '" + t.id + "'");
        const auto gt_change = derive_change_label(t.y1, t.y2);
        r.seg.accumulate(p.seg_t1, t.y1);
        if (options.changed_pixels_only) {
            LabelMap g1 = t.y1;
            LabelMap g2 = t.y2;
            for (std::size_t k = 0; k < gt_change.size(); ++k) {
                if (gt_change.values[k] == 0) {
                    g1.values[k] = static_cast<std::uint8_t>(kIgnoreLabel);
                    g2.values[k] = static_cast<std::uint8_t>(kIgnoreLabel);
                }
            }
            r.scd.accumulate(p.seg_t1, g1);
            r.scd.accumulate(p.seg_t2, g2);
        } else {
            r.scd.accumulate(p.seg_t1, t.y1);
            r.scd.accumulate(p.seg_t2, t.y2);
        }
        r.bcd.accumulate(p.change, gt_change);
    }
    return r;
}

std::vector<Prediction> predict(FusuNet& model, const std::filesystem::path& root, const std::vector<std::string>& ids,
                                int frame_count, const EvalOptions& options) {
    check(options.batch_size >= 1, "predict: batch size must be positive");
    torch::NoGradGuard no_grad;
    model->eval();
    std::vector<Prediction> out;
    for (std::size_t start = 0; start < ids.size(); start += static_cast<std::size_t>(options.batch_size)) {
        const auto end = std::min(ids.size(), start + static_cast<std::size_t>(options.batch_size));
        const std::vector<std::string> chunk(ids.begin() + static_cast<std::ptrdiff_t>(start),
                                             ids.begin() + static_cast<std::ptrdiff_t>(end));
        auto batch = load_batch(root, chunk, frame_count);
        auto res = model->forward(batch.inputs);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            const auto b = static_cast<int64_t>(i);
            Prediction p;
            p.id = chunk[i];
            p.seg_t1 = labels_from_logits(res.seg_t1[b]);
            p.seg_t2 = labels_from_logits(res.seg_t2[b]);
            auto logit = res.change[b][0].contiguous();
            p.change = metrics::threshold_change({logit.data_ptr<float>(), static_cast<std::size_t>(logit.numel())},
                                                 static_cast<int>(logit.size(0)), static_cast<int>(logit.size(1)),
                                                 options.change_threshold);
            out.push_back(std::move(p));
        }
    }
    model->train();
    return out;
}

RunConfig config_from_checkpoint(const Checkpoint& ckpt) {
    KeyValueText kv;
    const std::string prefix = "config.";
    for (const auto& key : ckpt.header.keys()) {
        if (key.rfind(prefix, 0) == 0) {
            kv.set(key.substr(prefix.size()), ckpt.header.get(key));
        }
    }
    return RunConfig::read(kv);
}

FusuNet model_from_checkpoint(const Checkpoint& ckpt) {
    const auto config = config_from_checkpoint(ckpt);
    FusuNet model(config.model);
    load_state(*model, ckpt.with_prefix("model/"));
    return model;
}

EvalRun evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::filesystem::path& root,
                            const std::string& split, const EvalOptions& options) {
    const auto ckpt = load_checkpoint(checkpoint);
    const auto config = config_from_checkpoint(ckpt);
    const int num_classes = config.model.num_classes;
    if (const auto ds = dataset_num_classes(root); ds && *ds != num_classes) {
        throw std::invalid_argument("eval: checkpoint predicts " + std::to_string(num_classes) +
                                    " classes but the dataset at " + root.string() + " has " + std::to_string(*ds));
    }
    const auto manifest = read_manifest(root, split);
    const auto& ids = manifest.part(options.part);
    if (ids.empty()) {
        throw std::invalid_argument("eval: split '" + split + "' has no " + options.part + " samples");
    }

    auto model = model_from_checkpoint(ckpt);
    EvalRun run;
    run.predictions = predict(model, root, ids, config.time_series_count, options);
    std::vector<PatchSample> truth;
    for (const auto& id : ids) {
        truth.push_back(read_patch(root, id));
    }
    run.report = score(run.predictions, truth, num_classes, options);
    run.report.split = split;
    run.report.train_region = ckpt.header.find("train_region").value_or("");
    run.report.eval_region = manifest.region_filter;
    run.report.protocol = protocol_tag(run.report.train_region, run.report.eval_region);
    return run;
}

}  // namespace fusu::harness
