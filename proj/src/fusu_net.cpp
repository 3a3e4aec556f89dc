#include "fusu/fusu_net.hpp"

#include "fusu/tensor_ops.hpp"

namespace fusu {

void FusuNetConfig::validate() const {
    check(num_classes >= 2 && num_classes <= kNumClasses, "model: class count must lie in 2..18");
    backbone.validate();
    head.validate();
    if (use_series) {
        temporal.validate();
        fusion.validate();
    }
}

FusuNetConfig FusuNetConfig::micro() {
    FusuNetConfig c;
    c.backbone.stage_widths = {8, 8};
    c.backbone.output_stride = 4;
    c.backbone.exchange_units = 1;
    c.backbone.out_channels = 8;
    c.head.channels = 8;
    c.head.aspp_rates = {1, 2};
    c.head.pyramid_bins = {1, 2};
    c.temporal.in_channels = 4;
    c.temporal.widths = {4, 4};
    c.temporal.attention_heads = 2;
    c.temporal.key_dim = 2;
    c.temporal.out_channels = 4;
    c.fusion.bottleneck_channels = 4;
    c.fusion.dilation = 2;
    c.fusion.context_depth = 2;
    return c;
}

void FusuNetConfig::write(KeyValueText& kv, const std::string& p) const {
    kv.set(p + "num_classes", num_classes);
    kv.set(p + "use_series", use_series);
    kv.set(p + "backbone.widths", backbone.stage_widths);
    kv.set(p + "backbone.output_stride", backbone.output_stride);
    kv.set(p + "backbone.exchange_units", backbone.exchange_units);
    kv.set(p + "backbone.out_channels", backbone.out_channels);
    kv.set(p + "head.channels", head.channels);
    kv.set(p + "head.aspp_rates", head.aspp_rates);
    kv.set(p + "head.pyramid_bins", head.pyramid_bins);
    kv.set(p + "temporal.in_channels", temporal.in_channels);
    kv.set(p + "temporal.out_channels", temporal.out_channels);
    kv.set(p + "temporal.widths", temporal.widths);
    kv.set(p + "temporal.heads", temporal.attention_heads);
    kv.set(p + "temporal.key_dim", temporal.key_dim);
    kv.set(p + "temporal.time_embedding", temporal.time_embedding);
    kv.set(p + "temporal.pre_upsample_to", temporal.pre_upsample_to);
    kv.set(p + "fusion.bottleneck_channels", fusion.bottleneck_channels);
    kv.set(p + "fusion.dilation", fusion.dilation);
    kv.set(p + "fusion.context_depth", fusion.context_depth);
    kv.set(p + "fusion.bias", fusion.bias);
}

FusuNetConfig FusuNetConfig::read(const KeyValueText& kv, const std::string& p) {
    FusuNetConfig c;
    auto get_int = [&](const std::string& key, int& field) {
        if (kv.contains(p + key)) {
            field = static_cast<int>(kv.get_int(p + key));
        }
    };
    auto get_bool = [&](const std::string& key, bool& field) {
        if (kv.contains(p + key)) {
            field = kv.get_bool(p + key);
        }
    };
    auto get_list = [&](const std::string& key, std::vector<int>& field) {
        if (kv.contains(p + key)) {
            field = kv.get_int_list(p + key);
        }
    };
    get_int("num_classes", c.num_classes);
    get_bool("use_series", c.use_series);
    get_list("backbone.widths", c.backbone.stage_widths);
    get_int("backbone.output_stride", c.backbone.output_stride);
    get_int("backbone.exchange_units", c.backbone.exchange_units);
    get_int("backbone.out_channels", c.backbone.out_channels);
    get_int("head.channels", c.head.channels);
    get_list("head.aspp_rates", c.head.aspp_rates);
    get_list("head.pyramid_bins", c.head.pyramid_bins);
    get_int("temporal.in_channels", c.temporal.in_channels);
    get_int("temporal.out_channels", c.temporal.out_channels);
    get_list("temporal.widths", c.temporal.widths);
    get_int("temporal.heads", c.temporal.attention_heads);
    get_int("temporal.key_dim", c.temporal.key_dim);
    get_bool("temporal.time_embedding", c.temporal.time_embedding);
    get_int("temporal.pre_upsample_to", c.temporal.pre_upsample_to);
    get_int("fusion.bottleneck_channels", c.fusion.bottleneck_channels);
    get_int("fusion.dilation", c.fusion.dilation);
    get_int("fusion.context_depth", c.fusion.context_depth);
    get_bool("fusion.bias", c.fusion.bias);
    return c;
}

FusuNetImpl::FusuNetImpl(FusuNetConfig config) : config_(std::move(config)) {
    config_.fusion.series_channels = config_.temporal.out_channels;
    config_.fusion.target_channels = config_.backbone.out_channels;
    config_.validate();

    backbone = register_module("backbone", bitemporal::Backbone(config_.backbone));
    seg_head_t1 = register_module(
        "seg_head_t1", bitemporal::SegmentHead(config_.backbone.out_channels, config_.num_classes, config_.head));
    seg_head_t2 = register_module(
        "seg_head_t2", bitemporal::SegmentHead(config_.backbone.out_channels, config_.num_classes, config_.head));
    change_head = register_module("change_head", bitemporal::ChangeHead(config_.head.channels, config_.head));
    if (config_.use_series) {
        temporal = register_module("temporal", temporal::TemporalEncoder(config_.temporal));
        series_head = register_module("series_head",
                                      temporal::SeriesHead(config_.temporal.out_channels, config_.num_classes));
        fusion = register_module("fusion", fusion::Fusion(config_.fusion));
    }
}

ModelOutputs FusuNetImpl::forward(const ModelInputs& in) {
    check(in.t1.defined() && in.t2.defined(), "model: both high-res images are required");
    check(in.t1.sizes() == in.t2.sizes(), "model: T1 and T2 image shapes differ: " + shape_str(in.t1) +
                                              " vs " + shape_str(in.t2));
    const int64_t rows = in.t1.size(2);
    const int64_t cols = in.t1.size(3);

    // One backbone pass over both dates keeps the weights shared by construction.
    const int64_t b = in.t1.size(0);
    auto hr = backbone->forward(torch::cat({in.t1, in.t2}, 0)).high_res;
    auto hr_t1 = hr.narrow(0, 0, b);
    auto hr_t2 = hr.narrow(0, b, b);

    ModelOutputs out;
    torch::Tensor series_term;
    if (config_.use_series) {
        check(in.series.defined(), "model: the series branch needs a time-series stack");
        check(in.series.size(0) == b, "model: series batch size differs from image batch size");
        auto encoded = temporal->forward(in.series, in.months, in.mask);
        out.seg_series = series_head->forward(encoded.feature);
        series_term = fusion->contribution(encoded.feature, in.alignment, hr_t1.size(2), hr_t1.size(3));
    }

    auto seg1 = seg_head_t1->forward(hr_t1, series_term, rows, cols);
    auto seg2 = seg_head_t2->forward(hr_t2, series_term, rows, cols);
    out.seg_t1 = seg1.logits;
    out.seg_t2 = seg2.logits;
    out.seg_feat_t1 = seg1.features;
    out.seg_feat_t2 = seg2.features;
    out.change = change_head->forward(seg1.features, seg2.features, rows, cols);
    return out;
}

ModelInputs make_inputs(const std::vector<const PatchSample*>& samples, int frame_count) {
    check(!samples.empty(), "make_inputs: empty batch");
    std::vector<torch::Tensor> t1, t2, series, months;
    ModelInputs in;
    for (const auto* s : samples) {
        t1.push_back(to_tensor(s->t1));
        t2.push_back(to_tensor(s->t2));
        in.alignment.push_back(s->alignment);
        if (frame_count != 0) {
            const int64_t frames = s->series.frames;
            const int64_t keep = frame_count < 0 ? frames : frame_count;
            check(keep <= frames, "make_inputs: requested " + std::to_string(keep) + " frames but sample " + s->id +
                                      " has " + std::to_string(frames));
            series.push_back(to_tensor(s->series).narrow(0, 0, keep));
            months.push_back(months_tensor(s->series).narrow(0, 0, keep));
        }
    }
    in.t1 = torch::stack(t1);
    in.t2 = torch::stack(t2);
    if (!series.empty()) {
        in.series = torch::stack(series);
        in.months = torch::stack(months);
    }
    return in;
}

std::map<std::string, torch::Tensor> state_of(const torch::nn::Module& module) {
    std::map<std::string, torch::Tensor> state;
    for (const auto& item : module.named_parameters(/*recurse=*/true)) {
        state[item.key()] = item.value();
    }
    for (const auto& item : module.named_buffers(/*recurse=*/true)) {
        state[item.key()] = item.value();
    }
    return state;
}

std::vector<std::string> load_state(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& state,
                                    bool allow_partial) {
    torch::NoGradGuard no_grad;
    auto own = state_of(module);
    std::vector<std::string> loaded;
    for (const auto& [name, value] : state) {
        const auto it = own.find(name);
        if (it == own.end()) {
            check(allow_partial, "load_state: unknown tensor '" + name + "'");
            continue;
        }
        if (it->second.sizes() != value.sizes()) {
            check(allow_partial, "load_state: shape mismatch for '" + name + "': " + shape_str(value) +
                                     " vs " + shape_str(it->second));
            continue;
        }
        it->second.copy_(value);
        loaded.push_back(name);
    }
    if (!allow_partial) {
        check(loaded.size() == own.size(), "load_state: " + std::to_string(own.size() - loaded.size()) +
                                               " model tensors missing from the state");
    }
    return loaded;
}

}  // namespace fusu
