#include "fusu/bitemporal_net.hpp"

#include "fusu/tensor_ops.hpp"

namespace fusu::bitemporal {

namespace nn = torch::nn;

namespace {

nn::Conv2d conv(int64_t in, int64_t out, int64_t kernel, int64_t stride = 1, int64_t dilation = 1,
                bool bias = false) {
    return nn::Conv2d(nn::Conv2dOptions(in, out, kernel)
                          .stride(stride)
                          .padding(dilation * (kernel / 2))
                          .dilation(dilation)
                          .bias(bias));
}

nn::GroupNorm group_norm(int64_t channels) {
    return nn::GroupNorm(nn::GroupNormOptions(norm_groups(channels), channels));
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

void BackboneConfig::validate() const {
    check(!stage_widths.empty(), "backbone: at least one stream is required");
    for (const int w : stage_widths) {
        check(w > 0, "backbone: stream widths must be positive");
    }
    check(is_power_of_two(output_stride), "backbone: output stride must be a power of two");
    check(exchange_units >= 1, "backbone: at least one exchange unit is required");
    check(out_channels > 0, "backbone: out_channels must be positive");
}

void HeadConfig::validate() const {
    check(channels > 0, "head: channels must be positive");
    check(!aspp_rates.empty() && !pyramid_bins.empty(), "head: rates and bins must be non-empty");
    for (const int r : aspp_rates) {
        check(r >= 1, "head: dilation rates must be at least 1");
    }
    for (const int b : pyramid_bins) {
        check(b >= 1, "head: pyramid bins must be at least 1");
    }
}

// ---------------------------------------------------------------------------------------

BasicBlockImpl::BasicBlockImpl(int64_t channels)
    : conv1(register_module("conv1", conv(channels, channels, 3))),
      norm1(register_module("norm1", group_norm(channels))),
      conv2(register_module("conv2", conv(channels, channels, 3))),
      norm2(register_module("norm2", group_norm(channels))) {}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
    auto y = torch::relu(norm1(conv1(x)));
    return torch::relu(norm2(conv2(y)) + x);
}

// ---------------------------------------------------------------------------------------

BackboneImpl::BackboneImpl(BackboneConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto& w = config_.stage_widths;
    const auto streams = static_cast<std::size_t>(config_.num_streams());

    stem = register_module("stem", nn::Sequential());
    if (config_.output_stride == 1) {
        stem->push_back(conv(3, w[0], 3));
        stem->push_back(group_norm(w[0]));
        stem->push_back(nn::ReLU());
    }
    for (int s = 1; s < config_.output_stride; s *= 2) {
        stem->push_back(conv(s == 1 ? 3 : w[0], w[0], 3, 2));
        stem->push_back(group_norm(w[0]));
        stem->push_back(nn::ReLU());
    }

    transitions = register_module("transitions", nn::ModuleList());
    for (std::size_t s = 1; s < streams; ++s) {
        transitions->push_back(nn::Sequential(conv(w[s - 1], w[s], 3, 2), group_norm(w[s]), nn::ReLU()));
    }

    blocks = register_module("blocks", nn::ModuleList());
    exchanges = register_module("exchanges", nn::ModuleList());
    for (int unit = 0; unit < config_.exchange_units; ++unit) {
        for (std::size_t s = 0; s < streams; ++s) {
            blocks->push_back(BasicBlock(w[s]));
        }
        for (std::size_t dst = 0; dst < streams; ++dst) {
            for (std::size_t src = 0; src < streams; ++src) {
                if (src == dst) {
                    exchanges->push_back(nn::Identity());
                } else if (src > dst) {
                    // Channel match now, upsample in forward.
                    exchanges->push_back(nn::Sequential(conv(w[src], w[dst], 1), group_norm(w[dst])));
                } else {
                    nn::Sequential down;
                    for (std::size_t k = src; k < dst; ++k) {
                        const bool last = k + 1 == dst;
                        down->push_back(conv(w[src], last ? w[dst] : w[src], 3, 2));
                        down->push_back(group_norm(last ? w[dst] : w[src]));
                        if (!last) {
                            down->push_back(nn::ReLU());
                        }
                    }
                    exchanges->push_back(down);
                }
            }
        }
    }

    int64_t total = 0;
    for (const int width : w) {
        total += width;
    }
    representation = register_module(
        "representation",
        nn::Sequential(conv(total, config_.out_channels, 1), group_norm(config_.out_channels), nn::ReLU()));
    init_he(*this);
}

torch::Tensor BackboneImpl::exchange(std::size_t unit, std::vector<torch::Tensor>& xs) {
    const std::size_t streams = xs.size();
    std::vector<torch::Tensor> out(streams);
    for (std::size_t dst = 0; dst < streams; ++dst) {
        torch::Tensor sum;
        for (std::size_t src = 0; src < streams; ++src) {
            const auto idx = (unit * streams + dst) * streams + src;
            torch::Tensor y;
            if (src == dst) {
                y = xs[src];
            } else {
                y = exchanges[idx]->as<nn::SequentialImpl>()->forward(xs[src]);
                if (src > dst) {
                    y = resize_bilinear(y, xs[dst].size(2), xs[dst].size(3));
                }
            }
            sum = sum.defined() ? sum + y : y;
        }
        out[dst] = torch::relu(sum);
    }
    xs = std::move(out);
    return xs.front();
}

MultiScaleFeatures BackboneImpl::forward(const torch::Tensor& image) {
    check(image.dim() == 4, "backbone: expected N x 3 x H x W, got " + shape_str(image));
    check(image.size(1) == 3, "backbone: expected 3 bands, got " + std::to_string(image.size(1)));
    check(image.size(2) % config_.output_stride == 0 && image.size(3) % config_.output_stride == 0,
          "backbone: input size " + shape_str(image) + " is not divisible by output stride " +
              std::to_string(config_.output_stride));

    const auto streams = static_cast<std::size_t>(config_.num_streams());
    std::vector<torch::Tensor> xs;
    xs.push_back(stem->forward(image));
    for (std::size_t s = 1; s < streams; ++s) {
        xs.push_back(transitions[s - 1]->as<nn::SequentialImpl>()->forward(xs.back()));
    }
    for (std::size_t unit = 0; unit < static_cast<std::size_t>(config_.exchange_units); ++unit) {
        for (std::size_t s = 0; s < streams; ++s) {
            xs[s] = blocks[unit * streams + s]->as<BasicBlockImpl>()->forward(xs[s]);
        }
        exchange(unit, xs);
    }

    std::vector<torch::Tensor> upsampled;
    for (const auto& x : xs) {
        upsampled.push_back(resize_bilinear(x, xs[0].size(2), xs[0].size(3)));
    }
    MultiScaleFeatures out;
    out.high_res = representation->forward(torch::cat(upsampled, 1));
    out.streams = std::move(xs);
    return out;
}

// ---------------------------------------------------------------------------------------

SegmentHeadImpl::SegmentHeadImpl(int64_t in_channels, int64_t num_classes, HeadConfig config)
    : config_(std::move(config)) {
    config_.validate();
    const int64_t ch = config_.channels;
    branches = register_module("branches", nn::ModuleList());
    for (const int rate : config_.aspp_rates) {
        if (rate == 1) {
            branches->push_back(nn::Sequential(conv(in_channels, ch, 1), group_norm(ch), nn::ReLU()));
        } else {
            branches->push_back(nn::Sequential(conv(in_channels, ch, 3, 1, rate), group_norm(ch), nn::ReLU()));
        }
    }
    image_pool = register_module(
        "image_pool", nn::Sequential(nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions(1)),
                                     conv(in_channels, ch, 1), nn::ReLU()));
    const auto concat = static_cast<int64_t>(config_.aspp_rates.size() + 1) * ch;
    project = register_module("project", nn::Sequential(conv(concat, ch, 1), group_norm(ch), nn::ReLU(),
                                                        conv(ch, ch, 3), group_norm(ch), nn::ReLU()));
    classifier = register_module("classifier", conv(ch, num_classes, 1, 1, 1, /*bias=*/true));
    init_he(*this);
}

SegmentHeadImpl::Output SegmentHeadImpl::forward(const torch::Tensor& features, const torch::Tensor& series,
                                                 int64_t label_rows, int64_t label_cols) {
    check(features.dim() == 4, "segment head: expected N x C x h x w, got " + shape_str(features));
    auto x = features;
    if (series.defined()) {
        check(series.sizes() == features.sizes(), "segment head: fused series shape " + shape_str(series) +
                                                       " differs from feature shape " + shape_str(features));
        x = x + series;
    }
    std::vector<torch::Tensor> parts;
    for (const auto& branch : *branches) {
        parts.push_back(branch->as<nn::SequentialImpl>()->forward(x));
    }
    parts.push_back(image_pool->forward(x).expand({-1, -1, x.size(2), x.size(3)}));
    auto feats = project->forward(torch::cat(parts, 1));
    auto logits = resize_bilinear(classifier(feats), label_rows, label_cols);
    return {feats, logits};
}

// ---------------------------------------------------------------------------------------

ChangeHeadImpl::ChangeHeadImpl(int64_t channels, HeadConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto bins = static_cast<int64_t>(config_.pyramid_bins.size());
    const int64_t reduced = std::max<int64_t>(1, channels / bins);
    pools = register_module("pools", nn::ModuleList());
    for (const int bin : config_.pyramid_bins) {
        pools->push_back(nn::Sequential(nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions(bin)),
                                        conv(channels, reduced, 1), nn::ReLU()));
    }
    bottleneck = register_module("bottleneck", nn::Sequential(conv(channels + bins * reduced, channels, 3),
                                                              group_norm(channels), nn::ReLU()));
    classifier = register_module("classifier", conv(channels, 1, 1, 1, 1, /*bias=*/true));
    init_he(*this);
}

torch::Tensor ChangeHeadImpl::forward(const torch::Tensor& seg_feat_t1, const torch::Tensor& seg_feat_t2,
                                      int64_t label_rows, int64_t label_cols) {
    check(seg_feat_t1.sizes() == seg_feat_t2.sizes(), "change head: feature shapes differ: " +
                                                          shape_str(seg_feat_t1) + " vs " + shape_str(seg_feat_t2));
    return from_difference(seg_feat_t1 - seg_feat_t2, label_rows, label_cols);
}

torch::Tensor ChangeHeadImpl::from_difference(const torch::Tensor& diff, int64_t label_rows, int64_t label_cols) {
    check(diff.dim() == 4, "change head: expected N x C x h x w, got " + shape_str(diff));
    std::vector<torch::Tensor> parts{diff};
    for (const auto& pool : *pools) {
        parts.push_back(resize_bilinear(pool->as<nn::SequentialImpl>()->forward(diff), diff.size(2), diff.size(3)));
    }
    auto logit = classifier(bottleneck->forward(torch::cat(parts, 1)));
    return resize_bilinear(logit, label_rows, label_cols);
}

}  // namespace fusu::bitemporal
