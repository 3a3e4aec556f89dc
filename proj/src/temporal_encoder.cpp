#include "fusu/temporal_encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "fusu/tensor_ops.hpp"

namespace fusu::temporal {

namespace nn = torch::nn;

namespace {

nn::Sequential conv_norm_relu(int64_t in, int64_t out, int64_t kernel, int64_t stride = 1) {
    return nn::Sequential(
        nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(kernel / 2).bias(false)),
        nn::GroupNorm(nn::GroupNormOptions(norm_groups(out), out)), nn::ReLU());
}

/// Broadcasts a per-sample T vector (or shared T vector) to B x T.
torch::Tensor per_sample(const torch::Tensor& t, int64_t batch, int64_t frames, const char* what) {
    auto out = t.dim() == 1 ? t.unsqueeze(0).expand({batch, frames}) : t;
    check(out.dim() == 2 && out.size(0) == batch && out.size(1) == frames,
          std::string("temporal encoder: ") + what + " must be T or B x T, got " + shape_str(t));
    return out;
}

}  // namespace

void TemporalEncoderConfig::validate() const {
    check(in_channels > 0 && out_channels > 0, "temporal encoder: channel counts must be positive");
    check(depth() >= 2, "temporal encoder: depth must be at least 2");
    check(attention_heads > 0 && key_dim > 0, "temporal encoder: heads and key dim must be positive");
    for (const int w : widths) {
        check(w > 0 && w % attention_heads == 0,
              "temporal encoder: every level width must be a positive multiple of the head count");
    }
    check(pre_upsample_to >= 0, "temporal encoder: pre_upsample_to must be non-negative");
}

torch::Tensor month_encoding(const torch::Tensor& months, int64_t dims) {
    auto opts = months.options();
    auto j = torch::arange(dims, opts);
    auto exponent = torch::floor(j / 2.0) * 2.0 / static_cast<double>(dims);
    auto inv_freq = torch::pow(torch::full({dims}, 1000.0, opts), -exponent);
    auto angles = months.unsqueeze(-1) * inv_freq;
    auto even = (torch::remainder(j, 2) == 0);
    return torch::where(even, torch::sin(angles), torch::cos(angles));
}

// ---------------------------------------------------------------------------------------

ConvBlockImpl::ConvBlockImpl(int64_t in_channels, int64_t out_channels, int64_t stride)
    : conv1(register_module("conv1", nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 3)
                                                    .stride(stride)
                                                    .padding(1)
                                                    .bias(false)))),
      norm1(register_module("norm1", nn::GroupNorm(nn::GroupNormOptions(norm_groups(out_channels), out_channels)))),
      conv2(register_module("conv2",
                            nn::Conv2d(nn::Conv2dOptions(out_channels, out_channels, 3).padding(1).bias(false)))),
      norm2(register_module("norm2", nn::GroupNorm(nn::GroupNormOptions(norm_groups(out_channels), out_channels)))) {}

torch::Tensor ConvBlockImpl::forward(const torch::Tensor& x) {
    auto y = torch::relu(norm1(conv1(x)));
    return torch::relu(norm2(conv2(y)));
}

// ---------------------------------------------------------------------------------------

TemporalAttentionImpl::TemporalAttentionImpl(int64_t channels, int64_t heads, int64_t key_dim,
                                             bool time_embedding)
    : channels_(channels), heads_(heads), key_dim_(key_dim), time_embedding_(time_embedding) {
    check(channels % heads == 0, "temporal attention: channels must divide into heads");
    in_norm = register_module("in_norm", nn::LayerNorm(nn::LayerNormOptions({channels})));
    in_proj = register_module("in_proj", nn::Linear(channels, channels));
    key_proj = register_module("key_proj", nn::Linear(channels, heads * key_dim));
    query = register_parameter("query", torch::randn({heads, key_dim}) * std::sqrt(2.0 / key_dim));
    out_proj = register_module("out_proj", nn::Linear(channels, channels));
    out_norm = register_module("out_norm", nn::LayerNorm(nn::LayerNormOptions({channels})));
}

TemporalAttentionImpl::Result TemporalAttentionImpl::forward(const torch::Tensor& sequence,
                                                             const torch::Tensor& months,
                                                             const torch::Tensor& mask) {
    const int64_t n = sequence.size(0);
    const int64_t t = sequence.size(1);
    auto x = in_proj(in_norm(sequence));
    if (time_embedding_) {
        x = x + month_encoding(months.to(x.dtype()), channels_);
    }

    auto keys = key_proj(x).view({n, t, heads_, key_dim_}).permute({2, 0, 1, 3});  // H N T dk
    auto scores = (keys * query.view({heads_, 1, 1, key_dim_})).sum(-1) / std::sqrt(static_cast<double>(key_dim_));
    scores = scores.masked_fill(mask.logical_not().unsqueeze(0), -std::numeric_limits<double>::infinity());
    auto weights = torch::softmax(scores, /*dim=*/2);  // H N T

    auto values = x.view({n, t, heads_, channels_ / heads_}).permute({2, 0, 1, 3});  // H N T c
    auto pooled = (weights.unsqueeze(-1) * values).sum(2);                            // H N c
    pooled = pooled.permute({1, 0, 2}).reshape({n, channels_});
    auto out = torch::relu(out_norm(out_proj(pooled)));
    return {out, weights};
}

// ---------------------------------------------------------------------------------------

TemporalEncoderImpl::TemporalEncoderImpl(TemporalEncoderConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto& w = config_.widths;
    down = register_module("down", nn::ModuleList());
    for (int i = 0; i < config_.depth(); ++i) {
        const int64_t in = i == 0 ? config_.in_channels : w[static_cast<std::size_t>(i - 1)];
        down->push_back(ConvBlock(in, w[static_cast<std::size_t>(i)], i == 0 ? 1 : 2));
    }
    attention = register_module("attention", TemporalAttention(w.back(), config_.attention_heads,
                                                               config_.key_dim, config_.time_embedding));
    up_convs = register_module("up_convs", nn::ModuleList());
    up_blocks = register_module("up_blocks", nn::ModuleList());
    for (int i = config_.depth() - 2; i >= 0; --i) {
        const int64_t coarse = w[static_cast<std::size_t>(i + 1)];
        const int64_t fine = w[static_cast<std::size_t>(i)];
        up_convs->push_back(conv_norm_relu(coarse, fine, 3));
        up_blocks->push_back(ConvBlock(2 * fine, fine));
    }
    out_conv = register_module("out_conv", nn::Conv2d(nn::Conv2dOptions(w.front(), config_.out_channels, 1)));
    init_he(*this);
}

TemporalEncoderImpl::Output TemporalEncoderImpl::forward(const torch::Tensor& frames_in,
                                                         const torch::Tensor& months_in,
                                                         const torch::Tensor& mask_in) {
    check(frames_in.dim() == 5, "temporal encoder: expected B x T x C x h x w, got " + shape_str(frames_in));
    check(frames_in.size(2) == config_.in_channels,
          "temporal encoder: expected " + std::to_string(config_.in_channels) + " channels, got " +
              std::to_string(frames_in.size(2)));
    const int64_t b = frames_in.size(0);
    const int64_t t = frames_in.size(1);
    check(t >= 1, "temporal encoder: empty time axis");

    auto months = per_sample(months_in, b, t, "months");
    auto mask = mask_in.defined() ? per_sample(mask_in, b, t, "mask").to(torch::kBool)
                                  : torch::ones({b, t}, torch::TensorOptions().dtype(torch::kBool));
    check(mask.any(1).all().item<bool>(), "temporal encoder: every timestep is masked");

    // Frames go through the encoder one timestep at a time. Every convolution then sees the
    // same batch shape whatever T is, so a masked stack and its truncation round identically.
    std::vector<std::vector<torch::Tensor>> per_level(static_cast<std::size_t>(config_.depth()));
    for (int64_t step = 0; step < t; ++step) {
        auto x = frames_in.select(1, step);
        if (config_.pre_upsample_to > 0) {
            x = resize_bilinear(x, config_.pre_upsample_to, config_.pre_upsample_to);
        }
        for (std::size_t level = 0; level < down->size(); ++level) {
            x = down[level]->as<ConvBlockImpl>()->forward(x);
            per_level[level].push_back(x);
        }
    }
    // Level outputs laid out as (B*T) x C x h x w, sample-major.
    std::vector<torch::Tensor> skips;
    for (auto& outs : per_level) {
        auto stacked = torch::stack(outs, 1);
        skips.push_back(stacked.reshape({b * t, stacked.size(2), stacked.size(3), stacked.size(4)}));
    }

    // Attention over time at the coarsest level, one sequence per pixel.
    const auto& coarse = skips.back();
    const int64_t d = coarse.size(1);
    const int64_t hl = coarse.size(2);
    const int64_t wl = coarse.size(3);
    auto seq = coarse.view({b, t, d, hl, wl}).permute({0, 3, 4, 1, 2}).reshape({b * hl * wl, t, d});
    auto pix_months = months.view({b, 1, t}).expand({b, hl * wl, t}).reshape({b * hl * wl, t});
    auto pix_mask = mask.view({b, 1, t}).expand({b, hl * wl, t}).reshape({b * hl * wl, t});
    auto attn = attention->forward(seq, pix_months, pix_mask);
    const int64_t heads = attention->heads();

    auto y = attn.features.view({b, hl, wl, d}).permute({0, 3, 1, 2});
    auto weights = attn.weights.view({heads, b, hl, wl, t}).permute({0, 1, 4, 2, 3}).contiguous();  // H B T hl wl

    for (int level = config_.depth() - 2, j = 0; level >= 0; --level, ++j) {
        const auto& skip = skips[static_cast<std::size_t>(level)];
        const int64_t c = skip.size(1);
        const int64_t h = skip.size(2);
        const int64_t w = skip.size(3);
        auto a = resize_bilinear(weights.view({heads * b, t, hl, wl}), h, w).view({heads, b, t, 1, h, w});
        auto grouped = skip.view({b, t, heads, c / heads, h, w}).permute({2, 0, 1, 3, 4, 5});
        auto collapsed = (a * grouped).sum(2).permute({1, 0, 2, 3, 4}).reshape({b, c, h, w});

        y = up_convs[static_cast<std::size_t>(j)]->as<nn::SequentialImpl>()->forward(resize_bilinear(y, h, w));
        y = up_blocks[static_cast<std::size_t>(j)]->as<ConvBlockImpl>()->forward(torch::cat({y, collapsed}, 1));
    }
    return {out_conv(y), weights};
}

SpatialFeature encode_series(TemporalEncoder& encoder, const TimeSeriesStack& stack,
                             const std::vector<bool>& mask, const std::optional<geo::GeoFootprint>& footprint) {
    check(mask.size() == static_cast<std::size_t>(stack.frames),
          "encode_series: mask length " + std::to_string(mask.size()) + " differs from frame count " +
              std::to_string(stack.frames));
    auto mask_t = torch::zeros({stack.frames}, torch::TensorOptions().dtype(torch::kBool));
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask_t[static_cast<int64_t>(i)] = static_cast<bool>(mask[i]);
    }
    auto param = encoder->parameters().front();
    auto frames = to_tensor(stack).to(param.dtype()).unsqueeze(0);
    auto months = months_tensor(stack).to(param.dtype());
    auto out = encoder->forward(frames, months, mask_t);

    SpatialFeature f;
    f.data = out.feature.squeeze(0);
    f.resolution_m = stack.resolution_m * static_cast<double>(stack.width) / static_cast<double>(f.data.size(2));
    f.footprint = footprint.value_or(geo::footprint_of(stack.width, stack.height, stack.resolution_m));
    return f;
}

SeriesHeadImpl::SeriesHeadImpl(int64_t channels, int64_t num_classes)
    : classifier(register_module("classifier", nn::Conv2d(nn::Conv2dOptions(channels, num_classes, 1)))) {
    init_he(*this);
}

torch::Tensor SeriesHeadImpl::forward(const torch::Tensor& feature) {
    if (feature.dim() == 3) {
        return classifier(feature.unsqueeze(0)).squeeze(0);
    }
    return classifier(feature);
}

}  // namespace fusu::temporal
