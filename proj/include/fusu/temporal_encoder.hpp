#pragma once

#include <optional>
#include <vector>

#include <torch/torch.h>

#include "fusu/dataset.hpp"
#include "fusu/geo_align.hpp"

namespace fusu::temporal {

struct TemporalEncoderConfig {
    int in_channels = 14;
    int out_channels = 64;
    /// Feature width per resolution level; the level count is the encoder depth.
    std::vector<int> widths = {32, 64, 128};
    int attention_heads = 4;
    int key_dim = 4;
    /// Sinusoidal encoding of the month index added before attention.
    bool time_embedding = true;
    /// When positive, frames are bilinearly resized to this size before encoding.
    int pre_upsample_to = 0;

    int depth() const { return static_cast<int>(widths.size()); }
    void validate() const;
};

/// Feature map with its ground geometry.
struct SpatialFeature {
    torch::Tensor data;  // D x h x w, or N x D x h x w inside batched code
    double resolution_m = 0.0;
    geo::GeoFootprint footprint;
};

/// Sinusoidal embedding of (fractional) month indices: months is any shape, the result gets a
/// trailing `dims` axis. Even dims use sin, odd dims cos, with period base 1000.
torch::Tensor month_encoding(const torch::Tensor& months, int64_t dims);

class ConvBlockImpl : public torch::nn::Module {
public:
    ConvBlockImpl(int64_t in_channels, int64_t out_channels, int64_t stride = 1);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Conv2d conv1{nullptr};
    torch::nn::GroupNorm norm1{nullptr};
    torch::nn::Conv2d conv2{nullptr};
    torch::nn::GroupNorm norm2{nullptr};
};
TORCH_MODULE(ConvBlock);

/// Per-pixel attention with one learned query per head. Input is N x T x D; every
/// operation before the softmax acts on one timestep at a time, so masked steps cannot
/// influence the result.
class TemporalAttentionImpl : public torch::nn::Module {
public:
    TemporalAttentionImpl(int64_t channels, int64_t heads, int64_t key_dim, bool time_embedding);

    struct Result {
        torch::Tensor features;  // N x D
        torch::Tensor weights;   // heads x N x T
    };
    /// `months`: N x T; `mask`: N x T bool, true where the step is used.
    Result forward(const torch::Tensor& sequence, const torch::Tensor& months, const torch::Tensor& mask);

    int64_t heads() const { return heads_; }

private:
    int64_t channels_;
    int64_t heads_;
    int64_t key_dim_;
    bool time_embedding_;
    torch::nn::LayerNorm in_norm{nullptr};
    torch::nn::Linear in_proj{nullptr};
    torch::nn::Linear key_proj{nullptr};
    torch::Tensor query;
    torch::nn::Linear out_proj{nullptr};
    torch::nn::LayerNorm out_norm{nullptr};
};
TORCH_MODULE(TemporalAttention);

/// U-shaped spatio-temporal encoder. Frames are encoded independently at every level,
/// attention weights come from the coarsest level and are upsampled to collapse the time
/// axis of each skip connection, and the decoder restores the input resolution.
class TemporalEncoderImpl : public torch::nn::Module {
public:
    explicit TemporalEncoderImpl(TemporalEncoderConfig config);

    struct Output {
        torch::Tensor feature;    // B x out_channels x h x w
        torch::Tensor attention;  // heads x B x T x h_L x w_L
    };

    /// `frames`: B x T x C x h x w; `months`: B x T (or T); `mask`: B x T bool (or T), or
    /// undefined for all-true.
    Output forward(const torch::Tensor& frames, const torch::Tensor& months,
                   const torch::Tensor& mask = {});

    const TemporalEncoderConfig& config() const { return config_; }

private:
    TemporalEncoderConfig config_;
    torch::nn::ModuleList down{nullptr};
    TemporalAttention attention{nullptr};
    torch::nn::ModuleList up_convs{nullptr};
    torch::nn::ModuleList up_blocks{nullptr};
    torch::nn::Conv2d out_conv{nullptr};
};
TORCH_MODULE(TemporalEncoder);

/// Encodes one stack. `mask` has one entry per frame (true = used); at least one must be set.
/// The footprint defaults to a stack-sized footprint centered at the origin.
SpatialFeature encode_series(TemporalEncoder& encoder, const TimeSeriesStack& stack,
                             const std::vector<bool>& mask,
                             const std::optional<geo::GeoFootprint>& footprint = std::nullopt);

/// 1x1 classifier on the series feature; raw logits.
class SeriesHeadImpl : public torch::nn::Module {
public:
    SeriesHeadImpl(int64_t channels, int64_t num_classes);
    torch::Tensor forward(const torch::Tensor& feature);

private:
    torch::nn::Conv2d classifier{nullptr};
};
TORCH_MODULE(SeriesHead);

}  // namespace fusu::temporal
