#pragma once

#include <vector>

#include <torch/torch.h>

namespace fusu::bitemporal {

/// Multi-resolution backbone: parallel streams at strides output_stride * 2^i that exchange
/// information after every unit, then concatenate into one representation at the highest
/// resolution.
struct BackboneConfig {
    /// One width per stream; the stream count is the vector length.
    std::vector<int> stage_widths = {32, 64};
    /// Stride of the highest-resolution stream; a power of two.
    int output_stride = 4;
    int exchange_units = 2;
    int out_channels = 64;

    int num_streams() const { return static_cast<int>(stage_widths.size()); }
    void validate() const;
};

struct HeadConfig {
    int channels = 64;
    std::vector<int> aspp_rates = {1, 6, 12, 18};
    std::vector<int> pyramid_bins = {1, 2, 3, 6};
    void validate() const;
};

struct MultiScaleFeatures {
    std::vector<torch::Tensor> streams;  // stream i at stride output_stride * 2^i
    torch::Tensor high_res;              // N x out_channels at the highest-resolution stride
};

class BasicBlockImpl : public torch::nn::Module {
public:
    explicit BasicBlockImpl(int64_t channels);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Conv2d conv1{nullptr};
    torch::nn::GroupNorm norm1{nullptr};
    torch::nn::Conv2d conv2{nullptr};
    torch::nn::GroupNorm norm2{nullptr};
};
TORCH_MODULE(BasicBlock);

class BackboneImpl : public torch::nn::Module {
public:
    explicit BackboneImpl(BackboneConfig config);

    /// `image`: N x 3 x H x W with H and W divisible by output_stride * 2^(streams-1).
    MultiScaleFeatures forward(const torch::Tensor& image);

    const BackboneConfig& config() const { return config_; }

private:
    torch::Tensor exchange(std::size_t unit, std::vector<torch::Tensor>& xs);

    BackboneConfig config_;
    torch::nn::Sequential stem{nullptr};
    torch::nn::ModuleList transitions{nullptr};
    torch::nn::ModuleList blocks{nullptr};     // unit-major: unit * streams + stream
    torch::nn::ModuleList exchanges{nullptr};  // unit-major: (unit * streams + dst) * streams + src
    torch::nn::Sequential representation{nullptr};
};
TORCH_MODULE(Backbone);

/// Dilated-pyramid segmentation head.
class SegmentHeadImpl : public torch::nn::Module {
public:
    SegmentHeadImpl(int64_t in_channels, int64_t num_classes, HeadConfig config);

    struct Output {
        torch::Tensor features;  // N x channels at feature resolution (pre-logit)
        torch::Tensor logits;    // N x K x label_rows x label_cols
    };

    /// `series` is the fused series contribution, added to `features` when defined; its
    /// shape must equal the feature shape.
    Output forward(const torch::Tensor& features, const torch::Tensor& series, int64_t label_rows,
                   int64_t label_cols);

private:
    HeadConfig config_;
    torch::nn::ModuleList branches{nullptr};
    torch::nn::Sequential image_pool{nullptr};
    torch::nn::Sequential project{nullptr};
    torch::nn::Conv2d classifier{nullptr};
};
TORCH_MODULE(SegmentHead);

/// Pyramid-pooling head on the difference of two segmentation feature maps.
class ChangeHeadImpl : public torch::nn::Module {
public:
    ChangeHeadImpl(int64_t channels, HeadConfig config);

    /// Returns N x 1 x label_rows x label_cols logits. Pooling runs at feature resolution and
    /// the logit is upsampled afterwards.
    torch::Tensor forward(const torch::Tensor& seg_feat_t1, const torch::Tensor& seg_feat_t2,
                          int64_t label_rows, int64_t label_cols);

    /// The head applied to an already computed difference tensor.
    torch::Tensor from_difference(const torch::Tensor& diff, int64_t label_rows, int64_t label_cols);

private:
    HeadConfig config_;
    torch::nn::ModuleList pools{nullptr};
    torch::nn::Sequential bottleneck{nullptr};
    torch::nn::Conv2d classifier{nullptr};
};
TORCH_MODULE(ChangeHead);

}  // namespace fusu::bitemporal
