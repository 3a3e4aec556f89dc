#pragma once

#include <vector>

#include <torch/torch.h>

#include "fusu/geo_align.hpp"

namespace fusu::fusion {

struct FusionConfig {
    int series_channels = 64;
    int target_channels = 64;
    /// Default target grid; callers may pass an explicit size per call.
    int target_size = 32;
    int bottleneck_channels = 16;
    /// Base dilation of the context path; layer i uses dilation * 2^i.
    int dilation = 2;
    int context_depth = 3;
    /// Bias terms in both paths. Off by default so a zero series contributes exactly zero.
    bool bias = false;

    void validate() const;
};

/// Receptive field, in series pixels, of one context-path output pixel before resizing.
int context_receptive_field(const FusionConfig& config);

/// Adds the time-series feature to a high-res feature map along two paths:
///  - align: crop the geographically matching center window, project channels with a 1x1
///    convolution, bilinearly upsample to the target grid;
///  - context: 1x1 bottleneck, stacked dilated 3x3 convolutions, 1x1 expansion, resize of
///    the whole series footprint to the target grid.
class FusionImpl : public torch::nn::Module {
public:
    explicit FusionImpl(FusionConfig config);

    /// `series`: N x series_channels x h x w. `specs` holds one entry per sample or a single
    /// entry shared by the batch.
    torch::Tensor align_path(const torch::Tensor& series, const std::vector<geo::AlignmentSpec>& specs,
                             int64_t rows, int64_t cols);
    torch::Tensor context_path(const torch::Tensor& series, int64_t rows, int64_t cols);

    /// align_path + context_path on a rows x cols grid.
    torch::Tensor contribution(const torch::Tensor& series, const std::vector<geo::AlignmentSpec>& specs,
                               int64_t rows, int64_t cols);

    /// hr_feature + contribution.
    torch::Tensor fuse(const torch::Tensor& hr_feature, const torch::Tensor& series,
                       const std::vector<geo::AlignmentSpec>& specs);

    const FusionConfig& config() const { return config_; }

    torch::nn::Conv2d projection{nullptr};

private:
    FusionConfig config_;
    torch::nn::Conv2d reduce{nullptr};
    torch::nn::ModuleList dilated{nullptr};
    torch::nn::Conv2d expand{nullptr};
};
TORCH_MODULE(Fusion);

}  // namespace fusu::fusion
