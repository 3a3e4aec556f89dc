#pragma once

#include <torch/torch.h>

#include "fusu/dataset.hpp"
#include "fusu/geo_align.hpp"

namespace fusu {

// Conversions between dataset arrays and tensors. Image/series tensors are float32,
// label tensors int64, change tensors float32 in {0, 1}.
torch::Tensor to_tensor(const HighResImage& image);    // 3 x H x W
torch::Tensor to_tensor(const TimeSeriesStack& stack); // T x C x h x w
torch::Tensor to_tensor(const LabelMap& labels);       // H x W
torch::Tensor to_tensor(const ChangeLabel& change);    // H x W
torch::Tensor months_tensor(const TimeSeriesStack& stack);  // T, float32

/// Argmax over the class dimension of a K x H x W logit tensor.
LabelMap labels_from_logits(const torch::Tensor& logits);

/// Window of an N x C x H x W tensor.
torch::Tensor crop(const torch::Tensor& x, const geo::CropWindow& window);

/// Bilinear resize of an N x C x H x W tensor (half-pixel centers, no corner alignment).
torch::Tensor resize_bilinear(const torch::Tensor& x, int64_t rows, int64_t cols);

/// Group count for GroupNorm: the largest of 8, 4, 2, 1 dividing `channels`.
int64_t norm_groups(int64_t channels);

/// He (fan-in) normal initialization for every convolution and linear layer under `module`;
/// biases start at zero.
void init_he(torch::nn::Module& module);

/// Throws std::invalid_argument with `what` when the condition fails.
void check(bool condition, const std::string& what);

std::string shape_str(const torch::Tensor& t);

}  // namespace fusu
