#include "fusu/fusion.hpp"

#include "fusu/tensor_ops.hpp"

namespace fusu::fusion {

namespace nn = torch::nn;

void FusionConfig::validate() const {
    check(series_channels > 0 && target_channels > 0 && target_size > 0 && bottleneck_channels > 0,
          "fusion: channel counts and target size must be positive");
    check(dilation >= 1, "fusion: dilation must be at least 1");
    check(context_depth >= 1, "fusion: context depth must be at least 1");
}

int context_receptive_field(const FusionConfig& config) {
    int field = 1;
    for (int i = 0; i < config.context_depth; ++i) {
        field += 2 * (config.dilation << i);
    }
    return field;
}

FusionImpl::FusionImpl(FusionConfig config) : config_(std::move(config)) {
    config_.validate();
    projection = register_module(
        "projection", nn::Conv2d(nn::Conv2dOptions(config_.series_channels, config_.target_channels, 1).bias(config_.bias)));
    reduce = register_module(
        "reduce", nn::Conv2d(nn::Conv2dOptions(config_.series_channels, config_.bottleneck_channels, 1).bias(config_.bias)));
    dilated = register_module("dilated", nn::ModuleList());
    for (int i = 0; i < config_.context_depth; ++i) {
        const int rate = config_.dilation << i;
        dilated->push_back(nn::Conv2d(nn::Conv2dOptions(config_.bottleneck_channels, config_.bottleneck_channels, 3)
                                          .padding(rate)
                                          .dilation(rate)
                                          .bias(config_.bias)));
    }
    expand = register_module(
        "expand", nn::Conv2d(nn::Conv2dOptions(config_.bottleneck_channels, config_.target_channels, 1).bias(config_.bias)));
    init_he(*this);
}

torch::Tensor FusionImpl::align_path(const torch::Tensor& series, const std::vector<geo::AlignmentSpec>& specs,
                                     int64_t rows, int64_t cols) {
    check(series.dim() == 4, "fusion: expected N x C x h x w series feature, got " + shape_str(series));
    const int64_t n = series.size(0);
    check(specs.size() == 1 || static_cast<int64_t>(specs.size()) == n,
          "fusion: need one alignment spec per sample or one shared spec");
    const auto h = static_cast<int>(series.size(2));
    const auto w = static_cast<int>(series.size(3));

    std::vector<geo::CropWindow> windows;
    for (const auto& spec : specs) {
        windows.push_back(geo::center_crop_window(spec, h, w));
    }
    const bool shared = std::all_of(windows.begin(), windows.end(),
                                    [&](const geo::CropWindow& win) { return win == windows.front(); });
    if (shared) {
        return resize_bilinear(projection(crop(series, windows.front())), rows, cols);
    }
    std::vector<torch::Tensor> parts;
    for (int64_t i = 0; i < n; ++i) {
        const auto& win = windows[static_cast<std::size_t>(i)];
        parts.push_back(resize_bilinear(projection(crop(series.narrow(0, i, 1), win)), rows, cols));
    }
    return torch::cat(parts, 0);
}

torch::Tensor FusionImpl::context_path(const torch::Tensor& series, int64_t rows, int64_t cols) {
    check(series.dim() == 4, "fusion: expected N x C x h x w series feature, got " + shape_str(series));
    auto y = torch::relu(reduce(series));
    for (const auto& layer : *dilated) {
        y = torch::relu(layer->as<nn::Conv2dImpl>()->forward(y));
    }
    return resize_bilinear(expand(y), rows, cols);
}

torch::Tensor FusionImpl::contribution(const torch::Tensor& series, const std::vector<geo::AlignmentSpec>& specs,
                                       int64_t rows, int64_t cols) {
    check(series.size(1) == config_.series_channels,
          "fusion: expected " + std::to_string(config_.series_channels) + " series channels, got " +
              std::to_string(series.size(1)));
    return align_path(series, specs, rows, cols) + context_path(series, rows, cols);
}

torch::Tensor FusionImpl::fuse(const torch::Tensor& hr_feature, const torch::Tensor& series,
                               const std::vector<geo::AlignmentSpec>& specs) {
    check(hr_feature.dim() == 4 && series.dim() == 4, "fusion: expected 4-D feature tensors");
    check(hr_feature.size(0) == series.size(0), "fusion: batch sizes differ");
    check(hr_feature.size(1) == config_.target_channels,
          "fusion: high-res feature has " + std::to_string(hr_feature.size(1)) + " channels, expected " +
              std::to_string(config_.target_channels));
    return hr_feature + contribution(series, specs, hr_feature.size(2), hr_feature.size(3));
}

}  // namespace fusu::fusion
