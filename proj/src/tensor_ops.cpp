#include "fusu/tensor_ops.hpp"

#include <sstream>
#include <stdexcept>

namespace fusu {

namespace F = torch::nn::functional;

torch::Tensor to_tensor(const HighResImage& image) {
    return torch::from_blob(const_cast<float*>(image.bands.data()),
                            {HighResImage::kBands, image.height, image.width}, torch::kFloat32)
        .clone();
}

torch::Tensor to_tensor(const TimeSeriesStack& stack) {
    return torch::from_blob(const_cast<float*>(stack.values.data()),
                            {stack.frames, stack.channels, stack.height, stack.width}, torch::kFloat32)
        .clone();
}

torch::Tensor to_tensor(const LabelMap& labels) {
    return torch::from_blob(const_cast<std::uint8_t*>(labels.values.data()), {labels.height, labels.width},
                            torch::kUInt8)
        .to(torch::kInt64);
}

torch::Tensor to_tensor(const ChangeLabel& change) {
    return torch::from_blob(const_cast<std::uint8_t*>(change.values.data()), {change.height, change.width},
                            torch::kUInt8)
        .to(torch::kFloat32);
}

torch::Tensor months_tensor(const TimeSeriesStack& stack) {
    std::vector<float> months(stack.timestamps.begin(), stack.timestamps.end());
    return torch::tensor(months, torch::kFloat32);
}

LabelMap labels_from_logits(const torch::Tensor& logits) {
    check(logits.dim() == 3, "labels_from_logits: expected K x H x W, got " + shape_str(logits));
    const auto idx = logits.argmax(0).to(torch::kUInt8).contiguous();
    LabelMap out(static_cast<int>(idx.size(0)), static_cast<int>(idx.size(1)));
    std::memcpy(out.values.data(), idx.data_ptr<std::uint8_t>(), out.values.size());
    return out;
}

torch::Tensor crop(const torch::Tensor& x, const geo::CropWindow& w) {
    check(x.dim() == 4, "crop: expected N x C x H x W, got " + shape_str(x));
    check(w.rows >= 1 && w.cols >= 1, "crop: empty window");
    check(w.row_start >= 0 && w.col_start >= 0 && w.row_start + w.rows <= x.size(2) &&
              w.col_start + w.cols <= x.size(3),
          "crop: window exceeds source " + shape_str(x));
    return x.narrow(2, w.row_start, w.rows).narrow(3, w.col_start, w.cols);
}

torch::Tensor resize_bilinear(const torch::Tensor& x, int64_t rows, int64_t cols) {
    if (x.size(2) == rows && x.size(3) == cols) {
        return x;
    }
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .size(std::vector<int64_t>{rows, cols})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
}

int64_t norm_groups(int64_t channels) {
    for (int64_t g : {8, 4, 2}) {
        if (channels % g == 0) {
            return g;
        }
    }
    return 1;
}

void init_he(torch::nn::Module& module) {
    torch::NoGradGuard no_grad;
    for (auto& child : module.modules(/*include_self=*/false)) {
        if (auto* conv = child->as<torch::nn::Conv2d>()) {
            torch::nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanIn, torch::kReLU);
            if (conv->bias.defined()) {
                conv->bias.zero_();
            }
        } else if (auto* linear = child->as<torch::nn::Linear>()) {
            torch::nn::init::kaiming_normal_(linear->weight, 0.0, torch::kFanIn, torch::kReLU);
            if (linear->bias.defined()) {
                linear->bias.zero_();
            }
        }
    }
}

void check(bool condition, const std::string& what) {
    if (!condition) {
        throw std::invalid_argument(what);
    }
}

std::string shape_str(const torch::Tensor& t) {
    if (!t.defined()) {
        return "<undefined>";
    }
    std::ostringstream os;
    os << t.sizes();
    return os.str();
}

}  // namespace fusu
