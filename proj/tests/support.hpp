#pragma once

// Shared helpers for the torch-based tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <torch/torch.h>

namespace fusu::testutil {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("fusu_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Gradient norms below this are compared absolutely.
inline constexpr double kGradientFloor = 1e-5;

struct GradCheck {
    double worst = 0.0;
    std::string worst_name;
    /// Norms of the sampled analytic and numeric gradients of the worst tensor.
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    int checked = 0;
};

/// Adds small Gaussian noise to every parameter. Fresh modules have zero biases, and a pixel
/// whose activations are all zero then sits exactly on a ReLU kink, where finite differences
/// and autograd legitimately disagree; checking at a jittered point avoids that.
inline void jitter_parameters(torch::nn::Module& module, double scale = 0.05, std::uint64_t seed = 1) {
    torch::NoGradGuard ng;
    auto gen = torch::make_generator<at::CPUGeneratorImpl>(seed);
    for (auto& p : module.parameters()) {
        p.add_(torch::randn(p.sizes(), gen, p.options()) * scale);
    }
}

/// Compares autograd gradients against central differences for up to `per_tensor` entries of
/// every parameter. Error per tensor is |a - n| / max(|a|, |n|, floor) over the sampled vector;
/// the floor keeps central-difference round-off (about |loss| * 1e-16 / eps) from counting as
/// disagreement when a gradient is exactly zero. The loss must be deterministic and float64.
inline GradCheck check_gradients(torch::nn::Module& module, const std::function<torch::Tensor()>& loss_fn,
                                 int per_tensor = 6, double eps = 1e-6, std::uint64_t seed = 3) {
    GradCheck out;
    for (auto& p : module.parameters()) {
        if (p.grad().defined()) {
            p.mutable_grad().zero_();
        }
    }
    loss_fn().backward();
    std::mt19937_64 rng(seed);
    for (const auto& item : module.named_parameters()) {
        auto p = item.value();
        const auto flat = p.data().view({-1});
        const auto grad = p.grad().view({-1});
        const int64_t n = flat.numel();
        const int count = static_cast<int>(std::min<int64_t>(per_tensor, n));
        double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (int i = 0; i < count; ++i) {
            const int64_t idx = count == n ? i : static_cast<int64_t>(rng() % static_cast<std::uint64_t>(n));
            const double original = flat[idx].item<double>();
            double plus = 0.0, minus = 0.0;
            {
                torch::NoGradGuard ng;
                flat[idx] = original + eps;
                plus = loss_fn().item<double>();
                flat[idx] = original - eps;
                minus = loss_fn().item<double>();
                flat[idx] = original;
            }
            const double numeric = (plus - minus) / (2.0 * eps);
            const double analytic = grad[idx].item<double>();
            diff2 += (numeric - analytic) * (numeric - analytic);
            a2 += analytic * analytic;
            n2 += numeric * numeric;
            ++out.checked;
        }
        const double scale = std::max({std::sqrt(a2), std::sqrt(n2), kGradientFloor});
        const double err = std::sqrt(diff2) / scale;
        if (err > out.worst) {
            out.worst = err;
            out.worst_name = item.key();
            out.worst_analytic = std::sqrt(a2);
            out.worst_numeric = std::sqrt(n2);
        }
    }
    return out;
}

/// Intensity-weighted centroid (row, col) of the positive part of a 2-D response. Bilinear
/// upsampling clamps at the border, which flattens the peak of an impulse on the edge of the
/// source grid; the centroid still follows the source pixel.
inline std::pair<double, double> response_centroid(const torch::Tensor& map) {
    const auto m = torch::clamp_min(map.to(torch::kFloat64), 0.0);
    const auto total = m.sum().item<double>();
    const auto rows = torch::arange(m.size(0), m.options()).unsqueeze(1);
    const auto cols = torch::arange(m.size(1), m.options()).unsqueeze(0);
    return {(m * rows).sum().item<double>() / total, (m * cols).sum().item<double>() / total};
}

}  // namespace fusu::testutil
