#include "fusu/harness/optimizer.hpp"

#include <cmath>

#include "fusu/tensor_ops.hpp"

namespace fusu::harness {

Optimizer::Optimizer(OptimizerSettings settings, std::vector<std::pair<std::string, torch::Tensor>> params)
    : settings_(std::move(settings)) {
    check(settings_.kind == "sgd" || settings_.kind == "adamw", "optimizer: unknown kind '" + settings_.kind + "'");
    for (auto& [name, p] : params) {
        Slot s;
        s.name = name;
        s.param = p;
        if (settings_.kind == "sgd") {
            s.momentum = torch::zeros_like(p);
        } else {
            s.exp_avg = torch::zeros_like(p);
            s.exp_avg_sq = torch::zeros_like(p);
        }
        slots_.push_back(std::move(s));
    }
}

void Optimizer::zero_grad() {
    for (auto& s : slots_) {
        if (s.param.grad().defined()) {
            s.param.mutable_grad().zero_();
        }
    }
}

void Optimizer::step(double lr) {
    torch::NoGradGuard no_grad;
    ++steps_;
    const auto& o = settings_;
    for (auto& s : slots_) {
        if (!s.param.grad().defined()) {
            continue;
        }
        auto g = s.param.grad();
        if (o.kind == "sgd") {
            auto d = o.weight_decay != 0.0 ? g + o.weight_decay * s.param : g.clone();
            if (o.momentum != 0.0) {
                // The first step seeds the buffer with the gradient itself.
                if (steps_ == 1) {
                    s.momentum.copy_(d);
                } else {
                    s.momentum.mul_(o.momentum).add_(d);
                }
                d = s.momentum;
            }
            s.param.add_(d, -lr);
        } else {
            s.param.mul_(1.0 - lr * o.weight_decay);
            s.exp_avg.mul_(o.beta1).add_(g, 1.0 - o.beta1);
            s.exp_avg_sq.mul_(o.beta2).addcmul_(g, g, 1.0 - o.beta2);
            const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(steps_));
            const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(steps_));
            auto denom = (s.exp_avg_sq / bc2).sqrt_().add_(o.eps);
            s.param.addcdiv_(s.exp_avg, denom, -lr / bc1);
        }
    }
}

std::map<std::string, torch::Tensor> Optimizer::state() const {
    std::map<std::string, torch::Tensor> out;
    for (const auto& s : slots_) {
        if (s.momentum.defined()) {
            out[s.name + "/momentum"] = s.momentum;
        }
        if (s.exp_avg.defined()) {
            out[s.name + "/exp_avg"] = s.exp_avg;
            out[s.name + "/exp_avg_sq"] = s.exp_avg_sq;
        }
    }
    return out;
}

void Optimizer::load_state(const std::map<std::string, torch::Tensor>& state, long long steps) {
    torch::NoGradGuard no_grad;
    auto load = [&](const std::string& key, torch::Tensor& into) {
        const auto it = state.find(key);
        check(it != state.end(), "optimizer: state tensor '" + key + "' missing");
        check(it->second.sizes() == into.sizes(), "optimizer: state tensor '" + key + "' has the wrong shape");
        into.copy_(it->second);
    };
    for (auto& s : slots_) {
        if (s.momentum.defined()) {
            load(s.name + "/momentum", s.momentum);
        }
        if (s.exp_avg.defined()) {
            load(s.name + "/exp_avg", s.exp_avg);
            load(s.name + "/exp_avg_sq", s.exp_avg_sq);
        }
    }
    steps_ = steps;
}

std::vector<std::pair<std::string, torch::Tensor>> trainable_parameters(const torch::nn::Module& module) {
    std::vector<std::pair<std::string, torch::Tensor>> out;
    for (const auto& item : module.named_parameters(/*recurse=*/true)) {
        if (item.value().requires_grad()) {
            out.emplace_back(item.key(), item.value());
        }
    }
    return out;
}

}  // namespace fusu::harness
