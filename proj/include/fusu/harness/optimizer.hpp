#pragma once

#include <map>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "fusu/harness/run_config.hpp"

namespace fusu::harness {

/// SGD with momentum and coupled weight decay, or AdamW with decoupled weight decay.
/// Update rules follow the common definitions (torch.optim.SGD / AdamW without amsgrad or
/// nesterov). The learning rate is passed per step so schedules stay outside.
class Optimizer {
public:
    Optimizer(OptimizerSettings settings, std::vector<std::pair<std::string, torch::Tensor>> params);

    void zero_grad();
    void step(double lr);

    long long steps_taken() const { return steps_; }
    const OptimizerSettings& settings() const { return settings_; }

    /// Per-parameter state tensors named "<param>/momentum", "<param>/exp_avg",
    /// "<param>/exp_avg_sq".
    std::map<std::string, torch::Tensor> state() const;
    void load_state(const std::map<std::string, torch::Tensor>& state, long long steps);

private:
    struct Slot {
        std::string name;
        torch::Tensor param;
        torch::Tensor momentum;
        torch::Tensor exp_avg;
        torch::Tensor exp_avg_sq;
    };
    OptimizerSettings settings_;
    std::vector<Slot> slots_;
    long long steps_ = 0;
};

/// Named trainable parameters of a module in registration order.
std::vector<std::pair<std::string, torch::Tensor>> trainable_parameters(const torch::nn::Module& module);

}  // namespace fusu::harness
