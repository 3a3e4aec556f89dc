#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fusu/fusu_net.hpp"
#include "fusu/kv_text.hpp"
#include "fusu/supervision.hpp"

namespace fusu::harness {

enum class Task { segmentation, scd, bcd };

std::string to_string(Task task);
Task parse_task(const std::string& text);

struct OptimizerSettings {
    std::string kind = "sgd";  // sgd | adamw
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct ScheduleSettings {
    std::string kind = "poly";  // poly | linear | constant
    double power = 0.9;
};

struct RunConfig {
    Task task = Task::segmentation;
    OptimizerSettings optimizer;
    ScheduleSettings schedule;
    int batch_size = 4;
    long long max_steps = 2000;
    /// When positive, max_steps is derived from the train split: epochs * ceil(n / batch).
    int max_epochs = 0;
    std::string data_root;
    std::string split = "default";
    /// Number of leading months fed to the series branch; 0 removes the branch.
    int time_series_count = 25;
    std::uint64_t seed = 0;
    std::string run_dir = "run";
    long long checkpoint_every = 500;
    /// Validation (and best-checkpoint selection) runs at every checkpoint.
    bool validate_checkpoints = true;
    FusuNetConfig model;
    supervision::LossOptions loss;

    /// Optimizer constants per task with the desk-scale run length (batch 4, 2000 steps);
    /// `paper_scale` restores batch 8 and 80k iterations / 200 epochs.
    static RunConfig defaults(Task task, bool paper_scale = false);

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;

    void write(KeyValueText& kv) const;
    /// Starts from defaults for the task named in `kv` (and its paper_scale key), then
    /// applies every recognised key. Unknown keys are rejected.
    static RunConfig read(const KeyValueText& kv);
};

/// Dataset root from an explicit value, else FUSU_DATA_ROOT, else "data".
std::filesystem::path resolve_data_root(const std::string& explicit_root);

}  // namespace fusu::harness
