#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fusu/harness/run_config.hpp"

namespace fusu::harness {

struct TrainOptions {
    /// Checkpoint to continue from; its step and optimizer state are restored.
    std::filesystem::path resume;
    /// Progress line every n steps; 0 disables. Lines go to `log` when set.
    int log_every = 50;
    std::ostream* log = nullptr;
    /// Periodic checkpoints kept on disk (older ones are removed); best and final are kept.
    int keep_checkpoints = 2;
};

struct TrainResult {
    long long steps = 0;
    std::filesystem::path final_checkpoint;
    /// Empty when no validation ran.
    std::filesystem::path best_checkpoint;
    double best_val_metric = 0.0;
    long long best_step = 0;
};

/// Validation metric used for best-checkpoint selection: mIoU_seg for segmentation,
/// mIoU_scd for SCD, IoU_bcd for BCD.
std::string selection_metric(Task task);

/// Step budget after resolving max_epochs against the train split size.
long long resolve_max_steps(const RunConfig& config, std::size_t train_size);

/// Trains into config.run_dir: config.snapshot, losses.csv (step, lr, l1_seg, l2_seg, lT_seg,
/// l_change, total; step is the 0-based update index the lr formula uses) and ckpt_*.bin.
/// Throws std::runtime_error on a non-finite loss, before the bad update is applied.
TrainResult train(const RunConfig& config, const TrainOptions& options = {});

/// The checkpoint evaluation should use by default: ckpt_best.bin if present, else
/// ckpt_final.bin.
std::filesystem::path default_checkpoint(const std::filesystem::path& run_dir);

}  // namespace fusu::harness
