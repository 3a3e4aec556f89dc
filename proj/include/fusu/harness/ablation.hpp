#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fusu/harness/run_config.hpp"

namespace fusu::harness {

struct AblationRow {
    int k = 0;
    double miou_seg = 0.0;
    double iou_bcd = 0.0;
    double miou_scd = 0.0;
};

struct AblationResult {
    std::vector<AblationRow> rows;
    /// The k = 0 model produced bit-identical outputs for two different series inputs.
    bool k0_invariant = false;
    bool k0_checked = false;
};

struct AblationOptions {
    std::string part = "test";
    std::ostream* log = nullptr;
};

/// One train + evaluate cycle per k under <base.run_dir>/k<k>, sharing seed and split; the
/// series branch sees the first k months and is removed for k = 0. Writes ablation.csv
/// (k, mIoU_seg, IoU_bcd, mIoU_scd) and ablation.txt into base.run_dir.
AblationResult ablate(const RunConfig& base, const std::vector<int>& counts, const AblationOptions& options = {});

/// Loads a checkpoint of a series-free model and checks that two different series tensors
/// (the stored one and seeded noise) give bit-identical outputs on the first samples of the
/// split part.
bool check_series_invariance(const std::filesystem::path& checkpoint, const std::filesystem::path& root,
                             const std::string& split, const std::string& part);

std::string ablation_table(const AblationResult& result);

}  // namespace fusu::harness
