#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fusu/dataset.hpp"
#include "fusu/fusu_net.hpp"
#include "fusu/harness/checkpoint.hpp"
#include "fusu/harness/run_config.hpp"
#include "fusu/metrics.hpp"

namespace fusu::harness {

struct EvalOptions {
    std::string part = "test";
    /// Restricts the SCD confusion matrices to pixels whose label changed.
    bool changed_pixels_only = false;
    double change_threshold = 0.5;
    int batch_size = 4;
};

/// Hard predictions for one patch.
struct Prediction {
    std::string id;
    LabelMap seg_t1;
    LabelMap seg_t2;
    ChangeLabel change;
};

struct EvalReport {
    std::string split;
    std::string part;
    /// "intra-dataset" or "inter-dataset".
    std::string protocol = "intra-dataset";
    std::string train_region;  // empty: all regions
    std::string eval_region;
    std::size_t samples = 0;
    bool changed_pixels_only = false;
    double change_threshold = 0.5;
    metrics::ConfusionMatrix seg;  // T1 segmentation
    metrics::ConfusionMatrix scd;  // T1 and T2 segmentation summed
    metrics::BinaryChangeCounts bcd;

    /// NaN when no class is defined.
    double miou_seg() const;
    double miou_scd() const;
    double iou_bcd() const { return bcd.iou(); }
};

/// "inter-dataset" when training was restricted to one region and the evaluated split is not
/// that same region; otherwise "intra-dataset".
std::string protocol_tag(const std::string& train_region, const std::string& eval_region);

/// Scores predictions against ground truth patches (same order). Both evaluation and report
/// regeneration go through this.
EvalReport score(const std::vector<Prediction>& predictions, const std::vector<PatchSample>& truth,
                 int num_classes, const EvalOptions& options);

/// Runs inference on the given ids.
std::vector<Prediction> predict(FusuNet& model, const std::filesystem::path& root,
                                const std::vector<std::string>& ids, int frame_count, const EvalOptions& options);

/// Rebuilds the network stored in a checkpoint.
FusuNet model_from_checkpoint(const Checkpoint& checkpoint);
RunConfig config_from_checkpoint(const Checkpoint& checkpoint);

struct EvalRun {
    EvalReport report;
    std::vector<Prediction> predictions;
};

/// Loads the checkpoint, checks its class count against the dataset, predicts the split part
/// and scores it. Empty parts are rejected.
EvalRun evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::filesystem::path& root,
                            const std::string& split, const EvalOptions& options);

}  // namespace fusu::harness
