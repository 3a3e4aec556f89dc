#pragma once

#include <map>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "fusu/bitemporal_net.hpp"
#include "fusu/dataset.hpp"
#include "fusu/fusion.hpp"
#include "fusu/kv_text.hpp"
#include "fusu/temporal_encoder.hpp"

namespace fusu {

struct FusuNetConfig {
    int num_classes = kNumClasses;
    /// false removes the time-series branch entirely (no encoder, fusion or series head).
    bool use_series = true;
    bitemporal::BackboneConfig backbone;
    bitemporal::HeadConfig head;
    temporal::TemporalEncoderConfig temporal;
    /// series_channels and target_channels are overwritten from the temporal encoder and
    /// backbone settings.
    fusion::FusionConfig fusion;

    void validate() const;

    /// Tiny configuration used by gradient checks.
    static FusuNetConfig micro();

    void write(KeyValueText& kv, const std::string& prefix = "model.") const;
    static FusuNetConfig read(const KeyValueText& kv, const std::string& prefix = "model.");
};

/// A batch ready for the network.
struct ModelInputs {
    torch::Tensor t1;      // B x 3 x H x W
    torch::Tensor t2;      // B x 3 x H x W
    torch::Tensor series;  // B x T x C x h x w (may be undefined without the series branch)
    torch::Tensor months;  // B x T
    torch::Tensor mask;    // B x T bool, or undefined for all frames
    std::vector<geo::AlignmentSpec> alignment;  // one per sample
};

/// Network predictions for one batch.
struct ModelOutputs {
    torch::Tensor seg_t1;      // B x K x H x W logits
    torch::Tensor seg_t2;      // B x K x H x W logits
    torch::Tensor seg_series;  // B x K x h x w logits (undefined without the series branch)
    torch::Tensor change;      // B x 1 x H x W logit
    torch::Tensor seg_feat_t1;
    torch::Tensor seg_feat_t2;
};

/// Full model: shared backbone for T1 and T2, separate segmentation heads, a change head on the
/// difference of segmentation features, and the time-series branch fused into the backbone
/// representation before both segmentation heads.
class FusuNetImpl : public torch::nn::Module {
public:
    explicit FusuNetImpl(FusuNetConfig config);

    ModelOutputs forward(const ModelInputs& inputs);

    const FusuNetConfig& config() const { return config_; }

    bitemporal::Backbone backbone{nullptr};
    bitemporal::SegmentHead seg_head_t1{nullptr};
    bitemporal::SegmentHead seg_head_t2{nullptr};
    bitemporal::ChangeHead change_head{nullptr};
    temporal::TemporalEncoder temporal{nullptr};
    temporal::SeriesHead series_head{nullptr};
    fusion::Fusion fusion{nullptr};

private:
    FusuNetConfig config_;
};
TORCH_MODULE(FusuNet);

/// Batches samples. `frame_count` keeps the first k frames (k = 0 drops the series);
/// -1 keeps every frame.
ModelInputs make_inputs(const std::vector<const PatchSample*>& samples, int frame_count = -1);

/// Name -> tensor view of every parameter and buffer.
std::map<std::string, torch::Tensor> state_of(const torch::nn::Module& module);

/// Copies matching tensors into the module; returns the names that were loaded. Unknown
/// names and shape mismatches throw unless `allow_partial` is set, in which case they are
/// skipped. This is also the hook for user-supplied pretrained weights.
std::vector<std::string> load_state(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& state,
                                    bool allow_partial = false);

}  // namespace fusu
