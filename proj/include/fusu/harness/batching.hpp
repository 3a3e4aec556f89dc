#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "fusu/fusu_net.hpp"

namespace fusu::harness {

/// Deterministic infinite sample stream: epoch e visits every id once, in an order that
/// depends only on (seed, e). Step s of batch size B takes stream items s*B .. s*B+B-1, so
/// the batch of any step is known without replaying earlier ones.
class BatchOrder {
public:
    BatchOrder(std::vector<std::string> ids, std::uint64_t seed);

    std::vector<std::string> batch(long long step, int batch_size) const;
    std::vector<std::string> epoch_order(long long epoch) const;
    std::size_t size() const { return ids_.size(); }

private:
    std::vector<std::string> ids_;
    std::uint64_t seed_;
};

struct Batch {
    std::vector<PatchSample> samples;
    ModelInputs inputs;
    torch::Tensor y1;  // B x H x W int64
    torch::Tensor y2;
};

/// Reads the patches and stacks them; `frame_count` keeps the first k months (0 drops the
/// series).
Batch load_batch(const std::filesystem::path& root, const std::vector<std::string>& ids, int frame_count);
Batch make_batch(std::vector<PatchSample> samples, int frame_count);

}  // namespace fusu::harness
