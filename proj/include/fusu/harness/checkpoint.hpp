#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <torch/torch.h>

#include "fusu/kv_text.hpp"

namespace fusu::harness {

/// On-disk checkpoint:
///
///   FUSU-CKPT 1\n
///   <header byte count, decimal>\n
///   <header: key=value lines>
///   then per tensor, all integers little-endian:
///     u32 name length, name bytes, u8 dtype (0 float32, 1 float64, 2 int64),
///     u32 rank, i64 dims[rank], raw element data
///
/// The header carries the step, the run config and the tensor count. Tensor names are
/// "model/<parameter>" and "optim/<parameter>/<slot>".
struct Checkpoint {
    KeyValueText header;
    std::map<std::string, torch::Tensor> tensors;

    /// Tensors under `prefix` with the prefix stripped.
    std::map<std::string, torch::Tensor> with_prefix(const std::string& prefix) const;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fusu::harness
