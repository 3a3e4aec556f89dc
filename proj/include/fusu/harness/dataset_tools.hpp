#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "fusu/dataset.hpp"

namespace fusu::harness {

/// Writes `count` generated patches p00000.. under root. Patch i uses seed (seed, i) and
/// region A for even i, B for odd i. Also writes <root>/dataset.info.
void generate_dataset(const std::filesystem::path& root, int count, std::uint64_t seed,
                      const GeneratorConfig& config);

/// Class count recorded in <root>/dataset.info, if the file exists.
std::optional<int> dataset_num_classes(const std::filesystem::path& root);

}  // namespace fusu::harness
