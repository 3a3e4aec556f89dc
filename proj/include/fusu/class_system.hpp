#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace fusu {

/// Label values 0..17; 0 is background and is ignored by losses and metrics.
inline constexpr int kNumClasses = 18;
inline constexpr std::uint8_t kIgnoreLabel = 0;

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    bool operator==(const Rgb&) const = default;
};

struct ClassInfo {
    std::uint8_t label;
    std::string_view name;
    Rgb color;
};

/// The FUSU land-use class table, ordered by label value.
const std::array<ClassInfo, kNumClasses>& class_system();

/// Throws std::out_of_range for labels outside 0..17.
const ClassInfo& class_info(int label);

inline bool is_valid_label(int label) { return label >= 0 && label < kNumClasses; }

}  // namespace fusu
