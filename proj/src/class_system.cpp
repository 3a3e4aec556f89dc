#include "fusu/class_system.hpp"

#include <stdexcept>
#include <string>

namespace fusu {

const std::array<ClassInfo, kNumClasses>& class_system() {
    static constexpr std::array<ClassInfo, kNumClasses> kTable{{
        {0, "background", {0xFF, 0xFF, 0xFF}},
        {1, "traffic land", {0xE9, 0x85, 0x85}},
        {2, "inland water", {0x08, 0x9A, 0xE6}},
        {3, "residential land", {0xFF, 0x00, 0x1E}},
        {4, "cropland", {0x7E, 0xD3, 0x21}},
        {5, "agriculture construction", {0x87, 0x7E, 0x14}},
        {6, "blank", {0x5E, 0x2F, 0x04}},
        {7, "industrial land", {0x0A, 0x52, 0x4D}},
        {8, "orchard", {0xB8, 0xE9, 0x86}},
        {9, "park", {0xDB, 0xAA, 0xE6}},
        {10, "public management", {0xFF, 0xC7, 0x02}},
        {11, "commercial land", {0xFC, 0xE8, 0x05}},
        {12, "public construction", {0xF5, 0x6B, 0x00}},
        {13, "special land", {0xF3, 0xE5, 0xB0}},
        {14, "forest", {0x03, 0x64, 0x00}},
        {15, "storage", {0x7F, 0x7B, 0x7F}},
        {16, "wetland", {0x34, 0xCD, 0xF9}},
        {17, "grass", {0x12, 0xE3, 0xB4}},
    }};
    return kTable;
}

const ClassInfo& class_info(int label) {
    if (!is_valid_label(label)) {
        throw std::out_of_range("label " + std::to_string(label) + " is outside 0.." +
                                std::to_string(kNumClasses - 1));
    }
    return class_system()[static_cast<std::size_t>(label)];
}

}  // namespace fusu
