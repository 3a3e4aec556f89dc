#include <algorithm>
#include <stdexcept>

#include "fusu/dataset.hpp"

namespace fusu {

namespace {

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) {
        throw std::invalid_argument(field + ": " + message);
    }
}

void validate_labels(const LabelMap& y, const std::string& field) {
    require(y.height > 0 && y.width > 0, field, "empty label map");
    require(y.values.size() == static_cast<std::size_t>(y.height) * y.width, field,
            "value count does not match shape");
    const auto bad = std::find_if(y.values.begin(), y.values.end(),
                                  [](std::uint8_t v) { return !is_valid_label(v); });
    require(bad == y.values.end(), field, "label value out of range");
}

void validate_image(const HighResImage& img, const std::string& field) {
    require(img.height > 0 && img.width > 0, field, "empty image");
    require(img.bands.size() == static_cast<std::size_t>(HighResImage::kBands) * img.height * img.width,
            field, "band data does not match 3 x H x W");
    require(img.resolution_m >= 0.2 && img.resolution_m <= 0.5, field,
            "resolution must lie in [0.2, 0.5] m");
}

}  // namespace

std::size_t ChangeLabel::changed_pixels() const {
    return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

std::string to_string(Region region) { return region == Region::A ? "A" : "B"; }

Region parse_region(const std::string& text) {
    if (text == "A" || text == "a") {
        return Region::A;
    }
    if (text == "B" || text == "b") {
        return Region::B;
    }
    throw std::invalid_argument("unknown region '" + text + "' (expected A or B)");
}

ChangeLabel derive_change_label(const LabelMap& y1, const LabelMap& y2) {
    if (!y1.same_shape(y2)) {
        throw std::invalid_argument("derive_change_label: shape mismatch " +
                                    std::to_string(y1.height) + "x" + std::to_string(y1.width) +
                                    " vs " + std::to_string(y2.height) + "x" +
                                    std::to_string(y2.width));
    }
    ChangeLabel change(y1.height, y1.width);
    std::transform(y1.values.begin(), y1.values.end(), y2.values.begin(), change.values.begin(),
                   [](std::uint8_t a, std::uint8_t b) { return static_cast<std::uint8_t>(a != b); });
    return change;
}

void validate(const PatchSample& s) {
    require(!s.id.empty(), "id", "empty sample id");
    validate_image(s.t1, "t1");
    validate_image(s.t2, "t2");
    validate_labels(s.y1, "y1");
    validate_labels(s.y2, "y2");
    require(s.t1.height == s.y1.height && s.t1.width == s.y1.width, "t1",
            "image and label grids differ");
    require(s.t2.height == s.t1.height && s.t2.width == s.t1.width, "t2", "t1/t2 grids differ");
    require(s.y2.same_shape(s.y1), "y2", "y1/y2 grids differ");

    const auto& ts = s.series;
    require(ts.frames > 0 && ts.channels > 0 && ts.height > 0 && ts.width > 0, "series",
            "empty stack");
    require(ts.values.size() == static_cast<std::size_t>(ts.frames) * ts.frame_size(), "series",
            "value count does not match T x C x h x w");
    require(ts.timestamps.size() == static_cast<std::size_t>(ts.frames), "series",
            "timestamp count differs from frame count");
    for (std::size_t i = 1; i < ts.timestamps.size(); ++i) {
        require(ts.timestamps[i] > ts.timestamps[i - 1], "series",
                "timestamps must be strictly increasing");
    }
    require(ts.resolution_m > 0.0, "series", "resolution must be positive");

    try {
        s.alignment.validate();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("alignment: ") + e.what());
    }
    const double hr_x = s.t1.width * s.t1.resolution_m;
    const double hr_y = s.t1.height * s.t1.resolution_m;
    const double ts_x = ts.width * ts.resolution_m;
    const double ts_y = ts.height * ts.resolution_m;
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, b); };
    require(close(s.alignment.hr_footprint.extent_x, hr_x) &&
                close(s.alignment.hr_footprint.extent_y, hr_y),
            "alignment", "high-res footprint does not match image size x resolution");
    require(close(s.alignment.ts_footprint.extent_x, ts_x) &&
                close(s.alignment.ts_footprint.extent_y, ts_y),
            "alignment", "time-series footprint does not match stack size x resolution");
}

SampleSummary summarize(const PatchSample& sample) {
    return {sample.id, sample.region, derive_change_label(sample.y1, sample.y2).changed_pixels()};
}

}  // namespace fusu
