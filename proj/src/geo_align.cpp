#include "fusu/geo_align.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fusu::geo {

namespace {

constexpr double kRelTol = 1e-9;

bool near(double a, double b, double scale) { return std::abs(a - b) <= kRelTol * scale; }

int window_size(int source, double ratio) {
    return std::max(1, round_half_up(static_cast<double>(source) * ratio));
}

}  // namespace

int round_half_up(double value) {
    return static_cast<int>(std::floor(value + 0.5 + kRelTol * std::max(1.0, std::abs(value))));
}

bool GeoFootprint::contains(const GeoFootprint& inner) const {
    const double scale = std::max({extent_x, extent_y, 1.0});
    const double slack = kRelTol * scale;
    return inner.center_x - inner.extent_x / 2 >= center_x - extent_x / 2 - slack &&
           inner.center_x + inner.extent_x / 2 <= center_x + extent_x / 2 + slack &&
           inner.center_y - inner.extent_y / 2 >= center_y - extent_y / 2 - slack &&
           inner.center_y + inner.extent_y / 2 <= center_y + extent_y / 2 + slack;
}

AlignmentSpec AlignmentSpec::from_footprints(const GeoFootprint& hr, const GeoFootprint& ts) {
    if (!(ts.extent_x > 0.0) || !(ts.extent_y > 0.0)) {
        throw std::invalid_argument("time-series footprint extents must be positive");
    }
    AlignmentSpec spec{hr, ts, hr.extent_x / ts.extent_x, hr.extent_y / ts.extent_y};
    spec.validate();
    return spec;
}

void AlignmentSpec::validate() const {
    for (const auto* fp : {&hr_footprint, &ts_footprint}) {
        if (!(fp->extent_x > 0.0) || !(fp->extent_y > 0.0)) {
            throw std::invalid_argument("footprint extents must be strictly positive");
        }
    }
    const double scale = std::max({ts_footprint.extent_x, ts_footprint.extent_y, 1.0});
    if (!near(hr_footprint.center_x, ts_footprint.center_x, scale) ||
        !near(hr_footprint.center_y, ts_footprint.center_y, scale)) {
        throw std::invalid_argument("high-res and time-series footprints must share a center");
    }
    if (!(ratio_x > 0.0 && ratio_x <= 1.0 + kRelTol) || !(ratio_y > 0.0 && ratio_y <= 1.0 + kRelTol)) {
        throw std::invalid_argument("alignment ratios must lie in (0, 1], got " +
                                    std::to_string(ratio_x) + ", " + std::to_string(ratio_y));
    }
    if (!near(ratio_x * ts_footprint.extent_x, hr_footprint.extent_x, scale) ||
        !near(ratio_y * ts_footprint.extent_y, hr_footprint.extent_y, scale)) {
        throw std::invalid_argument("alignment ratios disagree with the footprints");
    }
    if (!ts_footprint.contains(hr_footprint)) {
        throw std::invalid_argument("high-res footprint is not contained in the time-series footprint");
    }
}

GeoFootprint footprint_of(int size_x_px, int size_y_px, double resolution_m, Point center) {
    if (size_x_px <= 0 || size_y_px <= 0) {
        throw std::invalid_argument("footprint size must be positive");
    }
    if (!(resolution_m > 0.0)) {
        throw std::invalid_argument("footprint resolution must be positive");
    }
    return {center.x, center.y, size_x_px * resolution_m, size_y_px * resolution_m};
}

CropWindow center_crop_window(const AlignmentSpec& spec, int source_rows, int source_cols) {
    spec.validate();
    if (source_rows <= 0 || source_cols <= 0) {
        throw std::invalid_argument("crop source size must be positive");
    }
    CropWindow w;
    w.rows = std::min(window_size(source_rows, spec.ratio_y), source_rows);
    w.cols = std::min(window_size(source_cols, spec.ratio_x), source_cols);
    if (w.rows < 1 || w.cols < 1) {
        throw std::invalid_argument("crop window would be empty");
    }
    w.row_start = (source_rows - w.rows) / 2;
    w.col_start = (source_cols - w.cols) / 2;
    return w;
}

}  // namespace fusu::geo
