#pragma once

namespace fusu::geo {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Ground extent of a patch in a shared local metric frame.
struct GeoFootprint {
    double center_x = 0.0;
    double center_y = 0.0;
    double extent_x = 0.0;
    double extent_y = 0.0;

    bool contains(const GeoFootprint& inner) const;
    bool operator==(const GeoFootprint&) const = default;
};

/// Relationship between a high-res footprint and the enclosing time-series footprint.
/// The ratios are hr extent over ts extent per axis.
struct AlignmentSpec {
    GeoFootprint hr_footprint;
    GeoFootprint ts_footprint;
    double ratio_x = 1.0;
    double ratio_y = 1.0;

    /// Builds and validates a spec from two footprints.
    static AlignmentSpec from_footprints(const GeoFootprint& hr, const GeoFootprint& ts);

    /// Throws std::invalid_argument if centers differ, ratios leave (0, 1] or hr is not
    /// contained in ts.
    void validate() const;

    bool operator==(const AlignmentSpec&) const = default;
};

/// Integer pixel window inside a source grid.
struct CropWindow {
    int row_start = 0;
    int col_start = 0;
    int rows = 0;
    int cols = 0;

    bool operator==(const CropWindow&) const = default;
};

/// extent = size_px * resolution_m on each axis, centered at `center`.
GeoFootprint footprint_of(int size_x_px, int size_y_px, double resolution_m, Point center = {});
inline GeoFootprint footprint_of(int size_px, double resolution_m, Point center = {}) {
    return footprint_of(size_px, size_px, resolution_m, center);
}

/// Centered window covering the hr footprint inside a source grid spanning the ts footprint.
///
/// Window size is round-half-up(source * ratio), at least 1; the offset is
/// floor((source - size) / 2).
CropWindow center_crop_window(const AlignmentSpec& spec, int source_rows, int source_cols);
inline CropWindow center_crop_window(const AlignmentSpec& spec, int source_size_px) {
    return center_crop_window(spec, source_size_px, source_size_px);
}

/// Round-half-up with a relative guard so that values like 32.4999999999 coming from
/// ratio arithmetic resolve to the intended half.
int round_half_up(double value);

}  // namespace fusu::geo
