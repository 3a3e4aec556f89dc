#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fusu/class_system.hpp"
#include "fusu/geo_align.hpp"

namespace fusu {

/// Row-major H x W grid.
template <typename T>
struct Grid {
    int height = 0;
    int width = 0;
    std::vector<T> values;

    Grid() = default;
    Grid(int h, int w, T fill = T{})
        : height(h), width(w), values(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

    T& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }
    const T& at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
    std::size_t size() const { return values.size(); }
    bool same_shape(const Grid& other) const { return height == other.height && width == other.width; }

    bool operator==(const Grid&) const = default;
};

/// Per-pixel land-use labels in 0..17.
struct LabelMap : Grid<std::uint8_t> {
    using Grid::Grid;
    bool operator==(const LabelMap&) const = default;
};

/// Per-pixel binary change target: 1 where the two label maps differ.
struct ChangeLabel : Grid<std::uint8_t> {
    using Grid::Grid;
    bool operator==(const ChangeLabel&) const = default;

    std::size_t changed_pixels() const;
};

/// RGB image, band-major 3 x H x W, values in [0, 1].
struct HighResImage {
    static constexpr int kBands = 3;

    int height = 0;
    int width = 0;
    double resolution_m = 0.5;
    std::vector<float> bands;

    HighResImage() = default;
    HighResImage(int h, int w, double resolution)
        : height(h), width(w), resolution_m(resolution),
          bands(static_cast<std::size_t>(kBands) * h * w, 0.0f) {}

    float& at(int band, int row, int col) {
        return bands[(static_cast<std::size_t>(band) * height + row) * width + col];
    }
    float at(int band, int row, int col) const {
        return bands[(static_cast<std::size_t>(band) * height + row) * width + col];
    }

    bool operator==(const HighResImage&) const = default;
};

/// Monthly multispectral stack, T x C x h x w, with month-index timestamps.
struct TimeSeriesStack {
    int frames = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    double resolution_m = 10.0;
    std::vector<int> timestamps;
    std::vector<float> values;

    TimeSeriesStack() = default;
    TimeSeriesStack(int t, int c, int h, int w, double resolution)
        : frames(t), channels(c), height(h), width(w), resolution_m(resolution),
          timestamps(static_cast<std::size_t>(t)),
          values(static_cast<std::size_t>(t) * c * h * w, 0.0f) {}

    float& at(int t, int c, int row, int col) { return values[index(t, c, row, col)]; }
    float at(int t, int c, int row, int col) const { return values[index(t, c, row, col)]; }
    std::size_t frame_size() const { return static_cast<std::size_t>(channels) * height * width; }

    bool operator==(const TimeSeriesStack&) const = default;

private:
    std::size_t index(int t, int c, int row, int col) const {
        return ((static_cast<std::size_t>(t) * channels + c) * height + row) * width + col;
    }
};

/// Stand-ins for the two FUSU cities.
enum class Region { A, B };

std::string to_string(Region region);
Region parse_region(const std::string& text);

/// One bi-temporal patch with its time-series context.
struct PatchSample {
    std::string id;
    HighResImage t1;
    HighResImage t2;
    LabelMap y1;
    LabelMap y2;
    TimeSeriesStack series;
    geo::AlignmentSpec alignment;
    Region region = Region::A;

    bool operator==(const PatchSample&) const = default;
};

/// Checks every structural invariant of a sample; throws std::invalid_argument naming the
/// offending field.
void validate(const PatchSample& sample);

/// 0 where the two maps agree, 1 where they differ.
ChangeLabel derive_change_label(const LabelMap& y1, const LabelMap& y2);

// ---------------------------------------------------------------------------------------
// Synthetic generator

struct GeneratorConfig {
    int hr_size = 128;
    double hr_resolution_m = 0.5;
    int ts_size = 32;
    double ts_resolution_m = 10.0;
    int frames = 25;
    int bands = 14;
    int first_month = 0;
    /// Labels drawn from 0..num_classes-1.
    int num_classes = kNumClasses;
    /// Target fraction of high-res pixels whose label changes between T1 and T2.
    double change_fraction = 0.15;
    /// Ratio of class-signal spread to noise standard deviation.
    double signal_to_noise = 4.0;
    /// Mean number of polygons whose site falls inside the high-res footprint.
    double polygons_per_patch = 8.0;
    /// Relative class frequencies, one per label; empty selects the default.
    std::vector<double> class_frequency;
    Region region = Region::A;

    /// Full FUSU geometry: 512 px at 0.5 m, 128 px at 10 m.
    static GeneratorConfig full_geometry();

    /// Throws std::invalid_argument on out-of-range settings.
    void validate() const;
};

/// Deterministic in (seed, config).
PatchSample generate_patch(std::uint64_t seed, const GeneratorConfig& config);

std::string patch_id(int index);

// ---------------------------------------------------------------------------------------
// Splits

struct SplitRatios {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

struct SplitManifest {
    std::string name;
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    bool changed_only = false;
    /// Empty when all regions were used.
    std::string region_filter;
    std::uint64_t seed = 0;

    const std::vector<std::string>& part(const std::string& which) const;
};

/// What build_splits needs to know about a sample.
struct SampleSummary {
    std::string id;
    Region region = Region::A;
    std::size_t changed_pixels = 0;
};

SampleSummary summarize(const PatchSample& sample);

/// Seeded shuffle and partition; `region_filter` restricts to one region when set.
SplitManifest build_splits(std::span<const SampleSummary> samples, const SplitRatios& ratios,
                           bool changed_only, const std::string& name, std::uint64_t seed,
                           const std::optional<Region>& region_filter = std::nullopt);

void write_manifest(const SplitManifest& manifest, const std::filesystem::path& root);
SplitManifest read_manifest(const std::filesystem::path& root, const std::string& name);

// ---------------------------------------------------------------------------------------
// On-disk layout: <root>/<id>/{t1.img, t2.img, y1.lbl, y2.lbl, series.ts, meta.txt}

void write_patch(const PatchSample& sample, const std::filesystem::path& root);
PatchSample read_patch(const std::filesystem::path& root, const std::string& id);

/// Reads only meta.txt plus the label maps.
SampleSummary read_summary(const std::filesystem::path& root, const std::string& id);

/// Patch ids present under root, sorted.
std::vector<std::string> list_patches(const std::filesystem::path& root);

}  // namespace fusu
