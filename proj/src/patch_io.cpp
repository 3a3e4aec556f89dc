#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "fusu/dataset.hpp"
#include "fusu/kv_text.hpp"

namespace fusu {

namespace fs = std::filesystem;

namespace {

constexpr int kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void write_array(const fs::path& path, const std::vector<T>& values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(T)));
    } else {
        for (T v : values) {
            char bytes[sizeof(T)];
            std::memcpy(bytes, &v, sizeof(T));
            std::reverse(bytes, bytes + sizeof(T));
            out.write(bytes, sizeof(T));
        }
    }
    if (!out) {
        throw std::runtime_error("short write to " + path.string());
    }
}

template <typename T>
std::vector<T> read_array(const fs::path& dir, const std::string& file, const std::string& field,
                          std::size_t count) {
    const auto path = dir / file;
    if (!fs::exists(path)) {
        throw std::runtime_error("patch " + dir.filename().string() + ": missing file " + file +
                                 " (field " + field + ")");
    }
    const auto expected = count * sizeof(T);
    const auto actual = fs::file_size(path);
    if (actual != expected) {
        throw std::runtime_error("patch " + dir.filename().string() + ": corrupt file " + file +
                                 " (field " + field + "): expected " + std::to_string(expected) +
                                 " bytes, found " + std::to_string(actual));
    }
    std::vector<T> values(count);
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(expected));
    if (!in) {
        throw std::runtime_error("patch " + dir.filename().string() + ": cannot read " + file +
                                 " (field " + field + ")");
    }
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        for (auto& v : values) {
            char bytes[sizeof(T)];
            std::memcpy(bytes, &v, sizeof(T));
            std::reverse(bytes, bytes + sizeof(T));
            std::memcpy(&v, bytes, sizeof(T));
        }
    }
    return values;
}

void set_footprint(KeyValueText& kv, const std::string& key, const geo::GeoFootprint& fp) {
    kv.set(key, std::vector<double>{fp.center_x, fp.center_y, fp.extent_x, fp.extent_y});
}

geo::GeoFootprint get_footprint(const KeyValueText& kv, const std::string& key) {
    const auto v = kv.get_double_list(key);
    if (v.size() != 4) {
        throw std::runtime_error(kv.source() + ": " + key + " needs 4 values (cx,cy,ex,ey)");
    }
    return {v[0], v[1], v[2], v[3]};
}

KeyValueText load_meta(const fs::path& dir) {
    const auto path = dir / "meta.txt";
    if (!fs::exists(path)) {
        throw std::runtime_error("patch " + dir.filename().string() + ": missing file meta.txt (field meta)");
    }
    auto meta = KeyValueText::load(path);
    const auto version = meta.get_int("format_version");
    if (version != kFormatVersion) {
        throw std::runtime_error(path.string() + ": unsupported format_version " + std::to_string(version));
    }
    return meta;
}

LabelMap read_labels(const fs::path& dir, const std::string& field, int h, int w) {
    LabelMap y;
    y.height = h;
    y.width = w;
    y.values = read_array<std::uint8_t>(dir, field + ".lbl", field, static_cast<std::size_t>(h) * w);
    if (std::any_of(y.values.begin(), y.values.end(), [](std::uint8_t v) { return !is_valid_label(v); })) {
        throw std::runtime_error("patch " + dir.filename().string() + ": corrupt file " + field +
                                 ".lbl (field " + field + "): label out of range");
    }
    return y;
}

}  // namespace

void write_patch(const PatchSample& s, const fs::path& root) {
    validate(s);
    const auto dir = root / s.id;
    fs::create_directories(dir);
    write_array(dir / "t1.img", s.t1.bands);
    write_array(dir / "t2.img", s.t2.bands);
    write_array(dir / "y1.lbl", s.y1.values);
    write_array(dir / "y2.lbl", s.y2.values);
    write_array(dir / "series.ts", s.series.values);

    KeyValueText meta;
    meta.set("format_version", kFormatVersion);
    meta.set("id", s.id);
    meta.set("region_tag", to_string(s.region));
    meta.set("hr_height", s.t1.height);
    meta.set("hr_width", s.t1.width);
    meta.set("t1_resolution_m", s.t1.resolution_m);
    meta.set("t2_resolution_m", s.t2.resolution_m);
    meta.set("ts_frames", s.series.frames);
    meta.set("ts_channels", s.series.channels);
    meta.set("ts_height", s.series.height);
    meta.set("ts_width", s.series.width);
    meta.set("ts_resolution_m", s.series.resolution_m);
    meta.set("timestamps", s.series.timestamps);
    set_footprint(meta, "hr_footprint", s.alignment.hr_footprint);
    set_footprint(meta, "ts_footprint", s.alignment.ts_footprint);
    meta.set("ratio_x", s.alignment.ratio_x);
    meta.set("ratio_y", s.alignment.ratio_y);
    meta.save(dir / "meta.txt");
}

PatchSample read_patch(const fs::path& root, const std::string& id) {
    const auto dir = root / id;
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("patch " + id + ": directory not found under " + root.string());
    }
    const auto meta = load_meta(dir);

    PatchSample s;
    s.id = meta.get("id");
    if (s.id != id) {
        throw std::runtime_error("patch " + id + ": meta.txt id is '" + s.id + "'");
    }
    s.region = parse_region(meta.get("region_tag"));
    const int h = static_cast<int>(meta.get_int("hr_height"));
    const int w = static_cast<int>(meta.get_int("hr_width"));
    const auto image_values = static_cast<std::size_t>(HighResImage::kBands) * h * w;

    s.t1.height = s.t2.height = h;
    s.t1.width = s.t2.width = w;
    s.t1.resolution_m = meta.get_double("t1_resolution_m");
    s.t2.resolution_m = meta.get_double("t2_resolution_m");
    s.t1.bands = read_array<float>(dir, "t1.img", "t1", image_values);
    s.t2.bands = read_array<float>(dir, "t2.img", "t2", image_values);
    s.y1 = read_labels(dir, "y1", h, w);
    s.y2 = read_labels(dir, "y2", h, w);

    auto& ts = s.series;
    ts.frames = static_cast<int>(meta.get_int("ts_frames"));
    ts.channels = static_cast<int>(meta.get_int("ts_channels"));
    ts.height = static_cast<int>(meta.get_int("ts_height"));
    ts.width = static_cast<int>(meta.get_int("ts_width"));
    ts.resolution_m = meta.get_double("ts_resolution_m");
    ts.timestamps = meta.get_int_list("timestamps");
    ts.values = read_array<float>(dir, "series.ts", "series",
                                  static_cast<std::size_t>(ts.frames) * ts.frame_size());

    s.alignment.hr_footprint = get_footprint(meta, "hr_footprint");
    s.alignment.ts_footprint = get_footprint(meta, "ts_footprint");
    s.alignment.ratio_x = meta.get_double("ratio_x");
    s.alignment.ratio_y = meta.get_double("ratio_y");

    try {
        validate(s);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("patch " + id + ": " + e.what());
    }
    return s;
}

SampleSummary read_summary(const fs::path& root, const std::string& id) {
    const auto dir = root / id;
    const auto meta = load_meta(dir);
    const int h = static_cast<int>(meta.get_int("hr_height"));
    const int w = static_cast<int>(meta.get_int("hr_width"));
    const auto y1 = read_labels(dir, "y1", h, w);
    const auto y2 = read_labels(dir, "y2", h, w);
    return {id, parse_region(meta.get("region_tag")), derive_change_label(y1, y2).changed_pixels()};
}

std::vector<std::string> list_patches(const fs::path& root) {
    std::vector<std::string> ids;
    if (!fs::is_directory(root)) {
        throw std::runtime_error("dataset root not found: " + root.string());
    }
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "meta.txt")) {
            ids.push_back(entry.path().filename().string());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace fusu
