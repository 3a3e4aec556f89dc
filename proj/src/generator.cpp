#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fusu/dataset.hpp"
#include "fusu/random.hpp"

namespace fusu {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kSubsamples = 4;  // per axis, for mixed low-res pixels
constexpr std::uint64_t kSignatureSeed = 0x5EED0F5E57171E5ULL;

std::vector<double> default_class_frequency(int num_classes) {
    std::vector<double> freq(static_cast<std::size_t>(num_classes), 1.0);
    freq[0] = 0.2;
    return freq;
}

int draw_class(Rng& rng, const std::vector<double>& cumulative, int exclude = -1) {
    for (;;) {
        const double u = rng.uniform() * cumulative.back();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const int k = static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                 static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
        if (k != exclude) {
            return k;
        }
    }
}

/// Per-class seasonal band signatures: base + amplitude * sin(2pi (month + phase) / 12).
struct SignatureTable {
    int bands = 0;
    std::vector<double> base;       // class x band
    std::vector<double> amplitude;  // class x band
    std::vector<double> phase;      // class
    double month_shift = 0.0;

    double value(int label, int month, int band) const {
        const auto kb = static_cast<std::size_t>(label) * bands + band;
        return base[kb] + amplitude[kb] * std::sin(2.0 * kPi * (month + phase[label] + month_shift) / 12.0);
    }
};

SignatureTable make_signatures(int bands, Region region) {
    Rng rng(kSignatureSeed);
    SignatureTable t;
    t.bands = bands;
    t.base.resize(static_cast<std::size_t>(kNumClasses) * bands);
    t.amplitude.resize(t.base.size());
    t.phase.resize(kNumClasses);
    for (int k = 0; k < kNumClasses; ++k) {
        t.phase[k] = 12.0 * rng.uniform();
        for (int b = 0; b < bands; ++b) {
            t.base[static_cast<std::size_t>(k) * bands + b] = 0.15 + 0.7 * rng.uniform();
            t.amplitude[static_cast<std::size_t>(k) * bands + b] = 0.15 * rng.uniform();
        }
    }
    if (region == Region::B) {
        t.month_shift = 2.0;
        for (auto& v : t.base) {
            v = 0.9 * v + 0.05;
        }
    }
    return t;
}

std::array<double, 3> class_color(int label, Region region) {
    const auto c = class_info(label).color;
    const double scale = region == Region::B ? 0.9 : 1.0;
    return {scale * c.r / 255.0, scale * c.g / 255.0, scale * c.b / 255.0};
}

/// RMS deviation of per-class means from their average, over the classes in use.
double signal_spread(int num_classes, int dims, const auto& mean_of) {
    std::vector<double> avg(static_cast<std::size_t>(dims), 0.0);
    for (int k = 0; k < num_classes; ++k) {
        for (int d = 0; d < dims; ++d) {
            avg[d] += mean_of(k, d) / num_classes;
        }
    }
    double ss = 0.0;
    for (int k = 0; k < num_classes; ++k) {
        for (int d = 0; d < dims; ++d) {
            const double diff = mean_of(k, d) - avg[d];
            ss += diff * diff;
        }
    }
    return std::sqrt(ss / (static_cast<double>(num_classes) * dims));
}

struct Site {
    double x = 0.0;
    double y = 0.0;
    int class_t1 = 0;
    int class_t2 = 0;
    int change_frame = 0;  // first frame showing class_t2
};

int nearest_site(const std::vector<Site>& sites, double x, double y) {
    int best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const double dx = sites[i].x - x;
        const double dy = sites[i].y - y;
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

}  // namespace

GeneratorConfig GeneratorConfig::full_geometry() {
    GeneratorConfig cfg;
    cfg.hr_size = 512;
    cfg.hr_resolution_m = 0.5;
    cfg.ts_size = 128;
    cfg.ts_resolution_m = 10.0;
    return cfg;
}

void GeneratorConfig::validate() const {
    if (hr_size <= 0 || ts_size <= 0 || frames <= 0 || bands <= 0) {
        throw std::invalid_argument("generator: grid sizes, frames and bands must be positive");
    }
    if (!(hr_resolution_m >= 0.2 && hr_resolution_m <= 0.5)) {
        throw std::invalid_argument("generator: high-res resolution must lie in [0.2, 0.5] m");
    }
    if (!(ts_resolution_m > 0.0)) {
        throw std::invalid_argument("generator: time-series resolution must be positive");
    }
    if (hr_size * hr_resolution_m > ts_size * ts_resolution_m) {
        throw std::invalid_argument("generator: high-res footprint must fit inside the time-series footprint");
    }
    if (num_classes < 2 || num_classes > kNumClasses) {
        throw std::invalid_argument("generator: class count must lie in 2..18");
    }
    if (!(change_fraction >= 0.0 && change_fraction <= 1.0)) {
        throw std::invalid_argument("generator: change fraction must lie in [0, 1], got " +
                                    std::to_string(change_fraction));
    }
    if (!(signal_to_noise > 0.0)) {
        throw std::invalid_argument("generator: signal-to-noise must be positive");
    }
    if (!(polygons_per_patch > 0.0)) {
        throw std::invalid_argument("generator: polygons per patch must be positive");
    }
    if (!class_frequency.empty()) {
        if (class_frequency.size() != static_cast<std::size_t>(num_classes)) {
            throw std::invalid_argument("generator: class frequency needs one entry per class");
        }
        if (std::any_of(class_frequency.begin(), class_frequency.end(), [](double f) { return f < 0.0; }) ||
            std::accumulate(class_frequency.begin(), class_frequency.end(), 0.0) <= 0.0) {
            throw std::invalid_argument("generator: class frequencies must be non-negative with a positive sum");
        }
    }
}

std::string patch_id(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "p%05d", index);
    return buf;
}

PatchSample generate_patch(std::uint64_t seed, const GeneratorConfig& cfg) {
    cfg.validate();
    Rng rng(seed);

    const auto freq = cfg.class_frequency.empty() ? default_class_frequency(cfg.num_classes)
                                                  : cfg.class_frequency;
    std::vector<double> cumulative(freq.size());
    std::partial_sum(freq.begin(), freq.end(), cumulative.begin());

    PatchSample s;
    s.id = "seed" + std::to_string(seed);
    s.region = cfg.region;

    const geo::Point center{std::floor(rng.uniform() * 1.0e5), std::floor(rng.uniform() * 1.0e5)};
    const auto hr_fp = geo::footprint_of(cfg.hr_size, cfg.hr_resolution_m, center);
    const auto ts_fp = geo::footprint_of(cfg.ts_size, cfg.ts_resolution_m, center);
    s.alignment = geo::AlignmentSpec::from_footprints(hr_fp, ts_fp);

    // Voronoi sites over the whole time-series footprint, in coordinates relative to its
    // top-left corner.
    const double ts_extent = ts_fp.extent_x;
    const double hr_extent = hr_fp.extent_x;
    const double hr_origin = (ts_extent - hr_extent) / 2.0;
    const double area_ratio = (ts_extent * ts_extent) / (hr_extent * hr_extent);
    const int site_count = std::max(2, static_cast<int>(std::lround(cfg.polygons_per_patch * area_ratio)));

    std::vector<Site> sites(static_cast<std::size_t>(site_count));
    for (auto& site : sites) {
        site.x = rng.uniform() * ts_extent;
        site.y = rng.uniform() * ts_extent;
        site.class_t1 = draw_class(rng, cumulative);
        site.class_t2 = site.class_t1;
    }

    // Polygon index of every high-res pixel.
    const int H = cfg.hr_size;
    Grid<int> hr_poly(H, H);
    std::vector<std::size_t> hr_area(sites.size(), 0);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < H; ++c) {
            const int p = nearest_site(sites, hr_origin + (c + 0.5) * cfg.hr_resolution_m,
                                       hr_origin + (r + 0.5) * cfg.hr_resolution_m);
            hr_poly.at(r, c) = p;
            ++hr_area[static_cast<std::size_t>(p)];
        }
    }

    // Change whole polygons until the changed high-res area is closest to the target.
    std::vector<int> order(sites.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    const double target = cfg.change_fraction * static_cast<double>(H) * H;
    double changed_area = 0.0;
    std::vector<bool> changed(sites.size(), false);
    for (const int p : order) {
        const double area = static_cast<double>(hr_area[static_cast<std::size_t>(p)]);
        if (area > 0.0) {
            if (std::abs(changed_area + area - target) < std::abs(changed_area - target)) {
                changed[static_cast<std::size_t>(p)] = true;
                changed_area += area;
            }
        } else if (rng.uniform() < cfg.change_fraction) {
            changed[static_cast<std::size_t>(p)] = true;
        }
    }
    for (std::size_t i = 0; i < sites.size(); ++i) {
        auto& site = sites[i];
        site.change_frame = cfg.frames;
        if (changed[i]) {
            site.class_t2 = draw_class(rng, cumulative, site.class_t1);
            site.change_frame = cfg.frames > 1 ? 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.frames - 1))) : 0;
        }
    }

    s.y1 = LabelMap(H, H);
    s.y2 = LabelMap(H, H);
    for (std::size_t i = 0; i < hr_poly.values.size(); ++i) {
        const auto& site = sites[static_cast<std::size_t>(hr_poly.values[i])];
        s.y1.values[i] = static_cast<std::uint8_t>(site.class_t1);
        s.y2.values[i] = static_cast<std::uint8_t>(site.class_t2);
    }

    // High-res images: class color + per-polygon tint + per-image brightness + pixel noise.
    const double hr_noise = signal_spread(cfg.num_classes, 3, [&](int k, int d) {
                                return class_color(k, cfg.region)[static_cast<std::size_t>(d)];
                            }) / cfg.signal_to_noise;
    std::vector<std::array<double, 3>> tint(sites.size());
    for (auto& t : tint) {
        for (auto& v : t) {
            v = 0.03 * rng.normal();
        }
    }
    auto render = [&](const LabelMap& y, HighResImage& img) {
        img = HighResImage(H, H, cfg.hr_resolution_m);
        const double brightness = 0.02 * rng.normal();
        for (int b = 0; b < 3; ++b) {
            for (int r = 0; r < H; ++r) {
                for (int c = 0; c < H; ++c) {
                    const auto color = class_color(y.at(r, c), cfg.region);
                    const auto& poly_tint = tint[static_cast<std::size_t>(hr_poly.at(r, c))];
                    img.at(b, r, c) = clamp01(color[b] + poly_tint[b] + brightness + hr_noise * rng.normal());
                }
            }
        }
    };
    render(s.y1, s.t1);
    render(s.y2, s.t2);

    // Time series: every low-res pixel mixes the signatures of the polygons it overlaps.
    const auto signatures = make_signatures(cfg.bands, cfg.region);
    const double ts_noise = signal_spread(cfg.num_classes, cfg.bands, [&](int k, int b) {
                                return signatures.base[static_cast<std::size_t>(k) * cfg.bands + b];
                            }) / cfg.signal_to_noise;
    const int h = cfg.ts_size;
    std::vector<int> sub_poly(static_cast<std::size_t>(h) * h * kSubsamples * kSubsamples);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < h; ++c) {
            for (int i = 0; i < kSubsamples; ++i) {
                for (int j = 0; j < kSubsamples; ++j) {
                    const double y = (r + (i + 0.5) / kSubsamples) * cfg.ts_resolution_m;
                    const double x = (c + (j + 0.5) / kSubsamples) * cfg.ts_resolution_m;
                    sub_poly[((static_cast<std::size_t>(r) * h + c) * kSubsamples + i) * kSubsamples + j] =
                        nearest_site(sites, x, y);
                }
            }
        }
    }
    s.series = TimeSeriesStack(cfg.frames, cfg.bands, h, h, cfg.ts_resolution_m);
    constexpr int kPerPixel = kSubsamples * kSubsamples;
    for (int t = 0; t < cfg.frames; ++t) {
        const int month = cfg.first_month + t;
        s.series.timestamps[static_cast<std::size_t>(t)] = month;
        for (int b = 0; b < cfg.bands; ++b) {
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < h; ++c) {
                    double sum = 0.0;
                    const std::size_t base = (static_cast<std::size_t>(r) * h + c) * kPerPixel;
                    for (int k = 0; k < kPerPixel; ++k) {
                        const auto& site = sites[static_cast<std::size_t>(sub_poly[base + k])];
                        const int label = t < site.change_frame ? site.class_t1 : site.class_t2;
                        sum += signatures.value(label, month, b);
                    }
                    s.series.at(t, b, r, c) = static_cast<float>(sum / kPerPixel + ts_noise * rng.normal());
                }
            }
        }
    }
    return s;
}

}  // namespace fusu
