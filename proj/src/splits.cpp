#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "fusu/dataset.hpp"
#include "fusu/kv_text.hpp"
#include "fusu/random.hpp"

namespace fusu {

namespace {

const char* const kParts[] = {"train", "val", "test"};

std::vector<std::string> read_id_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("split manifest missing: " + path.string());
    }
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            ids.push_back(line);
        }
    }
    return ids;
}

}  // namespace

const std::vector<std::string>& SplitManifest::part(const std::string& which) const {
    if (which == "train") {
        return train;
    }
    if (which == "val") {
        return val;
    }
    if (which == "test") {
        return test;
    }
    throw std::invalid_argument("unknown split part '" + which + "' (expected train, val or test)");
}

SplitManifest build_splits(std::span<const SampleSummary> samples, const SplitRatios& ratios,
                           bool changed_only, const std::string& name, std::uint64_t seed,
                           const std::optional<Region>& region_filter) {
    if (ratios.train < 0.0 || ratios.val < 0.0 || ratios.test < 0.0 ||
        std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
        throw std::invalid_argument("split ratios must be non-negative and sum to 1");
    }

    std::vector<std::string> ids;
    for (const auto& s : samples) {
        if (region_filter && s.region != *region_filter) {
            continue;
        }
        if (changed_only && s.changed_pixels == 0) {
            continue;
        }
        ids.push_back(s.id);
    }
    if (ids.empty()) {
        throw std::invalid_argument("split '" + name + "': no samples left after filtering");
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw std::invalid_argument("split '" + name + "': duplicate sample ids");
    }

    Rng rng(seed);
    for (std::size_t i = ids.size(); i > 1; --i) {
        std::swap(ids[i - 1], ids[rng.below(i)]);
    }

    const auto n = static_cast<double>(ids.size());
    auto n_train = static_cast<std::size_t>(std::llround(n * ratios.train));
    auto n_val = static_cast<std::size_t>(std::llround(n * ratios.val));
    n_train = std::min(n_train, ids.size());
    n_val = std::min(n_val, ids.size() - n_train);

    SplitManifest m;
    m.name = name;
    m.changed_only = changed_only;
    m.region_filter = region_filter ? to_string(*region_filter) : "";
    m.seed = seed;
    m.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    m.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                 ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    m.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
    return m;
}

void write_manifest(const SplitManifest& manifest, const std::filesystem::path& root) {
    const auto dir = root / "splits";
    std::filesystem::create_directories(dir);
    for (const char* which : kParts) {
        std::ofstream out(dir / (manifest.name + "." + which), std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write split manifest in " + dir.string());
        }
        for (const auto& id : manifest.part(which)) {
            out << id << '\n';
        }
    }
    KeyValueText info;
    info.set("changed_only", manifest.changed_only);
    info.set("region_filter", manifest.region_filter);
    info.set("seed", std::to_string(manifest.seed));
    info.save(dir / (manifest.name + ".info"));
}

SplitManifest read_manifest(const std::filesystem::path& root, const std::string& name) {
    const auto dir = root / "splits";
    SplitManifest m;
    m.name = name;
    m.train = read_id_list(dir / (name + ".train"));
    m.val = read_id_list(dir / (name + ".val"));
    m.test = read_id_list(dir / (name + ".test"));
    const auto info_path = dir / (name + ".info");
    if (std::filesystem::exists(info_path)) {
        const auto info = KeyValueText::load(info_path);
        m.changed_only = info.get_bool("changed_only");
        m.region_filter = info.find("region_filter").value_or("");
        m.seed = static_cast<std::uint64_t>(std::stoull(info.find("seed").value_or("0")));
    }
    return m;
}

}  // namespace fusu
