#include "fusu/harness/dataset_tools.hpp"

#include "fusu/kv_text.hpp"
#include "fusu/random.hpp"

namespace fusu::harness {

void generate_dataset(const std::filesystem::path& root, int count, std::uint64_t seed,
                      const GeneratorConfig& config) {
    if (count < 1) {
        throw std::invalid_argument("generate: count must be positive");
    }
    config.validate();
    std::filesystem::create_directories(root);
    for (int i = 0; i < count; ++i) {
        GeneratorConfig c = config;
        c.region = i % 2 == 0 ? Region::A : Region::B;
        auto sample = generate_patch(Rng::mix(seed) + static_cast<std::uint64_t>(i), c);
        sample.id = patch_id(i);
        write_patch(sample, root);
    }
    KeyValueText info;
    info.set("count", count);
    info.set("seed", static_cast<long long>(seed));
    info.set("num_classes", config.num_classes);
    info.set("hr_size", config.hr_size);
    info.set("hr_resolution_m", config.hr_resolution_m);
    info.set("ts_size", config.ts_size);
    info.set("ts_resolution_m", config.ts_resolution_m);
    info.set("frames", config.frames);
    info.set("bands", config.bands);
    info.set("change_fraction", config.change_fraction);
    info.set("signal_to_noise", config.signal_to_noise);
    info.save(root / "dataset.info");
}

std::optional<int> dataset_num_classes(const std::filesystem::path& root) {
    const auto path = root / "dataset.info";
    if (!std::filesystem::exists(path)) {
        return std::nullopt;
    }
    return static_cast<int>(KeyValueText::load(path).get_int("num_classes"));
}

}  // namespace fusu::harness
