#include "fusu/harness/batching.hpp"

#include <algorithm>

#include "fusu/random.hpp"
#include "fusu/tensor_ops.hpp"

namespace fusu::harness {

BatchOrder::BatchOrder(std::vector<std::string> ids, std::uint64_t seed) : ids_(std::move(ids)), seed_(seed) {
    check(!ids_.empty(), "batching: no samples to draw from");
}

std::vector<std::string> BatchOrder::epoch_order(long long epoch) const {
    std::vector<std::string> order = ids_;
    Rng rng(Rng::mix(seed_) ^ static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    return order;
}

std::vector<std::string> BatchOrder::batch(long long step, int batch_size) const {
    check(step >= 0 && batch_size >= 1, "batching: invalid step or batch size");
    const auto n = static_cast<long long>(ids_.size());
    std::vector<std::string> out;
    long long cached_epoch = -1;
    std::vector<std::string> order;
    for (long long i = step * batch_size; i < (step + 1) * batch_size; ++i) {
        const long long epoch = i / n;
        if (epoch != cached_epoch) {
            order = epoch_order(epoch);
            cached_epoch = epoch;
        }
        out.push_back(order[static_cast<std::size_t>(i % n)]);
    }
    return out;
}

Batch make_batch(std::vector<PatchSample> samples, int frame_count) {
    Batch b;
    b.samples = std::move(samples);
    std::vector<const PatchSample*> ptrs;
    std::vector<torch::Tensor> y1, y2;
    for (const auto& s : b.samples) {
        ptrs.push_back(&s);
        y1.push_back(to_tensor(s.y1));
        y2.push_back(to_tensor(s.y2));
    }
    b.inputs = make_inputs(ptrs, frame_count);
    b.y1 = torch::stack(y1);
    b.y2 = torch::stack(y2);
    return b;
}

Batch load_batch(const std::filesystem::path& root, const std::vector<std::string>& ids, int frame_count) {
    std::vector<PatchSample> samples;
    samples.reserve(ids.size());
    for (const auto& id : ids) {
        samples.push_back(read_patch(root, id));
    }
    return make_batch(std::move(samples), frame_count);
}

}  // namespace fusu::harness
