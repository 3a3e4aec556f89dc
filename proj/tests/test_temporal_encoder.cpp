#include <random>

#include <gtest/gtest.h>

#include "fusu/temporal_encoder.hpp"
#include "support.hpp"

using namespace fusu;
using namespace fusu::temporal;

namespace {

TemporalEncoderConfig micro() {
    TemporalEncoderConfig c;
    c.in_channels = 4;
    c.out_channels = 4;
    c.widths = {4, 4};
    c.attention_heads = 2;
    c.key_dim = 2;
    return c;
}

torch::Tensor months_for(int64_t t) { return torch::arange(t, torch::kFloat32); }

TimeSeriesStack random_stack(int t, int c, int h, int w, std::uint64_t seed) {
    TimeSeriesStack s(t, c, h, w, 10.0);
    std::mt19937 rng(static_cast<unsigned>(seed));
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    for (auto& v : s.values) {
        v = d(rng);
    }
    for (int i = 0; i < t; ++i) {
        s.timestamps[static_cast<std::size_t>(i)] = i;
    }
    return s;
}

}  // namespace

TEST(TemporalEncoder, OutputShapeMatchesInputOverRandomConfigs) {
    torch::manual_seed(0);
    std::mt19937 rng(1);
    for (int trial = 0; trial < 8; ++trial) {
        TemporalEncoderConfig c;
        c.in_channels = 1 + static_cast<int>(rng() % 6);
        c.out_channels = 1 + static_cast<int>(rng() % 9);
        const int depth = 2 + static_cast<int>(rng() % 2);
        c.attention_heads = 1 + static_cast<int>(rng() % 2);
        c.widths.clear();
        for (int i = 0; i < depth; ++i) {
            c.widths.push_back(c.attention_heads * (2 + static_cast<int>(rng() % 3)));
        }
        c.key_dim = 2;
        const int64_t h = 4 + static_cast<int64_t>(rng() % 13);
        const int64_t w = 4 + static_cast<int64_t>(rng() % 13);
        const int64_t t = 1 + static_cast<int64_t>(rng() % 5);
        TemporalEncoder enc(c);
        auto out = enc->forward(torch::rand({2, t, c.in_channels, h, w}), months_for(t));
        EXPECT_EQ(out.feature.sizes(), (std::vector<int64_t>{2, c.out_channels, h, w})) << "trial " << trial;
    }
}

TEST(TemporalEncoder, SingleFrameIsValid) {
    torch::manual_seed(0);
    TemporalEncoder enc(micro());
    auto out = enc->forward(torch::rand({1, 1, 4, 8, 8}), months_for(1), torch::ones({1}, torch::kBool));
    EXPECT_TRUE(torch::isfinite(out.feature).all().item<bool>());
    EXPECT_TRUE(torch::allclose(out.attention, torch::ones_like(out.attention)));
}

TEST(TemporalEncoder, AttentionIsADistributionOverUnmaskedSteps) {
    torch::manual_seed(2);
    TemporalEncoder enc(micro());
    auto mask = torch::tensor({true, false, true, true, false, true}).to(torch::kBool);
    auto out = enc->forward(torch::rand({2, 6, 4, 8, 8}), months_for(6), mask);
    const auto& a = out.attention;  // heads x B x T x h x w
    EXPECT_GE(a.min().item<float>(), 0.0f);
    EXPECT_TRUE(torch::allclose(a.sum(2), torch::ones_like(a.sum(2)), 1e-6, 1e-6));
    EXPECT_EQ(a.select(2, 1).abs().max().item<float>(), 0.0f);
    EXPECT_EQ(a.select(2, 4).abs().max().item<float>(), 0.0f);
}

TEST(TemporalEncoder, MaskEqualsTruncation) {
    torch::manual_seed(3);
    TemporalEncoderConfig c = micro();
    c.widths = {4, 8, 8};
    TemporalEncoder enc(c);
    const auto stack = random_stack(7, 4, 12, 12, 5);
    for (int k = 1; k <= 7; ++k) {
        std::vector<bool> mask(7, false);
        std::fill(mask.begin(), mask.begin() + k, true);
        const auto masked = encode_series(enc, stack, mask);

        TimeSeriesStack cut(k, 4, 12, 12, 10.0);
        std::copy(stack.values.begin(), stack.values.begin() + static_cast<std::ptrdiff_t>(k * stack.frame_size()),
                  cut.values.begin());
        std::copy(stack.timestamps.begin(), stack.timestamps.begin() + k, cut.timestamps.begin());
        const auto truncated = encode_series(enc, cut, std::vector<bool>(static_cast<std::size_t>(k), true));
        EXPECT_LE((masked.data - truncated.data).abs().max().item<float>(), 1e-5f) << "k=" << k;
    }
}

TEST(TemporalEncoder, RejectsBadInputs) {
    TemporalEncoder enc(micro());
    EXPECT_THROW(enc->forward(torch::rand({1, 3, 5, 8, 8}), months_for(3)), std::invalid_argument);
    EXPECT_THROW(enc->forward(torch::rand({1, 3, 4, 8, 8}), months_for(3), torch::zeros({3}, torch::kBool)),
                 std::invalid_argument);
    const auto stack = random_stack(3, 4, 8, 8, 1);
    EXPECT_THROW(encode_series(enc, stack, {true, true}), std::invalid_argument);
    auto bad = micro();
    bad.widths = {4};
    EXPECT_THROW(TemporalEncoder{bad}, std::invalid_argument);
}

TEST(TemporalEncoder, EncodeSeriesCarriesGeometry) {
    TemporalEncoder enc(micro());
    const auto stack = random_stack(2, 4, 8, 8, 4);
    const auto fp = geo::footprint_of(8, 10.0, {5.0, 5.0});
    const auto f = encode_series(enc, stack, {true, true}, fp);
    EXPECT_EQ(f.data.sizes(), (std::vector<int64_t>{4, 8, 8}));
    EXPECT_EQ(f.footprint, fp);
    EXPECT_DOUBLE_EQ(f.resolution_m, 10.0);
}

TEST(TemporalEncoder, PreUpsampleFlagReproducesStatedShape) {
    auto c = micro();
    c.pre_upsample_to = 32;
    TemporalEncoder enc(c);
    auto out = enc->forward(torch::rand({1, 2, 4, 8, 8}), months_for(2));
    EXPECT_EQ(out.feature.sizes(), (std::vector<int64_t>{1, 4, 32, 32}));
}

TEST(TemporalEncoder, MonthEncodingIsSinusoidal) {
    auto e = month_encoding(torch::tensor({0.0f, 3.0f}), 4);
    ASSERT_EQ(e.sizes(), (std::vector<int64_t>{2, 4}));
    EXPECT_FLOAT_EQ(e[0][0].item<float>(), 0.0f);
    EXPECT_FLOAT_EQ(e[0][1].item<float>(), 1.0f);
    EXPECT_NEAR(e[1][0].item<float>(), std::sin(3.0), 1e-6);
    EXPECT_NEAR(e[1][2].item<float>(), std::sin(3.0 / std::pow(1000.0, 2.0 / 4.0)), 1e-6);
}

TEST(SeriesHead, ShapeAndSoftmax) {
    SeriesHead head(64, 18);
    auto logits = head->forward(torch::rand({64, 16, 16}));
    EXPECT_EQ(logits.sizes(), (std::vector<int64_t>{18, 16, 16}));
    auto p = torch::softmax(logits, 0).sum(0);
    EXPECT_TRUE(torch::allclose(p, torch::ones_like(p), 1e-6, 1e-6));
}

TEST(TemporalEncoder, GradientsMatchFiniteDifferences) {
    torch::manual_seed(4);
    TemporalEncoder enc(micro());
    enc->to(torch::kFloat64);
    testutil::jitter_parameters(*enc);
    auto frames = torch::rand({1, 3, 4, 8, 8}, torch::kFloat64);
    auto months = torch::arange(3, torch::kFloat64);
    auto target = torch::randn({1, 4, 8, 8}, torch::kFloat64);
    auto loss = [&] { return ((enc->forward(frames, months).feature - target).pow(2)).mean(); };
    const auto r = testutil::check_gradients(*enc, loss);
    EXPECT_LE(r.worst, 1e-3) << r.worst_name << " |a|=" << r.worst_analytic << " |n|=" << r.worst_numeric;
}
