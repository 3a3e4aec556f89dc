#include <set>

#include <gtest/gtest.h>

#include "fusu/bitemporal_net.hpp"
#include "fusu/fusu_net.hpp"
#include "support.hpp"

using namespace fusu;
using namespace fusu::bitemporal;

namespace {

BackboneConfig micro_backbone() {
    BackboneConfig c;
    c.stage_widths = {8, 8};
    c.output_stride = 4;
    c.exchange_units = 1;
    c.out_channels = 8;
    return c;
}

HeadConfig micro_head() {
    HeadConfig h;
    h.channels = 8;
    h.aspp_rates = {1, 2};
    h.pyramid_bins = {1, 2};
    return h;
}

std::set<std::string> names_under(const torch::nn::Module& m, const std::string& prefix) {
    std::set<std::string> out;
    for (const auto& item : m.named_parameters()) {
        if (item.key().rfind(prefix, 0) == 0) {
            out.insert(item.key().substr(prefix.size()));
        }
    }
    return out;
}

}  // namespace

TEST(Backbone, HighResStrideAndDeterminism) {
    torch::manual_seed(0);
    Backbone net(BackboneConfig{});
    auto image = torch::rand({1, 3, 128, 128});
    auto a = net->forward(image);
    auto b = net->forward(image);
    EXPECT_EQ(a.high_res.sizes(), (std::vector<int64_t>{1, 64, 32, 32}));
    EXPECT_EQ(a.streams.size(), 2u);
    EXPECT_EQ(a.streams[1].size(2), 16);
    EXPECT_TRUE(torch::equal(a.high_res, b.high_res));
}

TEST(Backbone, RejectsWrongBandCount) {
    Backbone net(micro_backbone());
    EXPECT_THROW(net->forward(torch::rand({1, 4, 32, 32})), std::invalid_argument);
    EXPECT_THROW(net->forward(torch::rand({1, 3, 30, 32})), std::invalid_argument);
}

TEST(Backbone, SwappingInputsSwapsFeatures) {
    torch::manual_seed(1);
    Backbone net(micro_backbone());
    auto t1 = torch::rand({1, 3, 32, 32});
    auto t2 = torch::rand({1, 3, 32, 32});
    auto ab = net->forward(torch::cat({t1, t2})).high_res;
    auto ba = net->forward(torch::cat({t2, t1})).high_res;
    EXPECT_TRUE(torch::equal(ab[0], ba[1]));
    EXPECT_TRUE(torch::equal(ab[1], ba[0]));
}

TEST(SegmentHead, ShapeAndSeparateParameters) {
    torch::manual_seed(2);
    SegmentHead h1(8, 18, micro_head());
    SegmentHead h2(8, 18, micro_head());
    auto f = torch::rand({1, 8, 16, 16});
    auto o1 = h1->forward(f, {}, 64, 64);
    auto o2 = h2->forward(f, {}, 64, 64);
    EXPECT_EQ(o1.logits.sizes(), (std::vector<int64_t>{1, 18, 64, 64}));
    EXPECT_GT((o1.logits - o2.logits).abs().max().item<float>(), 0.0f);
    EXPECT_THROW(h1->forward(f, torch::rand({1, 8, 8, 8}), 64, 64), std::invalid_argument);
}

TEST(ChangeHead, DifferenceSemantics) {
    torch::manual_seed(3);
    ChangeHead head(8, micro_head());
    auto f = torch::rand({2, 8, 16, 16});
    auto same = head->forward(f, f, 64, 64);
    auto zero = head->from_difference(torch::zeros_like(f), 64, 64);
    EXPECT_EQ(same.sizes(), (std::vector<int64_t>{2, 1, 64, 64}));
    EXPECT_TRUE(torch::equal(same, zero));

    auto g = torch::rand({2, 8, 16, 16});
    EXPECT_TRUE(torch::equal(head->forward(g, f, 64, 64), head->from_difference(-(f - g), 64, 64)));
    EXPECT_THROW(head->forward(f, torch::rand({2, 8, 8, 8}), 64, 64), std::invalid_argument);
}

TEST(ChangeHead, UpsamplesToLabelSize) {
    ChangeHead head(64, HeadConfig{});
    auto f = torch::rand({1, 64, 128, 128});
    EXPECT_EQ(head->forward(f, f * 0.5, 512, 512).sizes(), (std::vector<int64_t>{1, 1, 512, 512}));
}

TEST(FusuNet, ParameterSetsAreSharedOrDisjoint) {
    FusuNet net(FusuNetConfig::micro());
    const auto h1 = names_under(*net, "seg_head_t1.");
    const auto h2 = names_under(*net, "seg_head_t2.");
    const auto ch = names_under(*net, "change_head.");
    EXPECT_FALSE(h1.empty());
    EXPECT_EQ(h1, h2);  // same structure, distinct tensors
    auto params = net->named_parameters();
    for (const auto& n : h1) {
        EXPECT_NE(params["seg_head_t1." + n].data_ptr(), params["seg_head_t2." + n].data_ptr());
    }
    EXPECT_FALSE(ch.empty());
    // One backbone serves both dates.
    EXPECT_EQ(names_under(*net, "backbone_t2.").size(), 0u);
}

TEST(FusuNet, SeriesFreeModelIgnoresSeries) {
    torch::manual_seed(5);
    auto cfg = FusuNetConfig::micro();
    cfg.use_series = false;
    FusuNet net(cfg);
    ModelInputs in;
    in.t1 = torch::rand({2, 3, 32, 32});
    in.t2 = torch::rand({2, 3, 32, 32});
    in.series = torch::rand({2, 5, 4, 8, 8});
    in.months = torch::arange(5, torch::kFloat32).expand({2, 5});
    auto a = net->forward(in);
    in.series = torch::randn({2, 5, 4, 8, 8}) * 100.0;
    auto b = net->forward(in);
    in.series = torch::Tensor();
    auto c = net->forward(in);
    EXPECT_TRUE(torch::equal(a.seg_t1, b.seg_t1) && torch::equal(a.seg_t1, c.seg_t1));
    EXPECT_TRUE(torch::equal(a.seg_t2, b.seg_t2) && torch::equal(a.change, c.change));
    EXPECT_FALSE(a.seg_series.defined());
}

TEST(FusuNet, OutputShapesOverRandomGeometries) {
    torch::manual_seed(6);
    auto cfg = FusuNetConfig::micro();
    cfg.num_classes = 5;
    FusuNet net(cfg);
    for (const auto& [hr, ts] : std::vector<std::pair<int, int>>{{32, 8}, {64, 16}, {64, 20}, {96, 24}}) {
        ModelInputs in;
        in.t1 = torch::rand({1, 3, hr, hr});
        in.t2 = torch::rand({1, 3, hr, hr});
        in.series = torch::rand({1, 3, 4, ts, ts});
        in.months = torch::arange(3, torch::kFloat32).unsqueeze(0);
        in.alignment = {geo::AlignmentSpec::from_footprints(geo::footprint_of(hr, 0.5), geo::footprint_of(ts, 10.0))};
        auto out = net->forward(in);
        EXPECT_EQ(out.seg_t1.sizes(), (std::vector<int64_t>{1, 5, hr, hr}));
        EXPECT_EQ(out.seg_t2.sizes(), out.seg_t1.sizes());
        EXPECT_EQ(out.change.sizes(), (std::vector<int64_t>{1, 1, hr, hr}));
        EXPECT_EQ(out.seg_series.sizes(), (std::vector<int64_t>{1, 5, ts, ts}));
    }
}

TEST(FusuNet, LoadStateRoundTripAndErrors) {
    torch::manual_seed(7);
    FusuNet a(FusuNetConfig::micro());
    torch::manual_seed(8);
    FusuNet b(FusuNetConfig::micro());
    load_state(*b, state_of(*a));
    for (const auto& [name, t] : state_of(*a)) {
        EXPECT_TRUE(torch::equal(t, state_of(*b).at(name))) << name;
    }
    auto state = state_of(*a);
    state["nonsense"] = torch::zeros({1});
    EXPECT_THROW(load_state(*b, state), std::invalid_argument);
    EXPECT_EQ(load_state(*b, state, true).size(), state.size() - 1);
}

TEST(Backbone, GradientsMatchFiniteDifferences) {
    torch::manual_seed(9);
    Backbone net(micro_backbone());
    net->to(torch::kFloat64);
    testutil::jitter_parameters(*net);
    auto image = torch::rand({1, 3, 32, 32}, torch::kFloat64);
    auto target = torch::randn({1, 8, 8, 8}, torch::kFloat64);
    auto loss = [&] { return (net->forward(image).high_res - target).pow(2).mean(); };
    const auto r = testutil::check_gradients(*net, loss);
    EXPECT_LE(r.worst, 1e-3) << r.worst_name << " |a|=" << r.worst_analytic << " |n|=" << r.worst_numeric;
}
