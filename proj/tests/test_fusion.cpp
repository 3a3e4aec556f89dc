#include <random>

#include <gtest/gtest.h>

#include "fusu/fusion.hpp"
#include "support.hpp"

using namespace fusu;
using namespace fusu::fusion;

namespace {

geo::AlignmentSpec full_spec() {
    return geo::AlignmentSpec::from_footprints(geo::footprint_of(512, 0.5), geo::footprint_of(128, 10.0));
}

FusionConfig small(int series, int target) {
    FusionConfig c;
    c.series_channels = series;
    c.target_channels = target;
    c.bottleneck_channels = 4;
    return c;
}

void set_identity(torch::nn::Conv2d& conv) {
    torch::NoGradGuard ng;
    conv->weight.zero_();
    const auto n = std::min(conv->weight.size(0), conv->weight.size(1));
    for (int64_t i = 0; i < n; ++i) {
        conv->weight[i][i][0][0] = 1.0;
    }
}

}  // namespace

TEST(Fusion, AlignPathCropsProjectsAndUpsamples) {
    Fusion f(small(64, 64));
    auto out = f->align_path(torch::rand({1, 64, 128, 128}), {full_spec()}, 128, 128);
    EXPECT_EQ(out.sizes(), (std::vector<int64_t>{1, 64, 128, 128}));
}

TEST(Fusion, IdentityConfigurationReproducesInput) {
    Fusion f(small(8, 8));
    set_identity(f->projection);
    const auto spec = geo::AlignmentSpec::from_footprints(geo::footprint_of(16, 1.0), geo::footprint_of(16, 1.0));
    auto x = torch::rand({2, 8, 16, 16});
    EXPECT_TRUE(torch::allclose(f->align_path(x, {spec}, 16, 16), x, 0.0, 1e-6));
}

TEST(Fusion, ImpulseLandsWhereGeometrySays) {
    Fusion f(small(1, 1));
    set_identity(f->projection);
    const auto spec = full_spec();
    const auto win = geo::center_crop_window(spec, 128);
    std::mt19937 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int r = win.row_start + static_cast<int>(rng() % static_cast<unsigned>(win.rows));
        const int c = win.col_start + static_cast<int>(rng() % static_cast<unsigned>(win.cols));
        auto x = torch::zeros({1, 1, 128, 128});
        x[0][0][r][c] = 1.0;
        auto out = f->align_path(x, {spec}, 128, 128)[0][0];
        const double scale = 128.0 / win.rows;
        const double er = (r - win.row_start + 0.5) * scale - 0.5;
        const double ec = (c - win.col_start + 0.5) * scale - 0.5;
        const auto [cr, cc] = testutil::response_centroid(out);
        const double dist = std::hypot(cr - er, cc - ec);
        EXPECT_LE(dist, 1.0) << r << "," << c;
    }
}

TEST(Fusion, ContextPathShapeAndZeroIdentity) {
    Fusion f(small(64, 64));
    EXPECT_EQ(f->context_path(torch::rand({1, 64, 128, 128}), 128, 128).sizes(),
              (std::vector<int64_t>{1, 64, 128, 128}));
    auto hr = torch::rand({2, 64, 32, 32});
    auto zero = torch::zeros({2, 64, 32, 32});
    EXPECT_TRUE(torch::equal(f->context_path(zero, 32, 32), torch::zeros({2, 64, 32, 32})));
    EXPECT_TRUE(torch::equal(f->fuse(hr, zero, {full_spec()}), hr));
}

TEST(Fusion, ContextReachesBeyondTheCropWindow) {
    const FusionConfig c;
    EXPECT_EQ(context_receptive_field(c), 29);
    EXPECT_GT(context_receptive_field(c), geo::center_crop_window(full_spec(), 128).rows);
}

TEST(Fusion, FuseIsAdditive) {
    torch::manual_seed(1);
    Fusion f(small(6, 10));
    auto hr = torch::rand({2, 10, 24, 24});
    auto s = torch::rand({2, 6, 32, 32});
    const std::vector<geo::AlignmentSpec> specs = {
        geo::AlignmentSpec::from_footprints(geo::footprint_of(96, 0.5), geo::footprint_of(32, 10.0)),
        geo::AlignmentSpec::from_footprints(geo::footprint_of(96, 1.0), geo::footprint_of(32, 10.0))};
    auto fused = f->fuse(hr, s, specs);
    EXPECT_EQ(fused.sizes(), hr.sizes());
    auto parts = f->align_path(s, specs, 24, 24) + f->context_path(s, 24, 24);
    EXPECT_TRUE(torch::allclose(fused - hr, parts, 0.0, 1e-6));
    EXPECT_THROW(f->fuse(torch::rand({2, 9, 24, 24}), s, specs), std::invalid_argument);
}

TEST(Fusion, ShapeInvarianceAcrossGeometries) {
    Fusion f(small(3, 5));
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int ts = 4 + static_cast<int>(rng() % 60);
        const double ratio = (1 + rng() % 100) / 100.0;
        const auto spec = geo::AlignmentSpec::from_footprints(geo::footprint_of(100, ratio * ts / 10.0),
                                                              geo::footprint_of(ts, 10.0));
        const int64_t target = 8 + static_cast<int64_t>(rng() % 40);
        auto out = f->fuse(torch::zeros({1, 5, target, target}), torch::rand({1, 3, ts, ts}), {spec});
        EXPECT_EQ(out.sizes(), (std::vector<int64_t>{1, 5, target, target}));
    }
}

TEST(Fusion, AlignPathCommutesWithFlip) {
    torch::manual_seed(2);
    Fusion f(small(4, 4));
    auto s = torch::rand({1, 4, 128, 128});
    auto a = f->align_path(s.flip({3}), {full_spec()}, 128, 128);
    auto b = f->align_path(s, {full_spec()}, 128, 128).flip({3});
    EXPECT_TRUE(torch::allclose(a, b, 0.0, 1e-6));
}

TEST(Fusion, GradientReachesSeriesThroughBothPaths) {
    torch::manual_seed(3);
    Fusion f(small(4, 4));
    auto s = torch::rand({1, 4, 32, 32}, torch::requires_grad());
    const auto spec =
        geo::AlignmentSpec::from_footprints(geo::footprint_of(128, 0.5), geo::footprint_of(32, 10.0));
    auto grad_of = [&] {
        s.mutable_grad() = torch::Tensor();
        (f->contribution(s, {spec}, 32, 32) * torch::linspace(0, 1, 32)).sum().backward();
        return s.grad().clone();
    };
    const auto both = grad_of();
    {
        torch::NoGradGuard ng;
        f->projection->weight.zero_();
    }
    const auto context_only = grad_of();
    EXPECT_FALSE(torch::allclose(both, context_only));
    Fusion g(small(4, 4));
    {
        torch::NoGradGuard ng;
        for (auto& item : g->named_parameters()) {
            if (item.key().rfind("projection", 0) != 0) {
                item.value().zero_();
            }
        }
    }
    s.mutable_grad() = torch::Tensor();
    (g->contribution(s, {spec}, 32, 32) * torch::linspace(0, 1, 32)).sum().backward();
    EXPECT_FALSE(torch::allclose(both, s.grad()));
    EXPECT_GT(s.grad().abs().sum().item<float>(), 0.0f);
}

TEST(Fusion, GradientsMatchFiniteDifferences) {
    torch::manual_seed(4);
    Fusion f(small(3, 4));
    f->to(torch::kFloat64);
    testutil::jitter_parameters(*f);
    auto s = torch::rand({1, 3, 16, 16}, torch::kFloat64);
    auto hr = torch::rand({1, 4, 12, 12}, torch::kFloat64);
    const auto spec =
        geo::AlignmentSpec::from_footprints(geo::footprint_of(48, 1.0), geo::footprint_of(16, 10.0));
    auto target = torch::randn({1, 4, 12, 12}, torch::kFloat64);
    auto loss = [&] { return (f->fuse(hr, s, {spec}) - target).pow(2).mean(); };
    const auto r = testutil::check_gradients(*f, loss);
    EXPECT_LE(r.worst, 1e-3) << r.worst_name << " |a|=" << r.worst_analytic << " |n|=" << r.worst_numeric;
}
