#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fusu/supervision.hpp"
#include "support.hpp"

using namespace fusu;
using namespace fusu::supervision;

namespace {

/// Per-pixel softmax cross-entropy written out with scalar arithmetic.
double ce_oracle(const torch::Tensor& logits, const torch::Tensor& target, int ignore) {
    const auto k = logits.size(0);
    double sum = 0.0;
    int count = 0;
    for (int64_t r = 0; r < target.size(0); ++r) {
        for (int64_t c = 0; c < target.size(1); ++c) {
            const auto y = target[r][c].item<int64_t>();
            if (y == ignore) {
                continue;
            }
            double m = -1e300;
            for (int64_t j = 0; j < k; ++j) {
                m = std::max(m, logits[j][r][c].item<double>());
            }
            double z = 0.0;
            for (int64_t j = 0; j < k; ++j) {
                z += std::exp(logits[j][r][c].item<double>() - m);
            }
            sum += -(logits[y][r][c].item<double>() - m - std::log(z));
            ++count;
        }
    }
    return sum / count;
}

double bce_oracle(const torch::Tensor& logit, const torch::Tensor& target) {
    double sum = 0.0;
    const auto l = logit.reshape({-1});
    const auto t = target.reshape({-1});
    for (int64_t i = 0; i < l.numel(); ++i) {
        const double x = l[i].item<double>();
        const double y = t[i].item<double>();
        const double p = 1.0 / (1.0 + std::exp(-x));
        sum += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    return sum / static_cast<double>(l.numel());
}

geo::AlignmentSpec spec(int hr, double hr_res, int ts, double ts_res) {
    return geo::AlignmentSpec::from_footprints(geo::footprint_of(hr, hr_res), geo::footprint_of(ts, ts_res));
}

}  // namespace

TEST(SegLoss, ConfidentCorrectIsNearZero) {
    auto target = torch::randint(1, 18, {6, 6}, torch::kInt64);
    auto logits = torch::one_hot(target, 18).permute({2, 0, 1}).to(torch::kFloat64) * 30.0;
    EXPECT_LT(seg_loss(logits, target).item<double>(), 1e-3);
}

TEST(SegLoss, UniformLogitsGiveLogK) {
    auto target = torch::randint(1, 18, {7, 5}, torch::kInt64);
    EXPECT_NEAR(seg_loss(torch::zeros({18, 7, 5}, torch::kFloat64), target).item<double>(), std::log(18.0), 1e-6);
}

TEST(SegLoss, MatchesPixelOracle) {
    torch::manual_seed(0);
    for (int trial = 0; trial < 10; ++trial) {
        auto logits = torch::randn({18, 4, 4}, torch::kFloat64) * 3.0;
        auto target = torch::randint(0, 18, {4, 4}, torch::kInt64);
        target[0][0] = 5;  // at least one counted pixel
        EXPECT_NEAR(seg_loss(logits, target).item<double>(), ce_oracle(logits, target, 0), 1e-12);
    }
}

TEST(SegLoss, AllIgnoredIsZeroWithFlag) {
    bool flag = false;
    auto loss = seg_loss(torch::randn({18, 3, 3}), torch::zeros({3, 3}, torch::kInt64), 0, {}, &flag);
    EXPECT_TRUE(flag);
    EXPECT_EQ(loss.item<double>(), 0.0);
    seg_loss(torch::randn({18, 3, 3}), torch::ones({3, 3}, torch::kInt64), 0, {}, &flag);
    EXPECT_FALSE(flag);
}

TEST(SegLoss, PixelPermutationInvariance) {
    torch::manual_seed(1);
    auto logits = torch::randn({1, 18, 8, 8}, torch::kFloat64);
    auto target = torch::randint(0, 18, {1, 8, 8}, torch::kInt64);
    auto perm = torch::randperm(64);
    auto pl = logits.view({1, 18, 64}).index_select(2, perm).view({1, 18, 8, 8});
    auto pt = target.view({1, 64}).index_select(1, perm).view({1, 8, 8});
    EXPECT_NEAR(seg_loss(logits, target).item<double>(), seg_loss(pl, pt).item<double>(), 1e-9);
}

TEST(SegLoss, RaisingCorrectLogitNeverHurts) {
    torch::manual_seed(2);
    auto logits = torch::randn({18, 5, 5}, torch::kFloat64);
    auto target = torch::randint(1, 18, {5, 5}, torch::kInt64);
    double previous = seg_loss(logits, target).item<double>();
    std::mt19937 rng(3);
    for (int step = 0; step < 50; ++step) {
        const int r = static_cast<int>(rng() % 5), c = static_cast<int>(rng() % 5);
        const auto y = target[r][c].item<int64_t>();
        logits[y][r][c] += 0.5;
        const double now = seg_loss(logits, target).item<double>();
        EXPECT_LE(now, previous + 1e-15);
        previous = now;
    }
}

TEST(SegLoss, ClassWeightsAndShapeErrors) {
    auto logits = torch::randn({3, 2, 2}, torch::kFloat64);
    auto target = torch::tensor({{1, 2}, {2, 2}}, torch::kInt64);
    const double w = seg_loss(logits, target, 0, {0.0, 1.0, 1.0}).item<double>();
    EXPECT_NEAR(w, seg_loss(logits, target).item<double>(), 1e-12);
    EXPECT_THROW(seg_loss(logits, target, 0, {1.0}), std::invalid_argument);
    EXPECT_THROW(seg_loss(logits, torch::ones({3, 2}, torch::kInt64)), std::invalid_argument);
}

TEST(ChangeLoss, LimitsAndOracle) {
    auto target = torch::randint(0, 2, {1, 1, 6, 6}).to(torch::kFloat64);
    EXPECT_LT(change_loss(target * 40.0 - 20.0, target).item<double>(), 1e-6);
    EXPECT_NEAR(change_loss(torch::zeros({1, 1, 6, 6}, torch::kFloat64), target).item<double>(), std::log(2.0), 1e-6);
    torch::manual_seed(4);
    auto logit = torch::randn({4, 4}, torch::kFloat64) * 2.0;
    auto t = torch::randint(0, 2, {4, 4}).to(torch::kFloat64);
    EXPECT_NEAR(change_loss(logit, t).item<double>(), bce_oracle(logit, t), 1e-12);
}

TEST(SeriesTarget, CropThenUpsample) {
    auto out = series_supervision_target(torch::rand({1, 18, 128, 128}), {spec(512, 0.5, 128, 10.0)}, 512, 512);
    EXPECT_EQ(out.sizes(), (std::vector<int64_t>{1, 18, 512, 512}));

    auto x = torch::rand({2, 18, 16, 16});
    EXPECT_TRUE(torch::equal(series_supervision_target(x, {spec(16, 1.0, 16, 1.0)}, 16, 16), x));

    auto constant = torch::full({1, 18, 32, 32}, 0.37f);
    auto c = series_supervision_target(constant, {spec(128, 0.5, 32, 10.0)}, 128, 128);
    EXPECT_TRUE(torch::allclose(c, torch::full_like(c, 0.37f), 0.0, 1e-6));
}

TEST(TotalLoss, WeightsAndDecomposition) {
    EXPECT_EQ(LossWeights{}.change, 2.0);
    torch::manual_seed(5);
    ModelOutputs out;
    out.seg_t1 = torch::randn({2, 18, 8, 8}, torch::kFloat64);
    out.seg_t2 = torch::randn({2, 18, 8, 8}, torch::kFloat64);
    out.seg_series = torch::randn({2, 18, 4, 4}, torch::kFloat64);
    out.change = torch::randn({2, 1, 8, 8}, torch::kFloat64);
    auto y1 = torch::randint(0, 18, {2, 8, 8}, torch::kInt64);
    auto y2 = torch::randint(0, 18, {2, 8, 8}, torch::kInt64);
    const std::vector<geo::AlignmentSpec> specs = {spec(8, 2.5, 4, 10.0)};
    const auto lb = total_loss(out, y1, y2, specs);

    const double l1 = seg_loss(out.seg_t1, y1).item<double>();
    const double l2 = seg_loss(out.seg_t2, y2).item<double>();
    const double lt = seg_loss(series_supervision_target(out.seg_series, specs, 8, 8), y1).item<double>();
    const double lc = change_loss(out.change, (y1 != y2)).item<double>();
    EXPECT_EQ(lb.l1_seg.item<double>(), l1);
    EXPECT_EQ(lb.lT_seg.item<double>(), lt);
    EXPECT_NEAR(lb.total.item<double>(), 1.0 * l1 + 1.0 * l2 + 1.0 * lt + 2.0 * lc, 1e-9);
    EXPECT_EQ(lb.total.item<double>(), ((lb.l1_seg + lb.l2_seg) + lb.lT_seg + lb.l_change * 2.0).item<double>());
}

TEST(TotalLoss, FiveWhenEveryTermIsOne) {
    LossBreakdown lb;
    lb.l1_seg = lb.l2_seg = lb.lT_seg = lb.l_change = torch::ones({}, torch::kFloat64);
    EXPECT_EQ(weighted_total(lb).item<double>(), 5.0);
}

TEST(TotalLoss, PerfectPredictionsNoChange) {
    auto y = torch::randint(1, 18, {1, 8, 8}, torch::kInt64);
    ModelOutputs out;
    out.seg_t1 = torch::one_hot(y, 18).permute({0, 3, 1, 2}).to(torch::kFloat64) * 40.0;
    out.seg_t2 = out.seg_t1.clone();
    out.seg_series = torch::Tensor();
    out.change = torch::full({1, 1, 8, 8}, -40.0, torch::kFloat64);
    const auto lb = total_loss(out, y, y, {spec(8, 1.0, 8, 1.0)});
    EXPECT_LT(lb.total.item<double>(), 1e-2);
    EXPECT_EQ(lb.lT_seg.item<double>(), 0.0);
}

TEST(TotalLoss, ChangeBackgroundOption) {
    ModelOutputs out;
    out.seg_t1 = torch::zeros({1, 3, 1, 2}, torch::kFloat64);
    out.seg_t2 = out.seg_t1;
    out.change = torch::tensor({0.0, 5.0}, torch::kFloat64).view({1, 1, 1, 2});
    auto y1 = torch::tensor({0, 1}, torch::kInt64).view({1, 1, 2});
    auto y2 = torch::tensor({1, 2}, torch::kInt64).view({1, 1, 2});
    LossOptions o;
    o.change_ignore_background = true;
    const auto lb = total_loss(out, y1, y2, {spec(2, 1.0, 2, 1.0)}, o);
    EXPECT_NEAR(lb.l_change.item<double>(), std::log1p(std::exp(-5.0)), 1e-12);
}

TEST(TotalLoss, GradientsMatchFiniteDifferencesOnMicroModel) {
    torch::manual_seed(6);
    auto cfg = FusuNetConfig::micro();
    FusuNet net(cfg);
    net->to(torch::kFloat64);
    testutil::jitter_parameters(*net);
    ModelInputs in;
    in.t1 = torch::rand({1, 3, 32, 32}, torch::kFloat64);
    in.t2 = torch::rand({1, 3, 32, 32}, torch::kFloat64);
    in.series = torch::rand({1, 3, 4, 8, 8}, torch::kFloat64);
    in.months = torch::arange(3, torch::kFloat64).unsqueeze(0);
    in.alignment = {spec(32, 1.25, 8, 10.0)};
    auto y1 = torch::randint(0, 18, {1, 32, 32}, torch::kInt64);
    auto y2 = torch::randint(0, 18, {1, 32, 32}, torch::kInt64);
    auto loss = [&] { return total_loss(net->forward(in), y1, y2, in.alignment).total; };
    const auto r = testutil::check_gradients(*net, loss, 3);
    EXPECT_LE(r.worst, 1e-3) << r.worst_name << " |a|=" << r.worst_analytic << " |n|=" << r.worst_numeric;
}
