#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "fusu/metrics.hpp"

using namespace fusu;
using namespace fusu::metrics;

namespace {

/// The 3-class toy matrix embedded at labels 1..3 of a 4-label system (label 0 ignored).
ConfusionMatrix toy() {
    return ConfusionMatrix::from_counts(4, {0, 0, 0, 0,  //
                                            0, 5, 1, 0,  //
                                            0, 2, 3, 0,  //
                                            0, 0, 0, 4});
}

LabelMap random_map(std::mt19937& rng, int h, int w, int classes) {
    LabelMap m(h, w);
    std::uniform_int_distribution<int> d(0, classes - 1);
    for (auto& v : m.values) {
        v = static_cast<std::uint8_t>(d(rng));
    }
    return m;
}

}  // namespace

TEST(Confusion, PerfectPredictionFillsDiagonal) {
    LabelMap gt(10, 10);
    for (int i = 0; i < 100; ++i) {
        gt.values[i] = static_cast<std::uint8_t>(1 + i % 17);
    }
    ConfusionMatrix cm;
    cm.accumulate(gt, gt);
    std::uint64_t diag = 0;
    for (int c = 0; c < 18; ++c) {
        diag += cm.at(c, c);
    }
    EXPECT_EQ(diag, 100u);
    EXPECT_EQ(cm.total(), 100u);
    EXPECT_DOUBLE_EQ(mean_iou(cm), 1.0);
}

TEST(Confusion, BackgroundGroundTruthIsSkipped) {
    LabelMap gt(5, 5, 0);
    LabelMap pred(5, 5, 3);
    ConfusionMatrix cm;
    cm.accumulate(pred, gt);
    EXPECT_EQ(cm, ConfusionMatrix());
    EXPECT_THROW(mean_iou(cm), std::domain_error);
}

TEST(Confusion, MatchesPixelLoop) {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto gt = random_map(rng, 8, 8, 18);
        const auto pred = random_map(rng, 8, 8, 18);
        ConfusionMatrix cm;
        cm.accumulate(pred, gt);
        std::vector<std::uint64_t> oracle(18 * 18, 0);
        for (std::size_t i = 0; i < gt.size(); ++i) {
            if (gt.values[i] != 0) {
                ++oracle[gt.values[i] * 18u + pred.values[i]];
            }
        }
        EXPECT_EQ(cm.counts(), oracle);
    }
}

TEST(Confusion, OutOfRangeAndShapeErrors) {
    LabelMap gt(2, 2, 1);
    LabelMap pred(2, 2, 1);
    pred.values[0] = 18;
    ConfusionMatrix cm;
    EXPECT_THROW(cm.accumulate(pred, gt), std::invalid_argument);
    EXPECT_THROW(cm.accumulate(LabelMap(2, 3), LabelMap(2, 2)), std::invalid_argument);
}

TEST(Iou, ToyMatrix) {
    const auto ious = iou_per_class(toy());
    ASSERT_EQ(ious.size(), 3u);
    EXPECT_DOUBLE_EQ(*ious[0], 5.0 / 8.0);
    EXPECT_DOUBLE_EQ(*ious[1], 3.0 / 6.0);
    EXPECT_DOUBLE_EQ(*ious[2], 1.0);
    EXPECT_EQ(evaluated_labels(toy()), (std::vector<int>{1, 2, 3}));
    EXPECT_DOUBLE_EQ(mean_iou(toy()), (0.625 + 0.5 + 1.0) / 3.0);
    EXPECT_NEAR(mean_iou(toy()), 0.708333, 1e-6);
}

TEST(Iou, DisjointClassIsZeroAndAbsentClassUndefined) {
    auto cm = ConfusionMatrix::from_counts(4, {0, 0, 0, 0,  //
                                               0, 0, 3, 0,  //
                                               0, 0, 2, 0,  //
                                               0, 0, 0, 0});
    const auto ious = iou_per_class(cm);
    EXPECT_DOUBLE_EQ(*ious[0], 0.0);
    EXPECT_DOUBLE_EQ(*ious[1], 2.0 / 5.0);
    EXPECT_FALSE(ious[2].has_value());
    EXPECT_DOUBLE_EQ(mean_iou(cm), 0.2);
}

TEST(Iou, PermutationEquivariance) {
    std::mt19937 rng(8);
    const int k = 6;
    std::vector<std::uint64_t> counts(k * k);
    for (int g = 1; g < k; ++g) {
        for (int p = 0; p < k; ++p) {
            counts[g * k + p] = rng() % 20;
        }
    }
    const auto cm = ConfusionMatrix::from_counts(k, counts);
    std::vector<int> perm = {1, 2, 3, 4, 5};
    std::shuffle(perm.begin(), perm.end(), rng);
    // Relabel class c as perm[c-1]; background stays put.
    std::vector<int> map(k, 0);
    for (int c = 1; c < k; ++c) {
        map[c] = perm[c - 1];
    }
    std::vector<std::uint64_t> permuted(k * k);
    for (int g = 0; g < k; ++g) {
        for (int p = 0; p < k; ++p) {
            permuted[map[g] * k + map[p]] = counts[g * k + p];
        }
    }
    const auto a = iou_per_class(cm);
    const auto b = iou_per_class(ConfusionMatrix::from_counts(k, permuted));
    for (int c = 1; c < k; ++c) {
        EXPECT_EQ(a[c - 1], b[map[c] - 1]);
    }
}

TEST(Iou, MeanLiesBetweenExtremes) {
    std::mt19937 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        ConfusionMatrix cm;
        cm.accumulate(random_map(rng, 6, 6, 18), random_map(rng, 6, 6, 18));
        std::vector<double> defined;
        for (const auto& v : iou_per_class(cm)) {
            if (v) {
                ASSERT_GE(*v, 0.0);
                ASSERT_LE(*v, 1.0);
                defined.push_back(*v);
            }
        }
        const double m = mean_iou(cm);
        EXPECT_GE(m, *std::min_element(defined.begin(), defined.end()));
        EXPECT_LE(m, *std::max_element(defined.begin(), defined.end()));
    }
}

TEST(Confusion, MergeOverPartitionsIsExact) {
    std::mt19937 rng(13);
    std::vector<LabelMap> preds, gts;
    for (int i = 0; i < 30; ++i) {
        preds.push_back(random_map(rng, 5, 7, 18));
        gts.push_back(random_map(rng, 5, 7, 18));
    }
    ConfusionMatrix whole;
    for (int i = 0; i < 30; ++i) {
        whole.accumulate(preds[i], gts[i]);
    }
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> owner(30);
        for (auto& o : owner) {
            o = static_cast<int>(rng() % 4);
        }
        std::vector<ConfusionMatrix> parts(4);
        for (int i = 0; i < 30; ++i) {
            parts[owner[i]].accumulate(preds[i], gts[i]);
        }
        EXPECT_EQ((parts[0] + parts[1]) + (parts[2] + parts[3]), whole);
        EXPECT_EQ(parts[3] + (parts[2] + (parts[1] + parts[0])), whole);
    }
}

TEST(BinaryChange, Examples) {
    ChangeLabel gt(4, 4);
    gt.at(1, 1) = 1;
    gt.at(2, 3) = 1;
    EXPECT_DOUBLE_EQ(binary_change_iou(gt, gt), 1.0);

    ChangeLabel disjoint(4, 4);
    disjoint.at(0, 0) = 1;
    EXPECT_DOUBLE_EQ(binary_change_iou(disjoint, gt), 0.0);

    EXPECT_DOUBLE_EQ(binary_change_iou(ChangeLabel(4, 4), ChangeLabel(4, 4)), 1.0);

    ChangeLabel half = gt;
    half.at(2, 3) = 0;
    half.at(3, 3) = 1;
    EXPECT_DOUBLE_EQ(binary_change_iou(half, gt), 1.0 / 3.0);
}

TEST(BinaryChange, ThresholdIsOnProbability) {
    const std::vector<float> logits = {-1.0f, 0.0f, 0.1f, 3.0f};
    const auto c = threshold_change(logits, 2, 2);
    EXPECT_EQ(c.values, (std::vector<std::uint8_t>{0, 0, 1, 1}));
    const auto strict = threshold_change(logits, 2, 2, 0.9);
    EXPECT_EQ(strict.values, (std::vector<std::uint8_t>{0, 0, 0, 1}));
}
