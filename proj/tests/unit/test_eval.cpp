#include "mgd/data/synthetic.hpp"
#include "mgd/eval/metrics.hpp"
#include "mgd/eval/report.hpp"
#include "mgd/models/toy.hpp"

#include "support/oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace mgd;
using namespace mgd::eval;
using oracle::Rng;

namespace {

LabelMask mask_from(Shape shape, std::vector<std::uint8_t> values)
{
    return LabelMask{Tensor<std::uint8_t>(std::move(shape), std::move(values))};
}

/// IoU straight from the definition: |pred == c and gt == c| / |pred == c or gt == c|.
double reference_miou(const std::vector<std::pair<LabelMask, LabelMask>>& pairs, std::size_t n)
{
    std::vector<double> inter(n, 0.0), uni(n, 0.0);
    for (const auto& [pred, gt] : pairs) {
        for (std::size_t i = 0; i < gt.classes.size(); ++i) {
            if (gt.classes[i] == kIgnoreLabel) continue;
            for (std::size_t c = 0; c < n; ++c) {
                const bool p = pred.classes[i] == c, g = gt.classes[i] == c;
                inter[c] += p && g;
                uni[c] += p || g;
            }
        }
    }
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < n; ++c) {
        if (uni[c] == 0.0) continue;
        sum += inter[c] / uni[c];
        ++present;
    }
    return sum / static_cast<double>(present);
}

} // namespace

TEST(ConfusionMatrix, PerfectPredictionIsDiagonal)
{
    Rng rng(60);
    const auto gt = oracle::random_labels(2, 5, 5, 4, rng);
    ConfusionMatrix cm(4);
    cm.accumulate(gt, gt);
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t p = 0; p < 4; ++p)
            if (t != p) {
                EXPECT_EQ(cm.at(t, p), 0u);
            }
    EXPECT_EQ(cm.total(), 50u);
    EXPECT_DOUBLE_EQ(miou(cm), 1.0);
}

TEST(ConfusionMatrix, AllIgnoreLeavesMatrixUnchanged)
{
    ConfusionMatrix cm(3);
    cm.accumulate(mask_from({1, 1, 2}, {0, 1}), mask_from({1, 1, 2}, {1, 1}));
    const auto before = cm;
    cm.accumulate(mask_from({1, 2, 2}, {0, 1, 2, 0}), mask_from({1, 2, 2}, std::vector<std::uint8_t>(4, kIgnoreLabel)));
    EXPECT_EQ(cm, before);
}

TEST(ConfusionMatrix, DirectTally)
{
    ConfusionMatrix cm(2);
    cm.accumulate(mask_from({1, 1, 2}, {0, 0}), mask_from({1, 1, 2}, {0, 1}));
    EXPECT_EQ(cm.at(0, 0), 1u);
    EXPECT_EQ(cm.at(1, 0), 1u);
    EXPECT_EQ(cm.at(0, 1), 0u);
    EXPECT_EQ(cm.at(1, 1), 0u);
}

TEST(ConfusionMatrix, Errors)
{
    ConfusionMatrix cm(3);
    EXPECT_THROW(cm.accumulate(mask_from({1, 1, 1}, {3}), mask_from({1, 1, 1}, {0})), std::invalid_argument);
    EXPECT_THROW(cm.accumulate(mask_from({1, 1, 1}, {0}), mask_from({1, 1, 1}, {4})), std::invalid_argument);
    EXPECT_THROW(cm.accumulate(mask_from({1, 1, 2}, {0, 0}), mask_from({1, 2, 1}, {0, 0})), ShapeError);
    EXPECT_THROW(miou(ConfusionMatrix(3)), std::domain_error);
}

TEST(Miou, HandEvaluatedTwoClassMatrix)
{
    // Counts [[1, 1], [1, 1]]: each class has intersection 1 and union 3.
    ConfusionMatrix cm(2);
    cm.accumulate(mask_from({1, 1, 4}, {0, 1, 0, 1}), mask_from({1, 1, 4}, {0, 0, 1, 1}));
    EXPECT_EQ(cm.at(0, 0), 1u);
    EXPECT_EQ(cm.at(0, 1), 1u);
    EXPECT_EQ(cm.at(1, 0), 1u);
    EXPECT_EQ(cm.at(1, 1), 1u);
    EXPECT_NEAR(miou(cm), 1.0 / 3.0, 1e-15);
}

TEST(Miou, ZeroUnionClassesAreExcludedOrCounted)
{
    ConfusionMatrix cm(3);
    cm.accumulate(mask_from({1, 1, 2}, {0, 1}), mask_from({1, 1, 2}, {0, 1}));
    EXPECT_DOUBLE_EQ(miou(cm), 1.0);
    EXPECT_DOUBLE_EQ(miou(cm, ZeroUnionPolicy::CountAsZero), 2.0 / 3.0);
    const auto iou = cm.class_iou();
    EXPECT_TRUE(std::isnan(iou[2]));
}

TEST(Miou, MatchesDefinitionOnRandomPairs)
{
    Rng rng(61);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = oracle::uniform_size(rng, 2, 6);
        std::vector<std::pair<LabelMask, LabelMask>> pairs;
        ConfusionMatrix cm(n);
        for (std::size_t k = 0; k < oracle::uniform_size(rng, 1, 4); ++k) {
            const std::size_t h = oracle::uniform_size(rng, 1, 6), w = oracle::uniform_size(rng, 1, 6);
            pairs.emplace_back(oracle::random_labels(1, h, w, n, rng), oracle::random_labels(1, h, w, n, rng, 0.2));
            cm.accumulate(pairs.back().first, pairs.back().second);
        }
        if (cm.total() == 0) continue;
        EXPECT_NEAR(miou(cm), reference_miou(pairs, n), 1e-12);
    }
}

TEST(Miou, PermutationEquivariant)
{
    Rng rng(62);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = oracle::uniform_size(rng, 2, 6);
        const auto pred = oracle::random_labels(2, 6, 6, n, rng);
        const auto gt = oracle::random_labels(2, 6, 6, n, rng, 0.1);
        std::vector<std::uint8_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        auto relabel = [&](LabelMask m) {
            for (auto& v : m.classes.data())
                if (v != kIgnoreLabel) v = perm[v];
            return m;
        };
        ConfusionMatrix a(n), b(n);
        a.accumulate(pred, gt);
        b.accumulate(relabel(pred), relabel(gt));
        EXPECT_NEAR(miou(a), miou(b), 1e-12);
        const auto ia = a.class_iou(), ib = b.class_iou();
        for (std::size_t c = 0; c < n; ++c) {
            if (std::isnan(ia[c])) {
                EXPECT_TRUE(std::isnan(ib[perm[c]]));
            } else {
                EXPECT_DOUBLE_EQ(ia[c], ib[perm[c]]);
            }
        }
    }
}

TEST(ConfusionMatrix, AccumulationOrderIndependentAndShardable)
{
    Rng rng(63);
    std::vector<std::pair<LabelMask, LabelMask>> pairs;
    for (int k = 0; k < 12; ++k) {
        pairs.emplace_back(oracle::random_labels(1, 4, 5, 5, rng), oracle::random_labels(1, 4, 5, 5, rng, 0.1));
    }
    ConfusionMatrix forward(5);
    for (const auto& [p, g] : pairs) forward.accumulate(p, g);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(pairs.begin(), pairs.end(), rng);
        ConfusionMatrix shuffled(5), shard_a(5), shard_b(5);
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            shuffled = accumulate(shuffled, pairs[k].first, pairs[k].second);
            (k % 2 ? shard_a : shard_b).accumulate(pairs[k].first, pairs[k].second);
        }
        EXPECT_EQ(shuffled, forward);
        shard_a += shard_b;
        EXPECT_EQ(shard_a, forward);
    }
    ConfusionMatrix other(4);
    EXPECT_THROW(forward += other, std::invalid_argument);
}

TEST(Evaluate, CountsEveryLabeledPixelIndependentOfBatching)
{
    data::SyntheticSceneSpec spec;
    spec.height = 32;
    spec.width = 32;
    const auto ds = data::generate_synthetic(spec, 5);
    const auto net = models::build_toy_student(4, 4, 2);
    const auto one = evaluate(*net, ds, 1);
    const auto many = evaluate(*net, ds, 8);
    EXPECT_EQ(one, many);
    std::uint64_t labeled = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (const auto v : ds.at(i).mask.data()) labeled += v != kIgnoreLabel;
    EXPECT_EQ(one.total(), labeled);
}

TEST(Report, CompressionRatio)
{
    const models::ModelCost teacher{42630000, 1}, student{11190000, 1};
    EXPECT_NEAR(compression_ratio(teacher, student), 3.81, 0.005);
    EXPECT_THROW(compression_ratio(teacher, models::ModelCost{}), std::invalid_argument);
}

TEST(Report, SingleRunTable)
{
    const auto table = report_table({RunResult{"mgd", {1000, 2000}, {{"1/8", 0.5}}}});
    EXPECT_EQ(table.partitions, std::vector<std::string>{"1/8"});
    const auto text = table.text();
    EXPECT_NE(text.find("mgd"), std::string::npos);
    EXPECT_NE(text.find("50.00"), std::string::npos);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3); // header, rule, one row
}

TEST(Report, RatioColumnAgainstReference)
{
    const auto table = report_table({RunResult{"teacher", {42630000, 10}, {{"1/16", 0.7}}},
                                     RunResult{"student", {11190000, 5}, {{"1/16", 0.66}}}},
                                    "teacher");
    const auto text = table.text();
    EXPECT_NE(text.find("3.81x"), std::string::npos) << text;
    EXPECT_NE(text.find("66.00"), std::string::npos);
}

TEST(Report, CsvRoundTrip)
{
    Rng rng(64);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<RunResult> runs;
    for (const char* name : {"sup", "pixel", "mgd"}) {
        runs.push_back(RunResult{name, {rng() % 100000000, rng() % 100000000000}, {{"1/16", u(rng)}, {"1/8", u(rng)}}});
    }
    const auto table = report_table(runs, "sup");
    const auto csv = table.csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "run,partition,miou,params,flops");
    const auto back = parse_report_csv(csv, "sup");
    EXPECT_EQ(back, table);
    EXPECT_EQ(back.text(), table.text());
}

TEST(Report, Errors)
{
    EXPECT_THROW(report_table({}), std::invalid_argument);
    EXPECT_THROW(report_table({RunResult{"a", {1, 1}, {{"1/8", 0.5}}}, RunResult{"b", {1, 1}, {{"1/16", 0.5}}}}),
                 std::invalid_argument);
    EXPECT_THROW(report_table({RunResult{"a", {1, 1}, {{"1/8", 0.5}}}, RunResult{"b", {1, 1}, {{"1/8", 0.5}, {"1/4", 0.1}}}}),
                 std::invalid_argument);
    EXPECT_THROW(report_table({RunResult{"a", {1, 1}, {{"1/8", 0.5}}}}, "zzz"), std::invalid_argument);
    EXPECT_THROW(report_table({RunResult{"a,b", {1, 1}, {{"1/8", 0.5}}}}), std::invalid_argument);
    EXPECT_THROW(parse_report_csv("bad header\n"), std::invalid_argument);
}
