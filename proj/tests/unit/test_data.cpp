#include "mgd/data/augment.hpp"
#include "mgd/data/partition.hpp"
#include "mgd/data/rng.hpp"
#include "mgd/data/sampler.hpp"
#include "mgd/data/synthetic.hpp"
#include "mgd/data/voc.hpp"
#include "mgd/losses/losses.hpp"

#include "support/oracle.hpp"
#include "support/temp_dir.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

using namespace mgd;
using namespace mgd::data;
using oracle::Rng;

namespace {

std::vector<std::string> numbered_ids(std::size_t n)
{
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("img_" + std::to_string(i));
    return ids;
}

std::vector<std::size_t> iota(std::size_t from, std::size_t to)
{
    std::vector<std::size_t> v;
    for (std::size_t i = from; i < to; ++i) v.push_back(i);
    return v;
}

Sample small_sample(Rng& rng, std::size_t h, std::size_t w)
{
    Sample s{"s", oracle::random_tensor<float>({3, h, w}, rng), Tensor<std::uint8_t>({h, w})};
    for (auto& v : s.mask.data()) v = static_cast<std::uint8_t>(oracle::uniform_size(rng, 0, 3));
    return s;
}

} // namespace

TEST(Fraction, ParsesAndCounts)
{
    const auto f = Fraction::parse("1/16");
    EXPECT_EQ(f, (Fraction{1, 16}));
    EXPECT_EQ(f.to_string(), "1/16");
    EXPECT_EQ(f.file_token(), "1_16");
    EXPECT_EQ(f.labeled_count(10582), 662u);
    EXPECT_EQ(Fraction::parse("1/8").labeled_count(10582), 1323u);
    EXPECT_EQ(Fraction::parse("1/4").labeled_count(10582), 2646u);
    EXPECT_EQ(Fraction::parse("1/2").labeled_count(10582), 5291u);
    EXPECT_EQ(Fraction::parse("1/8").labeled_count(200), 25u);
    for (const char* bad : {"", "1", "0/8", "8/8", "9/8", "a/b", "1/0", "-1/8", "1//8"}) {
        EXPECT_THROW(Fraction::parse(bad), PartitionError) << bad;
    }
}

TEST(Partition, CountsAndDisjointness)
{
    const auto ids = numbered_ids(10582);
    for (const auto& [text, expected] : std::vector<std::pair<std::string, std::size_t>>{{"1/16", 662}, {"1/8", 1323}}) {
        const auto p = partition(ids, Fraction::parse(text), 3);
        EXPECT_EQ(p.labeled_ids.size(), expected);
        EXPECT_EQ(p.labeled_ids.size() + p.unlabeled_ids.size(), ids.size());
        std::set<std::string> all(p.labeled_ids.begin(), p.labeled_ids.end());
        all.insert(p.unlabeled_ids.begin(), p.unlabeled_ids.end());
        EXPECT_EQ(all.size(), ids.size());
    }
    const auto tiny = partition(numbered_ids(16), Fraction::parse("1/16"), 0);
    EXPECT_EQ(tiny.labeled_ids.size(), 1u);
    EXPECT_EQ(tiny.unlabeled_ids.size(), 15u);
}

TEST(Partition, DeterministicAndOrderIndependent)
{
    auto ids = numbered_ids(300);
    const auto a = partition(ids, Fraction::parse("1/8"), 9);
    std::reverse(ids.begin(), ids.end());
    const auto b = partition(ids, Fraction::parse("1/8"), 9);
    EXPECT_EQ(a.labeled_ids, b.labeled_ids);
    EXPECT_EQ(a.unlabeled_ids, b.unlabeled_ids);
    EXPECT_NE(partition(ids, Fraction::parse("1/8"), 10).labeled_ids, a.labeled_ids);
}

TEST(Partition, SmallerFractionsNest)
{
    Rng rng(50);
    for (int trial = 0; trial < 20; ++trial) {
        const auto ids = numbered_ids(oracle::uniform_size(rng, 16, 2000));
        const std::uint64_t seed = rng();
        const auto half = partition(ids, Fraction::parse("1/2"), seed);
        const auto quarter = partition(ids, Fraction::parse("1/4"), seed);
        const auto eighth = partition(ids, Fraction::parse("1/8"), seed);
        const auto sixteenth = partition(ids, Fraction::parse("1/16"), seed);
        auto subset = [](const std::vector<std::string>& small, const std::vector<std::string>& large) {
            const std::set<std::string> l(large.begin(), large.end());
            return std::all_of(small.begin(), small.end(), [&](const auto& s) { return l.count(s) > 0; });
        };
        EXPECT_TRUE(subset(sixteenth.labeled_ids, eighth.labeled_ids));
        EXPECT_TRUE(subset(eighth.labeled_ids, quarter.labeled_ids));
        EXPECT_TRUE(subset(quarter.labeled_ids, half.labeled_ids));
    }
}

TEST(Partition, Errors)
{
    EXPECT_THROW(partition({}, Fraction::parse("1/8"), 0), PartitionError);
    EXPECT_THROW(partition({"a", "a", "b"}, Fraction::parse("1/2"), 0), PartitionError);
    EXPECT_THROW(partition_count(numbered_ids(5), 0, 0), PartitionError);
    EXPECT_THROW(partition_count(numbered_ids(5), 5, 0), PartitionError);
    const auto p = partition_count(numbered_ids(92), 23, 1);
    EXPECT_EQ(p.labeled_ids.size(), 23u);
    EXPECT_FALSE(p.fraction.has_value());
}

TEST(IdList, RoundTripAndMissingFile)
{
    oracle::TempDir dir("mgd_ids");
    const auto ids = numbered_ids(7);
    write_id_list((dir / "ids.txt").string(), ids);
    EXPECT_EQ(read_id_list((dir / "ids.txt").string()), ids);
    EXPECT_THROW(read_id_list((dir / "none.txt").string()), std::runtime_error);
}

TEST(MixSeed, Decorrelates)
{
    EXPECT_EQ(mix_seed(1, 2, 3), mix_seed(1, 2, 3));
    EXPECT_NE(mix_seed(1, 2, 3), mix_seed(1, 3, 2));
    EXPECT_NE(mix_seed(1, 2), mix_seed(2, 2));
    EXPECT_NE(mix_seed(0), mix_seed(1));
}

TEST(Sampler, SmallerPoolCyclesMoreOften)
{
    CooperativeSampler sampler(iota(0, 8), iota(8, 64), 4, 5);
    std::map<std::size_t, int> seen;
    for (int step = 0; step < 14; ++step) {
        const auto b = sampler.next();
        ASSERT_EQ(b.labeled.size(), 4u);
        ASSERT_EQ(b.unlabeled.size(), 4u);
        for (const auto i : b.labeled) {
            EXPECT_LT(i, 8u);
            ++seen[i];
        }
        for (const auto i : b.unlabeled) {
            EXPECT_GE(i, 8u);
            ++seen[i];
        }
    }
    EXPECT_EQ(sampler.unlabeled_epochs(), 1u);
    EXPECT_EQ(sampler.labeled_epochs(), 7u);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(seen[i], i < 8 ? 7 : 1) << i;
    EXPECT_FALSE(sampler.with_replacement());
}

TEST(Sampler, DeterministicPerSeed)
{
    CooperativeSampler a(iota(0, 10), iota(10, 50), 3, 7), b(iota(0, 10), iota(10, 50), 3, 7),
        c(iota(0, 10), iota(10, 50), 3, 8);
    bool differs = false;
    for (int step = 0; step < 30; ++step) {
        const auto x = a.next(), y = b.next(), z = c.next();
        EXPECT_EQ(x.labeled, y.labeled);
        EXPECT_EQ(x.unlabeled, y.unlabeled);
        differs |= x.labeled != z.labeled;
    }
    EXPECT_TRUE(differs);
}

TEST(Sampler, SmallPoolUsesReplacement)
{
    CooperativeSampler s(iota(0, 2), iota(2, 20), 4, 1);
    EXPECT_TRUE(s.with_replacement());
    const auto b = s.next();
    EXPECT_EQ(b.labeled.size(), 4u);
    for (const auto i : b.labeled) EXPECT_LT(i, 2u);
    EXPECT_THROW(CooperativeSampler({}, iota(0, 3), 1, 0), std::invalid_argument);
    EXPECT_THROW(CooperativeSampler(iota(0, 3), iota(2, 5), 1, 0), std::invalid_argument);
    EXPECT_THROW(CooperativeSampler(iota(0, 3), iota(3, 5), 0, 0), std::invalid_argument);
}

TEST(Synthetic, ClassClosureAndDeterminism)
{
    SyntheticSceneSpec spec;
    spec.seed = 3;
    const auto a = generate_synthetic(spec, 12);
    const auto b = generate_synthetic(spec, 12);
    ASSERT_EQ(a.size(), 12u);
    std::set<int> classes;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.at(i).image, b.at(i).image);
        EXPECT_EQ(a.at(i).mask, b.at(i).mask);
        EXPECT_EQ(a.at(i).image.shape(), (Shape{3, 64, 64}));
        for (const auto v : a.at(i).mask.data()) classes.insert(v);
    }
    for (const int c : classes) EXPECT_LT(c, 4);
    EXPECT_GE(classes.size(), 2u);
    EXPECT_EQ(a.id(3), "synth_00003");
}

TEST(Synthetic, PrefixStableAndSeedSensitive)
{
    SyntheticSceneSpec spec;
    const auto small = generate_synthetic(spec, 3);
    const auto large = generate_synthetic(spec, 6);
    const auto offset = generate_synthetic(spec, 3, "synth", 3);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(small.at(i).mask, large.at(i).mask);
        EXPECT_EQ(offset.at(i).mask, large.at(i + 3).mask);
        EXPECT_EQ(offset.id(i), large.id(i + 3));
    }
    spec.seed = 1;
    EXPECT_NE(generate_synthetic(spec, 1).at(0).image, small.at(0).image);
}

TEST(Synthetic, ValidatesSpec)
{
    SyntheticSceneSpec spec;
    spec.n_classes = 9;
    EXPECT_THROW(generate_synthetic(spec, 1), std::invalid_argument);
    spec = {};
    spec.min_shapes = 5;
    EXPECT_THROW(generate_synthetic(spec, 1), std::invalid_argument);
    spec = {};
    spec.color_consistency = 1.5;
    EXPECT_THROW(generate_synthetic(spec, 1), std::invalid_argument);
    EXPECT_THROW(generate_synthetic(SyntheticSceneSpec{}, 0), std::invalid_argument);
}

TEST(Normalization, RgbRoundTrip)
{
    Rng rng(51);
    std::vector<std::uint8_t> rgb(5 * 7 * 3);
    for (auto& v : rgb) v = static_cast<std::uint8_t>(oracle::uniform_size(rng, 0, 255));
    const auto image = normalize_rgb(rgb.data(), 5, 7);
    EXPECT_EQ(image.shape(), (Shape{3, 5, 7}));
    EXPECT_NEAR(image(0, 0, 0), (rgb[0] / 255.0f - kChannelMean[0]) / kChannelStd[0], 1e-6);
    EXPECT_EQ(denormalize_rgb(image), rgb);
}

TEST(VocStyle, ExportLoadRoundTrip)
{
    oracle::TempDir dir("mgd_voc");
    SyntheticSceneSpec spec;
    spec.height = 24;
    spec.width = 32;
    auto generated = generate_synthetic(spec, 3);
    // Mark a few IGNORE pixels to check they survive the trip.
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < generated.size(); ++i) samples.push_back(generated.at(i));
    samples[1].mask(0, 0) = kIgnoreLabel;
    const InMemoryDataset source(samples);
    export_voc_style(source, dir.path(), "train");

    const VocStyleDataset loaded(dir.path(), dir / "splits/train.txt");
    ASSERT_EQ(loaded.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto s = loaded.get(i);
        EXPECT_EQ(s.id, source.id(i));
        EXPECT_EQ(s.mask, source.at(i).mask);
        EXPECT_LT(oracle::max_abs_difference(s.image, source.at(i).image), 1e-5);
    }
    EXPECT_EQ(loaded.get(1).mask(0, 0), kIgnoreLabel);
}

TEST(VocStyle, IgnorePixelsExcludedFromSupervision)
{
    oracle::TempDir dir("mgd_voc");
    SyntheticSceneSpec spec;
    spec.height = 8;
    spec.width = 8;
    auto s = generate_synthetic(spec, 1).at(0);
    for (std::size_t x = 0; x < 8; ++x) s.mask(0, x) = kIgnoreLabel;
    export_voc_style(InMemoryDataset({s}), dir.path(), "train");
    const auto loaded = VocStyleDataset(dir.path(), dir / "splits/train.txt").get(0);
    LabelMask labels{loaded.mask.reshaped({1, 8, 8})};

    // Changing the prediction at IGNORE pixels must not change the loss.
    Rng rng(52);
    auto p = oracle::random_prediction<double>(1, 4, 8, 8, rng);
    const double before = losses::supervised_ce(p, labels);
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t x = 0; x < 8; ++x) p.probs(0, c, 0, x) = c == 0 ? 1.0 : 0.0;
    EXPECT_DOUBLE_EQ(losses::supervised_ce(p, labels), before);
}

TEST(VocStyle, ListFormatsAndMissingFiles)
{
    oracle::TempDir dir("mgd_voc");
    SyntheticSceneSpec spec;
    spec.height = 8;
    spec.width = 8;
    export_voc_style(generate_synthetic(spec, 2), dir.path(), "train");
    {
        std::ofstream pairs(dir / "pairs.txt");
        pairs << "images/synth_00000.png masks/synth_00000.png\n";
    }
    EXPECT_EQ(VocStyleDataset(dir.path(), dir / "pairs.txt").size(), 1u);

    std::filesystem::remove(dir / "masks/synth_00001.png");
    try {
        VocStyleDataset(dir.path(), dir / "splits/train.txt");
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("masks/synth_00001.png"), std::string::npos) << e.what();
    }
    EXPECT_THROW(VocStyleDataset(dir.path(), dir / "absent.txt"), std::runtime_error);
}

TEST(Augment, FlipIsAnInvolution)
{
    Rng rng(53);
    const auto s = small_sample(rng, 5, 6);
    const auto f = hflip(s);
    EXPECT_EQ(f.image(1, 2, 0), s.image(1, 2, 5));
    EXPECT_EQ(f.mask(4, 1), s.mask(4, 4));
    const auto back = hflip(f);
    EXPECT_EQ(back.image, s.image);
    EXPECT_EQ(back.mask, s.mask);
}

TEST(Augment, UnitScaleCropIsAWindow)
{
    Rng rng(54);
    const auto s = small_sample(rng, 9, 8);
    const auto c = scaled_crop(s, 1.0, 2, 3, 4, 5);
    EXPECT_EQ(c.image.shape(), (Shape{3, 4, 5}));
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 5; ++x) {
            EXPECT_EQ(c.mask(y, x), s.mask(y + 2, x + 3));
            EXPECT_NEAR(c.image(0, y, x), s.image(0, y + 2, x + 3), 1e-6);
        }
    const auto outside = scaled_crop(s, 1.0, 6, 0, 6, 8);
    EXPECT_EQ(outside.mask(5, 0), kIgnoreLabel);
    EXPECT_EQ(outside.image(2, 5, 0), 0.0f);
    EXPECT_THROW(scaled_crop(s, 0.0, 0, 0, 1, 1), std::invalid_argument);
}

TEST(Augment, KeepsSizeAndLabelSet)
{
    Rng rng(55);
    const auto s = small_sample(rng, 16, 16);
    AugmentOptions opts;
    std::mt19937_64 gen(1);
    for (int i = 0; i < 20; ++i) {
        const auto a = augment(s, opts, gen);
        EXPECT_EQ(a.image.shape(), s.image.shape());
        for (const auto v : a.mask.data()) EXPECT_TRUE(v < 4 || v == kIgnoreLabel);
    }
    opts.enabled = false;
    const auto same = augment(s, opts, gen);
    EXPECT_EQ(same.image, s.image);
    opts = {};
    opts.crop_height = 8;
    opts.crop_width = 12;
    EXPECT_EQ(augment(s, opts, gen).mask.shape(), (Shape{8, 12}));
}

TEST(AssembleBatch, IndependentOfWorkerCount)
{
    SyntheticSceneSpec spec;
    spec.height = 32;
    spec.width = 32;
    const auto ds = generate_synthetic(spec, 6);
    const std::vector<std::size_t> idx{4, 0, 2, 5};
    const auto one = assemble_batch(ds, idx, AugmentOptions{}, 9, 3, 1, 1);
    const auto three = assemble_batch(ds, idx, AugmentOptions{}, 9, 3, 1, 3);
    EXPECT_EQ(one.images.pixels, three.images.pixels);
    EXPECT_EQ(one.labels.classes, three.labels.classes);
    EXPECT_EQ(one.images.pixels.shape(), (Shape{4, 3, 32, 32}));
    EXPECT_EQ(one.images.ids[0], ds.id(4));
    const auto other_step = assemble_batch(ds, idx, AugmentOptions{}, 9, 4, 1, 1);
    EXPECT_NE(one.images.pixels, other_step.images.pixels);
    EXPECT_THROW(assemble_batch(ds, std::vector<std::size_t>{}, AugmentOptions{}, 0, 0, 0), std::invalid_argument);
}

TEST(Workers, ReadFromEnvironment)
{
    ::setenv("MGD_NUM_WORKERS", "3", 1);
    EXPECT_EQ(num_workers_from_env(), 3u);
    ::setenv("MGD_NUM_WORKERS", "zero", 1);
    EXPECT_EQ(num_workers_from_env(), 1u);
    ::unsetenv("MGD_NUM_WORKERS");
    EXPECT_EQ(num_workers_from_env(), 1u);
}
