#include "mgd/cli/commands.hpp"
#include "mgd/data/partition.hpp"
#include "mgd/models/checkpoint.hpp"
#include "mgd/train/log.hpp"

#include "support/temp_dir.hpp"

#include <gtest/gtest.h>

#include <fmt/format.h>

#include <fstream>
#include <memory>
#include <sstream>

using namespace mgd;
using namespace mgd::cli;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "mgd");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream ss(text);
    for (std::string line; std::getline(ss, line);) out.push_back(line);
    return out;
}

ExperimentConfig tiny_config(const fs::path& out)
{
    ExperimentConfig c;
    c.dataset.synthetic.height = 32;
    c.dataset.synthetic.width = 32;
    c.dataset.train_size = 24;
    c.dataset.val_size = 8;
    c.fraction = "1/4";
    c.train.total_steps = 3;
    c.train.batch_size = 2;
    c.train.grid = Grid{4, 4};
    c.out = out.string();
    return c;
}

/// Two briefly pretrained teachers and a tiny config file shared by the command tests.
class CliCommands : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        dir_ = std::make_unique<oracle::TempDir>("mgd_cli");
        auto cfg = tiny_config(*dir_ / "teachers");
        cfg.train.total_steps = 60;
        cfg.train.lr = 0.05;
        cfg.train.batch_size = 4;
        config_ = *dir_ / "tiny.yaml";
        cfg.save(config_);
        for (const char* kind : {"deep", "wide"}) {
            const auto r = run_cli({"pretrain-teacher", "--config", config_.string(), "--kind", kind, "--out",
                                    (*dir_ / kind).string()});
            ASSERT_EQ(r.code, 0) << r.err;
        }
        auto tiny = tiny_config(*dir_ / "run");
        tiny.teacher_deep = (*dir_ / "deep").string();
        tiny.teacher_wide = (*dir_ / "wide").string();
        tiny.save(config_);
    }

    static void TearDownTestSuite() { dir_.reset(); }

    static fs::path path(const std::string& name) { return *dir_ / name; }

    static inline std::unique_ptr<oracle::TempDir> dir_;
    static inline fs::path config_;
};

} // namespace

TEST(CliPartition, SyntheticEighthIsDeterministic)
{
    oracle::TempDir dir("mgd_part");
    const std::vector<std::string> args{"partition", "--fraction", "1/8", "--seed", "7", "--out", dir.path().string()};
    const auto first = run_cli(args);
    ASSERT_EQ(first.code, 0) << first.err;
    const auto labeled = dir / "splits/labeled_1_8_7.txt";
    const auto unlabeled = dir / "splits/unlabeled_1_8_7.txt";
    const auto ids = data::read_id_list(labeled.string());
    EXPECT_EQ(ids.size(), 25u);
    EXPECT_EQ(data::read_id_list(unlabeled.string()).size(), 175u);
    const auto text = slurp(labeled);

    ASSERT_EQ(run_cli(args).code, 0);
    EXPECT_EQ(slurp(labeled), text);

    ASSERT_EQ(run_cli({"partition", "--fraction", "1/8", "--seed", "8", "--out", dir.path().string()}).code, 0);
    EXPECT_NE(slurp(dir / "splits/labeled_1_8_8.txt"), text);
}

TEST(CliPartition, ExternalIdList)
{
    oracle::TempDir dir("mgd_ids");
    std::vector<std::string> ids;
    for (int i = 0; i < 10582; ++i) ids.push_back(fmt::format("2008_{:06d}", i));
    data::write_id_list((dir / "train_aug.txt").string(), ids);
    for (const auto& [fraction, expected] : {std::pair{"1/16", 662u}, std::pair{"1/8", 1323u}}) {
        const auto r = run_cli({"partition", "--ids", (dir / "train_aug.txt").string(), "--fraction", fraction, "--out",
                                dir.path().string()});
        ASSERT_EQ(r.code, 0) << r.err;
        EXPECT_NE(r.out.find(std::to_string(expected) + " labeled ids"), std::string::npos) << r.out;
    }
    EXPECT_EQ(data::read_id_list((dir / "splits/labeled_1_16_0.txt").string()).size(), 662u);

    const auto missing = run_cli({"partition", "--ids", (dir / "nope.txt").string(), "--out", dir.path().string()});
    EXPECT_EQ(missing.code, 1);
    EXPECT_NE(missing.err.find("nope.txt"), std::string::npos);
}

TEST(CliConfig, DefaultsAndYamlRoundTrip)
{
    const ExperimentConfig defaults;
    EXPECT_DOUBLE_EQ(defaults.train.weights.lambda1, 0.002);
    EXPECT_DOUBLE_EQ(defaults.train.weights.lambda2, 100.0);
    EXPECT_EQ(defaults.train.grid, (Grid{7, 7}));
    EXPECT_EQ(defaults.fraction, "1/8");
    EXPECT_NO_THROW(defaults.validate());

    oracle::TempDir dir("mgd_yaml");
    auto c = tiny_config(dir / "out");
    c.dataset.synthetic.color_consistency = 0.55;
    c.train.lr = 0.0123456789;
    c.train.switches = train::loss_preset("pixel-region");
    c.teacher_deep = "teachers/deep";
    EXPECT_EQ(ExperimentConfig::from_yaml(c.to_yaml()), c);
    c.save(dir / "c.yaml");
    const auto back = ExperimentConfig::load(dir / "c.yaml");
    EXPECT_EQ(back, c);
    EXPECT_EQ(back.to_manifest().to_string(), c.to_manifest().to_string());
    EXPECT_EQ(back.hash(), c.hash());

    auto moved = c;
    moved.out = "elsewhere";
    EXPECT_EQ(moved.hash(), c.hash());
    auto changed = c;
    changed.train.lr *= 2;
    EXPECT_NE(changed.hash(), c.hash());

    EXPECT_THROW(ExperimentConfig::from_yaml("train:\n  learning_rate: 0.1\n"), std::invalid_argument);
    EXPECT_THROW(ExperimentConfig::from_yaml("dataset:\n  kind: imagenet\n").validate(), std::invalid_argument);
}

TEST(CliConfig, MissingVocRootIsNamed)
{
    DatasetConfig d;
    d.kind = "voc";
    d.root = "/definitely/not/here";
    try {
        load_datasets(d);
        FAIL() << "expected an error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("/definitely/not/here"), std::string::npos) << e.what();
    }
    const auto r = run_cli({"pretrain-teacher", "--dataset", "voc", "--data-root", "/definitely/not/here"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("/definitely/not/here"), std::string::npos);
}

TEST(CliParse, RejectsBadInput)
{
    EXPECT_NE(run_cli({}).code, 0);
    EXPECT_NE(run_cli({"train-everything"}).code, 0);
    EXPECT_NE(run_cli({"pretrain-teacher", "--kind", "medium"}).code, 0);
    EXPECT_NE(run_cli({"distill", "--grid", "0x3"}).code, 0);
    EXPECT_NE(run_cli({"distill", "--preset", "everything"}).code, 0);
    EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(CliAblation, MembersCoverSweepAxes)
{
    const ExperimentConfig base;
    const auto switches = ablation_members(base, "switches", {});
    ASSERT_EQ(switches.size(), 6u);
    EXPECT_EQ(switches.front().config.train.switches, train::loss_preset("sup"));
    const auto grids = ablation_members(base, "grid", {});
    ASSERT_EQ(grids.size(), 5u);
    for (std::size_t k = 0; k < grids.size(); ++k) {
        EXPECT_EQ(grids[k].config.train.grid, (Grid{3 + 2 * k, 3 + 2 * k}));
        EXPECT_EQ(fs::path(grids[k].config.out).parent_path(), fs::path(base.out));
    }
    EXPECT_THROW(ablation_members(base, "depth", {}), std::invalid_argument);
    EXPECT_THROW(ablation_members(base, "switches", {"mgd", "mgd"}), std::invalid_argument);
}

TEST_F(CliCommands, TeacherCheckpointsDifferAndRecordHashes)
{
    const auto deep = models::read_checkpoint_manifest(path("deep"));
    const auto wide = models::read_checkpoint_manifest(path("wide"));
    EXPECT_NE(deep.get("architecture"), wide.get("architecture"));
    EXPECT_EQ(deep.get("param_hash"), models::parameter_hash(*models::load_checkpoint(path("deep"))));
    EXPECT_TRUE(fs::exists(path("deep") / "config.yaml"));
}

TEST_F(CliCommands, DistillFlagsOverrideConfigAndRunsAreRepeatable)
{
    const auto out = path("distill_a");
    const std::vector<std::string> args{"distill", "--config", config_.string(), "--out", out.string(),
                                        "--disable-region-loss", "--grid", "3x3"};
    const auto r = run_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto params = slurp(out / "final/params.bin");

    const auto resolved = ExperimentConfig::load(out / "config.yaml");
    EXPECT_DOUBLE_EQ(resolved.train.weights.lambda1, 0.002);
    EXPECT_DOUBLE_EQ(resolved.train.weights.lambda2, 100.0);
    EXPECT_EQ(resolved.train.grid, (Grid{3, 3}));
    EXPECT_FALSE(resolved.train.switches.region_td || resolved.train.switches.region_tw);
    EXPECT_TRUE(resolved.train.switches.image_td);

    const auto log = train::read_step_log(out / "steps.tsv");
    ASSERT_EQ(log.size(), 3u);
    for (const auto& s : log) EXPECT_EQ(s.losses.region_level, 0.0);

    const auto experiment = Manifest::load(out / "experiment.txt");
    EXPECT_EQ(experiment.get("teacher_deep.hash"), models::read_checkpoint_manifest(path("deep")).get("param_hash"));
    EXPECT_EQ(experiment.get("teacher_wide.hash"), models::read_checkpoint_manifest(path("wide")).get("param_hash"));
    EXPECT_EQ(experiment.get("config_hash"), resolved.hash());
    EXPECT_EQ(experiment.get_int("partition.labeled_count"), 6);

    ASSERT_EQ(run_cli(args).code, 0);
    EXPECT_EQ(Manifest::load(out / "experiment.txt"), experiment);
    const auto again = train::read_step_log(out / "steps.tsv");
    for (std::size_t i = 0; i < log.size(); ++i) EXPECT_EQ(again[i].losses, log[i].losses);
    EXPECT_EQ(slurp(out / "final/params.bin"), params);
}

TEST_F(CliCommands, DistillWithoutTeacherFails)
{
    const auto r = run_cli({"distill", "--config", config_.string(), "--teacher-deep", "", "--out", path("x").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("teacher"), std::string::npos);
    const auto missing = run_cli({"distill", "--config", config_.string(), "--teacher-deep", path("gone").string(),
                                  "--out", path("x").string()});
    EXPECT_EQ(missing.code, 1);
}

TEST_F(CliCommands, EvaluateWritesCsvSchema)
{
    const auto csv = path("eval/results.csv");
    for (const char* name : {"deep", "wide"}) {
        const auto r = run_cli({"evaluate", "--config", config_.string(), "--checkpoint", path(name).string(), "--split",
                                "train", "--csv", csv.string()});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    const auto rows = lines_of(slurp(csv));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], "run,partition,miou,params,flops");
    EXPECT_EQ(rows[1].rfind("deep,1/4,", 0), 0u) << rows[1];
    EXPECT_EQ(rows[2].rfind("wide,1/4,", 0), 0u) << rows[2];
    const auto table = eval::parse_report_csv(slurp(csv));
    EXPECT_EQ(table.runs.size(), 2u);

    const auto missing = run_cli({"evaluate", "--config", config_.string(), "--checkpoint", path("nowhere").string()});
    EXPECT_EQ(missing.code, 1);
    EXPECT_NE(missing.err.find("nowhere"), std::string::npos);
}

TEST_F(CliCommands, TrainedTeacherBeatsUntrainedStudent)
{
    const auto cfg = ExperimentConfig::load(config_);
    const double teacher = cmd_evaluate(cfg, path("deep"), "train", std::nullopt, "deep");
    const auto student = models::build_toy_student(cfg.dataset.n_classes, cfg.student_width, cfg.train.seed);
    models::save_checkpoint(*student, path("untrained"));
    const double untrained = cmd_evaluate(cfg, path("untrained"), "train", std::nullopt, "untrained");
    EXPECT_GT(teacher, untrained);
}

TEST_F(CliCommands, AblationCsvIsKeyedByConfigHash)
{
    auto base = ExperimentConfig::load(config_);
    base.out = path("ablate").string();
    base.train.total_steps = 2;
    const auto table = cmd_ablate(base, "switches", {"sup", "mgd"}, 0, {});
    EXPECT_EQ(table.runs.size(), 2u);
    const auto members = ablation_members(base, "switches", {"sup", "mgd"});
    const auto rows = lines_of(slurp(path("ablate/ablation.csv")));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], "config_hash,run,partition,miou,params,flops");
    for (std::size_t k = 0; k < members.size(); ++k) {
        EXPECT_EQ(rows[k + 1].substr(0, rows[k + 1].find(',')), members[k].config.hash());
        EXPECT_NE(rows[k + 1].find("," + members[k].name + ","), std::string::npos);
    }
    EXPECT_NE(members[0].config.hash(), members[1].config.hash());
    EXPECT_TRUE(fs::exists(path("ablate/report.txt")));
    EXPECT_TRUE(fs::exists(path("ablate/sup/final/params.bin")));
}
