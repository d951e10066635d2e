#include "mgd/cli/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <functional>
#include <ostream>

namespace mgd::cli {

namespace {

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/// Flags shared by every subcommand. Each flag that was given overrides the config file.
class CommonFlags {
public:
    void attach(CLI::App* app, bool training)
    {
        app->add_option("--config", config_path_, "YAML experiment config");
        bind(app, "--out", "output directory", [](ExperimentConfig& c, const std::string& v) { c.out = v; });
        bind(app, "--seed", "experiment seed (partition, init, sampling, augmentation)",
             [](ExperimentConfig& c, const std::string& v) { c.train.seed = std::stoull(v); });
        bind(app, "--dataset", "synthetic or voc", [](ExperimentConfig& c, const std::string& v) { c.dataset.kind = v; });
        bind(app, "--data-root", "VOC-style dataset root",
             [](ExperimentConfig& c, const std::string& v) { c.dataset.root = v; });
        bind(app, "--train-list", "training list relative to the data root",
             [](ExperimentConfig& c, const std::string& v) { c.dataset.train_list = v; });
        bind(app, "--val-list", "validation list relative to the data root",
             [](ExperimentConfig& c, const std::string& v) { c.dataset.val_list = v; });
        bind(app, "--n-classes", "number of classes", [](ExperimentConfig& c, const std::string& v) {
            c.dataset.n_classes = std::stoul(v);
            c.dataset.synthetic.n_classes = c.dataset.n_classes;
        });
        bind(app, "--train-size", "synthetic training images",
             [](ExperimentConfig& c, const std::string& v) { c.dataset.train_size = std::stoul(v); });
        bind(app, "--val-size", "synthetic validation images",
             [](ExperimentConfig& c, const std::string& v) { c.dataset.val_size = std::stoul(v); });
        bind(app, "--fraction", "labeled fraction, e.g. 1/8", [](ExperimentConfig& c, const std::string& v) { c.fraction = v; });
        if (!training) return;
        bind(app, "--labeled-list", "explicit labeled id list (overrides --fraction)",
             [](ExperimentConfig& c, const std::string& v) { c.labeled_list = v; });
        bind(app, "--steps", "training steps", [](ExperimentConfig& c, const std::string& v) { c.train.total_steps = std::stoul(v); });
        bind(app, "--lr", "base learning rate", [](ExperimentConfig& c, const std::string& v) { c.train.lr = std::stod(v); });
        bind(app, "--batch-size", "images per stream and step",
             [](ExperimentConfig& c, const std::string& v) { c.train.batch_size = std::stoul(v); });
        bind(app, "--eval-every", "validation period in steps (0 = total/10)",
             [](ExperimentConfig& c, const std::string& v) { c.train.eval_every = std::stoul(v); });
        bind(app, "--lambda1", "image-level weight", [](ExperimentConfig& c, const std::string& v) { c.train.weights.lambda1 = std::stod(v); });
        bind(app, "--lambda2", "region-level weight", [](ExperimentConfig& c, const std::string& v) { c.train.weights.lambda2 = std::stod(v); });
        bind(app, "--grid", "regional grid HxW", [](ExperimentConfig& c, const std::string& v) { c.train.grid = parse_grid(v); });
        bind(app, "--teacher-deep", "deep teacher checkpoint", [](ExperimentConfig& c, const std::string& v) { c.teacher_deep = v; });
        bind(app, "--teacher-wide", "wide teacher checkpoint", [](ExperimentConfig& c, const std::string& v) { c.teacher_wide = v; });
        bind(app, "--preset", "loss switch preset (sup, pixel, pixel-image, pixel-region, mgd, all)",
             [](ExperimentConfig& c, const std::string& v) { c.train.switches = train::loss_preset(v); });
        bind(app, "--student-width", "student base width",
             [](ExperimentConfig& c, const std::string& v) { c.student_width = std::stoul(v); });
        bind(app, "--pseudo-labels", "hard or soft", [](ExperimentConfig& c, const std::string& v) { c.train.targets = train::parse_target_kind(v); });
        bind(app, "--crop", "training crop HxW", [](ExperimentConfig& c, const std::string& v) {
            const auto g = parse_grid(v);
            c.train.augment.crop_height = g.rows;
            c.train.augment.crop_width = g.cols;
        });
        flag(app, "--disable-pixel-loss", "drop pixel consistency on both streams", [](ExperimentConfig& c) {
            c.train.switches.pixel_labeled = c.train.switches.pixel_unlabeled = false;
        });
        flag(app, "--disable-unlabeled-pixel-loss", "drop pixel consistency on the unlabeled stream",
             [](ExperimentConfig& c) { c.train.switches.pixel_unlabeled = false; });
        flag(app, "--disable-image-loss", "drop the image-level term",
             [](ExperimentConfig& c) { c.train.switches.image_td = c.train.switches.image_tw = false; });
        flag(app, "--disable-region-loss", "drop the region-level term",
             [](ExperimentConfig& c) { c.train.switches.region_td = c.train.switches.region_tw = false; });
        flag(app, "--no-augment", "disable flip / scale augmentation",
             [](ExperimentConfig& c) { c.train.augment.enabled = false; });
    }

    /// Config file (if any) with every given flag applied in declaration order.
    ExperimentConfig resolve() const
    {
        ExperimentConfig c = config_path_.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path_);
        for (const auto& b : bindings_) {
            if (b.option->count() > 0) b.apply(c);
        }
        return c;
    }

private:
    struct Binding {
        CLI::Option* option;
        std::function<void(ExperimentConfig&)> apply;
    };

    void bind(CLI::App* app, const std::string& name, const std::string& help,
              std::function<void(ExperimentConfig&, const std::string&)> set)
    {
        auto value = std::make_shared<std::string>();
        auto* opt = app->add_option(name, *value, help);
        values_.push_back(value);
        bindings_.push_back({opt, [value, set](ExperimentConfig& c) { set(c, *value); }});
    }

    void flag(CLI::App* app, const std::string& name, const std::string& help, std::function<void(ExperimentConfig&)> set)
    {
        bindings_.push_back({app->add_flag(name, help), std::move(set)});
    }

    std::string config_path_;
    std::vector<std::shared_ptr<std::string>> values_;
    std::vector<Binding> bindings_;
};

std::filesystem::path self_executable()
{
    std::error_code ec;
    auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
    if (ec) throw std::runtime_error("cannot locate the running executable");
    return p;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Multi-granularity distillation for lightweight semi-supervised segmentation", "mgd"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");

    CommonFlags partition_flags, pretrain_flags, distill_flags, evaluate_flags, ablate_flags;

    auto* partition = app.add_subcommand("partition", "write labeled / unlabeled split files");
    partition_flags.attach(partition, false);
    std::string ids_file;
    partition->add_option("--ids", ids_file, "id list to partition instead of the configured training set");

    auto* pretrain = app.add_subcommand("pretrain-teacher", "supervised training of a toy teacher");
    pretrain_flags.attach(pretrain, true);
    std::string kind = "deep";
    bool partition_only = false;
    pretrain->add_option("--kind", kind, "deep or wide")->check(CLI::IsMember({"deep", "wide"}));
    pretrain->add_flag("--partition-only", partition_only, "train on the labeled part of the partition only");

    auto* distill = app.add_subcommand("distill", "distill the teachers into a toy student");
    distill_flags.attach(distill, true);

    auto* evaluate = app.add_subcommand("evaluate", "mIoU of a checkpoint");
    evaluate_flags.attach(evaluate, false);
    std::string checkpoint, split = "val", csv, run_name;
    evaluate->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
    evaluate->add_option("--split", split, "val or train")->check(CLI::IsMember({"val", "train"}));
    evaluate->add_option("--csv", csv, "append a run,partition,miou,params,flops row");
    evaluate->add_option("--name", run_name, "run name for the CSV (default: checkpoint directory name)");

    auto* ablate = app.add_subcommand("ablate", "loss-switch or grid-size sweep");
    ablate_flags.attach(ablate, true);
    std::string sweep = "switches", values;
    std::size_t jobs = 1;
    ablate->add_option("--sweep", sweep, "switches or grid")->check(CLI::IsMember({"switches", "grid"}));
    ablate->add_option("--values", values, "comma-separated presets or grids (default: full sweep)");
    ablate->add_option("--jobs", jobs, "concurrent member processes (0 = sequential in-process)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*partition) {
            auto cfg = partition_flags.resolve();
            const auto files = cmd_partition(cfg, ids_file.empty() ? std::nullopt : std::optional<std::filesystem::path>(ids_file));
            out << files.labeled_count << " labeled ids -> " << files.labeled.string() << '\n'
                << files.unlabeled_count << " unlabeled ids -> " << files.unlabeled.string() << '\n';
        } else if (*pretrain) {
            auto cfg = pretrain_flags.resolve();
            const auto dir = cmd_pretrain_teacher(cfg, models::parse_teacher_kind(kind), partition_only);
            out << "teacher checkpoint -> " << dir.string() << '\n';
        } else if (*distill) {
            const auto outcome = cmd_distill(distill_flags.resolve());
            out << "final mIoU " << outcome.final_miou << " (best " << outcome.best_miou << ")\n";
        } else if (*evaluate) {
            const auto cfg = evaluate_flags.resolve();
            const std::filesystem::path ckpt(checkpoint);
            const auto name = run_name.empty() ? ckpt.filename().string() : run_name;
            const double miou = cmd_evaluate(cfg, ckpt, split, csv.empty() ? std::nullopt : std::optional<std::filesystem::path>(csv), name);
            out << "mIoU " << miou << '\n';
        } else if (*ablate) {
            const auto cfg = ablate_flags.resolve();
            const auto table = cmd_ablate(cfg, sweep, split_list(values), jobs, jobs ? self_executable() : std::filesystem::path());
            out << table.text();
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace mgd::cli
