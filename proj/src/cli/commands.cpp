#include "mgd/cli/commands.hpp"

#include "mgd/eval/metrics.hpp"
#include "mgd/models/checkpoint.hpp"
#include "mgd/models/cost.hpp"
#include "mgd/train/distill.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <spawn.h>
#include <sys/wait.h>

#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

extern char** environ;

namespace mgd::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

models::FrozenNetwork load_teacher(const std::string& path, const char* role, std::size_t n_classes)
{
    if (path.empty()) throw std::invalid_argument(std::string("distillation needs a ") + role + " teacher checkpoint");
    auto net = models::load_checkpoint(path);
    if (net->n_classes() != n_classes) {
        throw std::invalid_argument(fmt::format("{} teacher {} predicts {} classes, dataset has {}", role, path,
                                                net->n_classes(), n_classes));
    }
    return models::freeze(std::move(net));
}

std::pair<std::size_t, std::size_t> sample_extent(const data::Dataset& dataset)
{
    if (dataset.size() == 0) throw std::invalid_argument("empty dataset");
    const auto s = dataset.get(0);
    return {s.image.dim(1), s.image.dim(2)};
}

void run_children(const std::vector<AblationMember>& members, std::size_t jobs, const fs::path& self_exe)
{
    std::map<pid_t, std::string> running;
    auto wait_one = [&] {
        int status = 0;
        const pid_t pid = ::waitpid(-1, &status, 0);
        if (pid < 0) throw std::runtime_error("waitpid failed");
        const auto name = running[pid];
        running.erase(pid);
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            throw std::runtime_error("ablation member '" + name + "' failed");
        }
    };
    for (const auto& m : members) {
        while (running.size() >= jobs) wait_one();
        const auto config_path = fs::path(m.config.out) / "config.yaml";
        m.config.save(config_path);
        std::vector<std::string> args{self_exe.string(), "distill", "--config", config_path.string()};
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        pid_t pid = 0;
        if (::posix_spawn(&pid, self_exe.c_str(), nullptr, nullptr, argv.data(), environ) != 0) {
            throw std::runtime_error("cannot launch " + self_exe.string());
        }
        running[pid] = m.name;
    }
    while (!running.empty()) wait_one();
}

} // namespace

PartitionFiles cmd_partition(const ExperimentConfig& cfg, const std::optional<fs::path>& ids_file)
{
    std::vector<std::string> ids;
    if (ids_file) {
        if (!fs::exists(*ids_file)) throw std::runtime_error("id list not found: " + ids_file->string());
        ids = data::read_id_list(ids_file->string());
    } else {
        ids = load_datasets(cfg.dataset).train->ids();
    }
    const auto fraction = data::Fraction::parse(cfg.fraction);
    const auto p = data::partition(std::move(ids), fraction, cfg.train.seed);

    const fs::path dir = fs::path(cfg.out) / "splits";
    fs::create_directories(dir);
    PartitionFiles files;
    files.labeled = dir / fmt::format("labeled_{}_{}.txt", fraction.file_token(), cfg.train.seed);
    files.unlabeled = dir / fmt::format("unlabeled_{}_{}.txt", fraction.file_token(), cfg.train.seed);
    data::write_id_list(files.labeled.string(), p.labeled_ids);
    data::write_id_list(files.unlabeled.string(), p.unlabeled_ids);
    files.labeled_count = p.labeled_ids.size();
    files.unlabeled_count = p.unlabeled_ids.size();
    cfg.save(fs::path(cfg.out) / "config.yaml");
    return files;
}

fs::path cmd_pretrain_teacher(const ExperimentConfig& cfg, models::TeacherKind kind, bool partition_only)
{
    cfg.validate();
    const auto sets = load_datasets(cfg.dataset);
    train::SplitData split{sets.train.get(), {}, {}, sets.val.get()};
    if (partition_only) {
        split.labeled = sets.train->indices_of(resolve_partition(cfg, *sets.train).labeled_ids);
    } else {
        for (std::size_t i = 0; i < sets.train->size(); ++i) split.labeled.push_back(i);
    }
    train::RunOptions options;
    options.out_dir = fs::path(cfg.out);
    options.workers = data::num_workers_from_env();
    options.on_step = [&](const train::StepRecord& r) {
        if ((r.step + 1) % 100 == 0) spdlog::info("teacher step {}/{} loss {:.4f}", r.step + 1, cfg.train.total_steps, r.losses.total);
    };
    const auto result = train::pretrain_teacher(kind, split, cfg.train, cfg.dataset.n_classes, options);
    spdlog::info("{} teacher validation mIoU {:.4f}", models::to_string(kind), result.final_miou);
    cfg.save(fs::path(cfg.out) / "config.yaml");
    return cfg.out;
}

DistillOutcome cmd_distill(const ExperimentConfig& cfg)
{
    cfg.validate();
    const auto sets = load_datasets(cfg.dataset);
    const auto partition = resolve_partition(cfg, *sets.train);

    models::TeacherEnsemble teachers{load_teacher(cfg.teacher_deep, "deep", cfg.dataset.n_classes), std::nullopt};
    if (!cfg.teacher_wide.empty()) teachers.wide = load_teacher(cfg.teacher_wide, "wide", cfg.dataset.n_classes);
    const auto deep_hash = teachers.deep.recorded_hash();
    const auto wide_hash = teachers.wide ? teachers.wide->recorded_hash() : std::string();

    train::SplitData split{sets.train.get(), sets.train->indices_of(partition.labeled_ids),
                           sets.train->indices_of(partition.unlabeled_ids), sets.val.get()};
    auto student = models::build_toy_student(cfg.dataset.n_classes, cfg.student_width, cfg.train.seed);
    const auto [h, w] = sample_extent(*sets.val);
    const auto cost = models::model_cost(*student, h, w);

    train::RunOptions options;
    options.out_dir = fs::path(cfg.out);
    options.workers = data::num_workers_from_env();
    options.on_step = [&](const train::StepRecord& r) {
        if ((r.step + 1) % 50 == 0) spdlog::info("step {}/{} loss {:.4f}", r.step + 1, cfg.train.total_steps, r.losses.total);
    };
    const auto result = train::run_distillation(cfg.train, split, teachers, std::move(student), options);
    if (teachers.deep.current_hash() != deep_hash || (teachers.wide && teachers.wide->current_hash() != wide_hash)) {
        throw std::logic_error("teacher parameters changed during distillation");
    }

    DistillOutcome outcome{result.final_miou, result.best_miou, cost, cfg.hash()};
    Manifest m = cfg.to_manifest();
    m.set("config_hash", outcome.config_hash);
    m.set("partition.seed", static_cast<unsigned long long>(partition.seed));
    m.set("partition.labeled_count", partition.labeled_ids.size());
    m.set("partition.unlabeled_count", partition.unlabeled_ids.size());
    m.set("teacher_deep.hash", deep_hash);
    m.set("teacher_wide.hash", wide_hash);
    m.set("student.params", static_cast<unsigned long long>(cost.params));
    m.set("student.flops", static_cast<unsigned long long>(cost.flops));
    m.set("result.final_miou", result.final_miou);
    m.set("result.best_miou", result.best_miou);
    m.set("result.best_step", result.best_step);
    m.save(fs::path(cfg.out) / "experiment.txt");
    cfg.save(fs::path(cfg.out) / "config.yaml");
    spdlog::info("final mIoU {:.4f}, best {:.4f} at step {}", result.final_miou, result.best_miou, result.best_step);
    return outcome;
}

double cmd_evaluate(const ExperimentConfig& cfg, const fs::path& checkpoint, const std::string& split,
                    const std::optional<fs::path>& csv, const std::string& run_name)
{
    if (!fs::is_directory(checkpoint)) throw std::runtime_error("checkpoint not found: " + checkpoint.string());
    if (split != "val" && split != "train") throw std::invalid_argument("split must be 'val' or 'train'");
    const auto net = models::load_checkpoint(checkpoint);
    const auto sets = load_datasets(cfg.dataset);
    const data::Dataset& dataset = split == "val" ? *sets.val : *sets.train;
    if (net->n_classes() != cfg.dataset.n_classes) {
        throw std::invalid_argument(fmt::format("checkpoint predicts {} classes, dataset has {}", net->n_classes(),
                                                cfg.dataset.n_classes));
    }
    const double miou = eval::miou(eval::evaluate(*net, dataset));
    if (csv) {
        const auto [h, w] = sample_extent(dataset);
        const auto table = eval::report_table({eval::RunResult{run_name, models::model_cost(*net, h, w),
                                                               {{cfg.fraction, miou}}}});
        std::string text = table.csv();
        const bool append = fs::exists(*csv) && fs::file_size(*csv) > 0;
        if (append) text = text.substr(text.find('\n') + 1);
        if (csv->has_parent_path()) fs::create_directories(csv->parent_path());
        std::ofstream out(*csv, append ? std::ios::app : std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + csv->string());
        out << text;
    }
    return miou;
}

std::vector<AblationMember> ablation_members(const ExperimentConfig& base, const std::string& sweep,
                                             const std::vector<std::string>& values)
{
    std::vector<AblationMember> members;
    if (sweep == "switches") {
        const auto names = values.empty() ? train::loss_preset_names() : values;
        for (const auto& name : names) {
            AblationMember m{name, base};
            m.config.train.switches = train::loss_preset(name);
            members.push_back(std::move(m));
        }
    } else if (sweep == "grid") {
        const std::vector<std::string> defaults{"3x3", "5x5", "7x7", "9x9", "11x11"};
        for (const auto& g : values.empty() ? defaults : values) {
            AblationMember m{"grid-" + g, base};
            m.config.train.grid = parse_grid(g);
            members.push_back(std::move(m));
        }
    } else {
        throw std::invalid_argument("sweep must be 'switches' or 'grid', got '" + sweep + "'");
    }
    std::set<std::string> seen;
    for (auto& m : members) {
        if (!seen.insert(m.name).second) throw std::invalid_argument("duplicate sweep value '" + m.name + "'");
        m.config.out = (fs::path(base.out) / m.name).string();
        m.config.validate();
    }
    return members;
}

eval::ComparisonTable cmd_ablate(const ExperimentConfig& base, const std::string& sweep,
                                 const std::vector<std::string>& values, std::size_t jobs, const fs::path& self_exe)
{
    const auto members = ablation_members(base, sweep, values);
    if (jobs == 0) {
        for (const auto& m : members) {
            spdlog::info("ablation member {}", m.name);
            cmd_distill(m.config);
        }
    } else {
        run_children(members, jobs, self_exe);
    }

    std::vector<eval::RunResult> runs;
    std::string keyed = "config_hash,run,partition,miou,params,flops\n";
    for (const auto& m : members) {
        const auto e = Manifest::load(fs::path(m.config.out) / "experiment.txt");
        if (e.get("config_hash") != m.config.hash()) {
            throw std::runtime_error("ablation member '" + m.name + "' wrote results for a different config");
        }
        eval::RunResult r{m.name,
                          {static_cast<std::uint64_t>(e.get_int("student.params")),
                           static_cast<std::uint64_t>(e.get_int("student.flops"))},
                          {{m.config.fraction, e.get_double("result.final_miou")}}};
        keyed += fmt::format("{},{},{},{},{},{}\n", e.get("config_hash"), r.name, m.config.fraction,
                             format_double(r.miou.front().second), r.cost.params, r.cost.flops);
        runs.push_back(std::move(r));
    }
    const auto table = eval::report_table(std::move(runs));
    write_text(fs::path(base.out) / "ablation.csv", keyed);
    write_text(fs::path(base.out) / "report.csv", table.csv());
    write_text(fs::path(base.out) / "report.txt", table.text());
    base.save(fs::path(base.out) / "config.yaml");
    return table;
}

} // namespace mgd::cli
