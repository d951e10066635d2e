#pragma once

#include "mgd/cli/config.hpp"
#include "mgd/eval/report.hpp"
#include "mgd/models/toy.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mgd::cli {

struct PartitionFiles {
    std::filesystem::path labeled;
    std::filesystem::path unlabeled;
    std::size_t labeled_count = 0;
    std::size_t unlabeled_count = 0;
};

/// Writes `<out>/splits/labeled_<frac>_<seed>.txt` and the matching unlabeled list.
/// Ids come from `ids_file` when given, otherwise from the configured training set.
PartitionFiles cmd_partition(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& ids_file = {});

/// Trains a toy teacher and writes its checkpoint to `cfg.out`. With `partition_only` the teacher
/// sees only the labeled part of the partition instead of every training label.
std::filesystem::path cmd_pretrain_teacher(const ExperimentConfig& cfg, models::TeacherKind kind,
                                           bool partition_only = false);

struct DistillOutcome {
    double final_miou = 0.0;
    double best_miou = 0.0;
    models::ModelCost student_cost;
    std::string config_hash;
};

/// Distills into a fresh toy student. Writes best/, final/, steps.tsv, validation.tsv,
/// experiment.txt (resolved config, partition, teacher hashes, results) and config.yaml to `cfg.out`.
DistillOutcome cmd_distill(const ExperimentConfig& cfg);

/// mIoU of a checkpoint on the validation (or training) split. Appends to `csv` when given.
double cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint, const std::string& split,
                    const std::optional<std::filesystem::path>& csv, const std::string& run_name);

struct AblationMember {
    std::string name;
    ExperimentConfig config;
};

/// Switch sweep over loss presets (`presets`) or grid sweep over `grids`.
std::vector<AblationMember> ablation_members(const ExperimentConfig& base, const std::string& sweep,
                                             const std::vector<std::string>& values);

/// Runs every member (in-process when jobs == 0, otherwise as up to `jobs` concurrent child
/// processes of `self_exe`), then writes ablation.csv keyed by config hash plus report.csv and
/// report.txt to `base.out`.
eval::ComparisonTable cmd_ablate(const ExperimentConfig& base, const std::string& sweep,
                                 const std::vector<std::string>& values, std::size_t jobs,
                                 const std::filesystem::path& self_exe);

/// Full command-line entry point. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mgd::cli
