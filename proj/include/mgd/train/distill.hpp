#pragma once

#include "mgd/data/sampler.hpp"
#include "mgd/models/optimizer.hpp"
#include "mgd/models/teacher.hpp"
#include "mgd/models/toy.hpp"
#include "mgd/train/config.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>

namespace mgd::train {

struct StepRecord {
    std::size_t step = 0;
    losses::LossReport losses;
    double lr = 0.0;
    double wall_time = 0.0; ///< seconds since the run started

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// Loss values and student parameter gradients of the total objective at one step.
struct StepGradients {
    losses::LossReport report;
    std::vector<Tensor<float>> grads;
};

/// Evaluates every enabled term on one labeled and one unlabeled batch and backpropagates the
/// weighted total into the student parameter gradients. Does not change the student.
///
/// Image-level targets come from the teachers selected by image_td / image_tw and region-level
/// targets from region_td / region_tw. A missing wide teacher is replaced by the deep one.
/// Throws losses::NonFiniteLossError naming the offending component.
StepGradients distillation_gradients(const models::SegmentationNetwork& student,
                                     const models::TeacherEnsemble& teachers, const data::TrainingBatch& labeled,
                                     const ImageBatch& unlabeled, const TrainConfig& cfg);

/// distillation_gradients followed by one optimizer update at the given learning rate.
StepRecord distill_step(models::SegmentationNetwork& student, models::Sgd& optimizer,
                        const models::TeacherEnsemble& teachers, const data::TrainingBatch& labeled,
                        const ImageBatch& unlabeled, const TrainConfig& cfg, std::size_t step, double lr);

/// Training split with its labeled / unlabeled partition and an optional validation set.
struct SplitData {
    const data::Dataset* train = nullptr;
    std::vector<std::size_t> labeled;
    std::vector<std::size_t> unlabeled;
    const data::Dataset* val = nullptr;
};

struct RunOptions {
    /// When set, best/ and final/ checkpoints plus steps.tsv are written here.
    std::optional<std::filesystem::path> out_dir;
    std::size_t workers = 1;
    /// Called after every step (e.g. for progress logging).
    std::function<void(const StepRecord&)> on_step;
};

struct DistillationResult {
    std::unique_ptr<models::SegmentationNetwork> student;
    std::unique_ptr<models::SegmentationNetwork> best;
    std::vector<StepRecord> log;
    /// (step, mIoU) at every validation point; empty without a validation set.
    std::vector<std::pair<std::size_t, double>> validation;
    double final_miou = 0.0;
    double best_miou = 0.0;
    std::size_t best_step = 0;
};

/// Runs cfg.total_steps distillation steps with poly learning-rate decay, validating every
/// cfg.validation_period() steps and after the last one, and keeps the best-by-mIoU student.
DistillationResult run_distillation(const TrainConfig& cfg, const SplitData& data, const models::TeacherEnsemble& teachers,
                           std::unique_ptr<models::SegmentationNetwork> student, const RunOptions& options = {});

struct PretrainResult {
    models::FrozenNetwork teacher;
    std::vector<StepRecord> log;
    std::vector<std::pair<std::size_t, double>> validation;
    double final_miou = 0.0;
};

/// Supervised training of a toy teacher on every labeled index with the distillation optimizer and
/// schedule. The result is frozen and, when options.out_dir is set, checkpointed there.
PretrainResult pretrain_teacher(models::TeacherKind kind, const SplitData& data, const TrainConfig& cfg,
                                std::size_t n_classes, const RunOptions& options = {});

/// Supervised loop shared by teacher pretraining; trains `net` in place.
std::vector<StepRecord> train_supervised(models::SegmentationNetwork& net, const TrainConfig& cfg,
                                         const data::Dataset& train, const std::vector<std::size_t>& indices,
                                         const RunOptions& options = {},
                                         std::vector<std::pair<std::size_t, double>>* validation = nullptr,
                                         const data::Dataset* val = nullptr);

} // namespace mgd::train
