#pragma once

#include "mgd/core/manifest.hpp"
#include "mgd/core/types.hpp"
#include "mgd/data/augment.hpp"
#include "mgd/losses/losses.hpp"

#include <string>
#include <vector>

namespace mgd::train {

/// Which distillation terms contribute to the objective. The supervised term is always on.
///
/// image_* and region_* name the teacher the target comes from. Enabling both teachers for
/// one level sums the two terms.
struct LossSwitches {
    bool pixel_labeled = true;
    bool pixel_unlabeled = true;
    bool image_td = true;
    bool image_tw = false;
    bool region_td = false;
    bool region_tw = true;

    bool any_unlabeled() const { return pixel_unlabeled || image_td || image_tw || region_td || region_tw; }
    bool any_teacher() const { return pixel_labeled || any_unlabeled(); }

    friend bool operator==(const LossSwitches&, const LossSwitches&) = default;
};

/// Named switch sets for the level ablation, in increasing order of supervision:
///   sup              supervised only
///   pixel            + pixel consistency (labeled and unlabeled)
///   pixel-image      + image level from the deep teacher
///   pixel-region     + region level from the wide teacher
///   mgd              + image level (deep) + region level (wide); the default
///   all              + image and region levels from both teachers
LossSwitches loss_preset(const std::string& name);
const std::vector<std::string>& loss_preset_names();

struct TrainConfig {
    double lr = 0.02;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    double poly_power = 0.9;
    std::size_t total_steps = 400;
    std::size_t batch_size = 8;
    LossWeights weights;
    Grid grid;
    std::uint64_t seed = 0;
    LossSwitches switches;
    losses::TargetKind targets = losses::TargetKind::Hard;
    /// Validation period in steps; 0 means total_steps / 10 (at least 1).
    std::size_t eval_every = 0;
    data::AugmentOptions augment;

    /// Throws std::invalid_argument on lr <= 0, total_steps == 0, batch_size == 0 or bad weights.
    void validate() const;
    std::size_t validation_period() const;

    /// lr * (1 - step / total_steps) ^ poly_power.
    double learning_rate(std::size_t step) const;

    /// Writes every field under `prefix` (e.g. "train.lr").
    void write(Manifest& manifest, const std::string& prefix = "train.") const;
    /// Reads fields written by write(); absent keys keep their defaults.
    static TrainConfig read(const Manifest& manifest, const std::string& prefix = "train.");

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

std::string to_string(losses::TargetKind kind);
losses::TargetKind parse_target_kind(const std::string& text);

} // namespace mgd::train
