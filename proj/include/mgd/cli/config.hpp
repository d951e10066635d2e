#pragma once

#include "mgd/core/manifest.hpp"
#include "mgd/data/dataset.hpp"
#include "mgd/data/partition.hpp"
#include "mgd/data/synthetic.hpp"
#include "mgd/train/config.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace mgd::cli {

struct DatasetConfig {
    std::string kind = "synthetic"; ///< "synthetic" or "voc"
    std::size_t n_classes = 4;
    /// Synthetic: scene parameters (n_classes is taken from above) and split sizes.
    data::SyntheticSceneSpec synthetic;
    std::size_t train_size = 200;
    std::size_t val_size = 50;
    /// VOC-style: dataset root and list files relative to it.
    std::string root;
    std::string train_list = "splits/train.txt";
    std::string val_list = "splits/val.txt";

    friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

/// Everything one command needs. `train.seed` is the single experiment seed: it drives the
/// partition shuffle, network initialization, batch sampling and augmentation.
struct ExperimentConfig {
    DatasetConfig dataset;
    std::string fraction = "1/8";
    /// Optional explicit labeled-id list; overrides fraction when non-empty.
    std::string labeled_list;
    std::size_t student_width = 8;
    std::string teacher_deep;
    std::string teacher_wide;
    train::TrainConfig train;
    std::string out = "runs/default";

    void validate() const;

    /// Flat `section.key = value` form used for manifests and hashing.
    Manifest to_manifest() const;
    /// Unknown keys are rejected; absent keys keep defaults.
    static ExperimentConfig from_manifest(const Manifest& manifest);

    std::string to_yaml() const;
    static ExperimentConfig from_yaml(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    /// SHA-256 of the manifest text without the output directory.
    std::string hash() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Converts a nested YAML mapping into dotted keys and back. Sequences are not supported.
Manifest flatten_yaml(const std::string& text);
std::string nest_to_yaml(const Manifest& manifest);

struct LoadedData {
    std::unique_ptr<data::Dataset> train;
    std::unique_ptr<data::Dataset> val;
};

/// Builds (synthetic) or opens (VOC-style) the train and validation sets.
/// Throws std::runtime_error naming the missing path for absent VOC data.
LoadedData load_datasets(const DatasetConfig& config);

/// Partition of the training ids per the config (explicit list or fraction with train.seed).
data::PartitionProtocol resolve_partition(const ExperimentConfig& config, const data::Dataset& train);

} // namespace mgd::cli
