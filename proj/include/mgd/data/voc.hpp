#pragma once

#include "mgd/data/dataset.hpp"

#include <filesystem>

namespace mgd::data {

/// Lazily loaded VOC-style dataset.
///
/// Layout: `root/images/<stem>.png|jpg`, `root/masks/<stem>.png` (single-channel class ids,
/// 255 = IGNORE). Each list line is either a stem or an "image_path mask_path" pair relative to root.
/// Missing files are reported at construction; size mismatches when a sample is loaded.
class VocStyleDataset final : public Dataset {
public:
    VocStyleDataset(std::filesystem::path root, const std::filesystem::path& list_file);

    std::size_t size() const override { return entries_.size(); }
    const std::string& id(std::size_t index) const override { return entries_.at(index).id; }
    Sample get(std::size_t index) const override;

private:
    struct Entry {
        std::string id;
        std::filesystem::path image;
        std::filesystem::path mask;
    };
    std::filesystem::path root_;
    std::vector<Entry> entries_;
};

/// Writes images, masks and `splits/<split_name>.txt` in the layout VocStyleDataset reads.
void export_voc_style(const Dataset& dataset, const std::filesystem::path& root, const std::string& split_name);

} // namespace mgd::data
