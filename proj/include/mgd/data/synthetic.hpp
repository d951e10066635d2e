#pragma once

#include "mgd/data/dataset.hpp"

namespace mgd::data {

/// Procedural scenes of colored geometric shapes on a textured background.
/// Class 0 is background; class k >= 1 is drawn with shape kind k - 1
/// (disk, square, triangle, ring, diamond, cross, ellipse).
struct SyntheticSceneSpec {
    std::size_t n_classes = 4;
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t min_shapes = 1;
    std::size_t max_shapes = 4;
    /// Shape radius range as a fraction of min(height, width).
    double min_radius = 0.08;
    double max_radius = 0.22;
    /// Probability that a shape is painted in its own class color; otherwise another class's color is used.
    double color_consistency = 0.7;
    std::uint64_t seed = 0;

    static constexpr std::size_t kMaxClasses = 8;

    void validate() const;

    friend bool operator==(const SyntheticSceneSpec&, const SyntheticSceneSpec&) = default;
};

/// Generates `n_images` samples with ids "<prefix>_00000", ... Sample i depends only on (spec, i),
/// so any prefix of a larger generation is identical to a smaller one.
InMemoryDataset generate_synthetic(const SyntheticSceneSpec& spec, std::size_t n_images,
                                   const std::string& prefix = "synth", std::size_t first_index = 0);

} // namespace mgd::data
