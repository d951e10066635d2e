#pragma once

#include "mgd/data/dataset.hpp"

#include <random>

namespace mgd::data {

/// Weak augmentation shared by labeled and unlabeled streams: random horizontal flip followed by
/// a random scaled crop back to the training size.
struct AugmentOptions {
    bool enabled = true;
    bool hflip = true;
    double min_scale = 1.0;
    double max_scale = 1.5;
    /// Output size; 0 keeps the input extent.
    std::size_t crop_height = 0;
    std::size_t crop_width = 0;

    friend bool operator==(const AugmentOptions&, const AugmentOptions&) = default;
};

/// Mirrors image and mask left-right.
Sample hflip(const Sample& sample);

/// Rescales by `scale` (bilinear for the image, nearest for the mask) and crops a window at (y0, x0).
/// Regions falling outside the rescaled image are zero (image) and IGNORE (mask).
Sample scaled_crop(const Sample& sample, double scale, std::size_t y0, std::size_t x0, std::size_t out_h,
                   std::size_t out_w);

Sample augment(const Sample& sample, const AugmentOptions& options, std::mt19937_64& rng);

} // namespace mgd::data
