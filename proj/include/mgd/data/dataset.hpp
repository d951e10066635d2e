#pragma once

#include "mgd/core/types.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace mgd::data {

/// Per-channel normalization applied to RGB values in [0, 1].
inline constexpr std::array<float, 3> kChannelMean{0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kChannelStd{0.229f, 0.224f, 0.225f};

/// One image / mask pair. image is 3 x H x W normalized, mask is H x W.
struct Sample {
    std::string id;
    Tensor<float> image;
    Tensor<std::uint8_t> mask;
};

/// Converts interleaved 8-bit RGB (H x W x 3) into a normalized 3 x H x W tensor.
Tensor<float> normalize_rgb(const std::uint8_t* rgb, std::size_t height, std::size_t width);

/// Inverse of normalize_rgb, rounding to the nearest 8-bit value.
std::vector<std::uint8_t> denormalize_rgb(const Tensor<float>& image);

class Dataset {
public:
    virtual ~Dataset() = default;
    virtual std::size_t size() const = 0;
    virtual const std::string& id(std::size_t index) const = 0;
    virtual Sample get(std::size_t index) const = 0;

    std::vector<std::string> ids() const;
    /// Dataset positions of the given ids; throws std::out_of_range for unknown ids.
    std::vector<std::size_t> indices_of(const std::vector<std::string>& ids) const;
};

class InMemoryDataset final : public Dataset {
public:
    explicit InMemoryDataset(std::vector<Sample> samples);

    std::size_t size() const override { return samples_.size(); }
    const std::string& id(std::size_t index) const override { return samples_.at(index).id; }
    Sample get(std::size_t index) const override { return samples_.at(index); }
    const Sample& at(std::size_t index) const { return samples_.at(index); }

private:
    std::vector<Sample> samples_;
};

} // namespace mgd::data
