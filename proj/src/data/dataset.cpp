#include "mgd/data/dataset.hpp"

#include <cmath>
#include <stdexcept>

namespace mgd::data {

Tensor<float> normalize_rgb(const std::uint8_t* rgb, std::size_t height, std::size_t width)
{
    Tensor<float> out({3, height, width});
    const std::size_t plane = height * width;
    for (std::size_t i = 0; i < plane; ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            out[c * plane + i] = (static_cast<float>(rgb[i * 3 + c]) / 255.0f - kChannelMean[c]) / kChannelStd[c];
        }
    }
    return out;
}

std::vector<std::uint8_t> denormalize_rgb(const Tensor<float>& image)
{
    require_rank(image.shape(), 3, "denormalize_rgb");
    if (image.dim(0) != 3) throw ShapeError("denormalize_rgb expects 3 channels");
    const std::size_t plane = image.dim(1) * image.dim(2);
    std::vector<std::uint8_t> rgb(plane * 3);
    for (std::size_t i = 0; i < plane; ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            const float v = (image[c * plane + i] * kChannelStd[c] + kChannelMean[c]) * 255.0f;
            rgb[i * 3 + c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f)));
        }
    }
    return rgb;
}

std::vector<std::string> Dataset::ids() const
{
    std::vector<std::string> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(id(i));
    return out;
}

std::vector<std::size_t> Dataset::indices_of(const std::vector<std::string>& wanted) const
{
    std::unordered_map<std::string, std::size_t> lookup;
    for (std::size_t i = 0; i < size(); ++i) lookup.emplace(id(i), i);
    std::vector<std::size_t> out;
    out.reserve(wanted.size());
    for (const auto& w : wanted) {
        const auto it = lookup.find(w);
        if (it == lookup.end()) throw std::out_of_range("id '" + w + "' is not in the dataset");
        out.push_back(it->second);
    }
    return out;
}

InMemoryDataset::InMemoryDataset(std::vector<Sample> samples) : samples_(std::move(samples))
{
    for (const auto& s : samples_) {
        require_rank(s.image.shape(), 3, "sample image");
        require_rank(s.mask.shape(), 2, "sample mask");
        if (s.image.dim(1) != s.mask.dim(0) || s.image.dim(2) != s.mask.dim(1)) {
            throw ShapeError("sample '" + s.id + "' image " + shape_string(s.image.shape()) + " and mask " +
                             shape_string(s.mask.shape()) + " differ in size");
        }
    }
}

} // namespace mgd::data
