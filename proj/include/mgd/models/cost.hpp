#pragma once

#include "mgd/models/network.hpp"

#include <span>

namespace mgd::models {

/// Trainable scalar count and multiply-accumulate count (1 MAC = 1 FLOP) of one forward pass.
struct ModelCost {
    std::uint64_t params = 0;
    std::uint64_t flops = 0;

    ModelCost& operator+=(const ModelCost& other)
    {
        params += other.params;
        flops += other.flops;
        return *this;
    }
    friend ModelCost operator+(ModelCost a, const ModelCost& b) { return a += b; }
    friend bool operator==(const ModelCost&, const ModelCost&) = default;
};

class UnsupportedLayerError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Conv: flops = out_h * out_w * out_channels * kernel_h * kernel_w * in_channels.
/// Linear: flops = in_channels * out_channels. Activations, resizes and concats are free.
/// Throws UnsupportedLayerError listing every unknown layer type.
ModelCost model_cost(std::span<const LayerTrace> layers);

ModelCost model_cost(const SegmentationNetwork& net, std::size_t height, std::size_t width);

} // namespace mgd::models
