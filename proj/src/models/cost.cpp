#include "mgd/models/cost.hpp"

#include <set>

namespace mgd::models {

ModelCost model_cost(std::span<const LayerTrace> layers)
{
    ModelCost cost;
    std::set<std::string> unsupported;
    for (const auto& l : layers) {
        if (l.type == "conv2d") {
            const std::uint64_t kernel = l.kernel_h * l.kernel_w * l.in_channels;
            cost.params += kernel * l.out_channels + (l.bias ? l.out_channels : 0);
            cost.flops += static_cast<std::uint64_t>(l.out_h) * l.out_w * l.out_channels * kernel;
        } else if (l.type == "linear") {
            cost.params += static_cast<std::uint64_t>(l.in_channels) * l.out_channels + (l.bias ? l.out_channels : 0);
            cost.flops += static_cast<std::uint64_t>(l.in_channels) * l.out_channels;
        } else if (l.type == "relu" || l.type == "resize" || l.type == "concat" || l.type == "softmax") {
            continue;
        } else {
            unsupported.insert(l.type);
        }
    }
    if (!unsupported.empty()) {
        std::string names;
        for (const auto& n : unsupported) names += (names.empty() ? "" : ", ") + n;
        throw UnsupportedLayerError("model_cost: unsupported layer type(s): " + names);
    }
    return cost;
}

ModelCost model_cost(const SegmentationNetwork& net, std::size_t height, std::size_t width)
{
    const auto layers = net.trace(height, width);
    return model_cost(std::span<const LayerTrace>(layers));
}

} // namespace mgd::models
