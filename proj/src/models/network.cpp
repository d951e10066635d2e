#include "mgd/models/network.hpp"

#include "mgd/core/hash.hpp"

namespace mgd::models {

std::vector<Tensor<float>> SegmentationNetwork::zero_gradients() const
{
    std::vector<Tensor<float>> grads;
    grads.reserve(params_.size());
    for (const auto& p : params_) grads.emplace_back(p.value.shape());
    return grads;
}

std::size_t SegmentationNetwork::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void SegmentationNetwork::freeze()
{
    for (auto& p : params_) p.trainable = false;
}

bool SegmentationNetwork::frozen() const
{
    for (const auto& p : params_) {
        if (p.trainable) return false;
    }
    return !params_.empty();
}

std::string parameter_hash(const SegmentationNetwork& net)
{
    Sha256 sha;
    for (const auto& p : net.parameters()) {
        sha.update(p.name);
        for (const auto d : p.value.shape()) {
            const auto dim = static_cast<std::uint64_t>(d);
            sha.update(&dim, sizeof(dim));
        }
        sha.update(p.value.raw(), p.value.size() * sizeof(float));
    }
    return sha.hex();
}

} // namespace mgd::models
