#pragma once

#include "mgd/models/network.hpp"

#include <optional>

namespace mgd::models {

/// A parameter-frozen network shared read-only between any number of users.
class FrozenNetwork {
public:
    explicit FrozenNetwork(std::unique_ptr<SegmentationNetwork> net);

    const SegmentationNetwork& network() const { return *net_; }
    NetworkOutput forward(const Tensor<float>& images) const { return net_->forward(images); }

    /// Hash captured at freeze time.
    const std::string& recorded_hash() const { return hash_; }
    std::string current_hash() const { return parameter_hash(*net_); }
    bool intact() const { return current_hash() == hash_; }

private:
    std::shared_ptr<const SegmentationNetwork> net_;
    std::string hash_;
};

/// Disables gradients through every parameter and records the parameter hash.
FrozenNetwork freeze(std::unique_ptr<SegmentationNetwork> net);

/// The two frozen teachers. `deep` serves the deep-and-thin role (image-level targets by default),
/// `wide` the shallow-and-wide role (region-level targets by default). `wide` may be absent for
/// single-teacher ablations, and both slots may hold the same network.
struct TeacherEnsemble {
    FrozenNetwork deep;
    std::optional<FrozenNetwork> wide;

    bool intact() const { return deep.intact() && (!wide || wide->intact()); }
};

} // namespace mgd::models
