#include "mgd/models/teacher.hpp"

namespace mgd::models {

FrozenNetwork::FrozenNetwork(std::unique_ptr<SegmentationNetwork> net)
{
    if (!net) throw std::invalid_argument("cannot freeze a null network");
    net->freeze();
    hash_ = parameter_hash(*net);
    net_ = std::move(net);
}

FrozenNetwork freeze(std::unique_ptr<SegmentationNetwork> net)
{
    return FrozenNetwork(std::move(net));
}

} // namespace mgd::models
