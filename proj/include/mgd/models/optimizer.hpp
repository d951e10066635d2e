#pragma once

#include "mgd/models/network.hpp"

namespace mgd::models {

struct SgdOptions {
    float momentum = 0.9f;
    float weight_decay = 0.0005f;
};

/// SGD with momentum and L2 weight decay: v = m * v + (g + wd * w); w -= lr * v.
/// Registration fails with FrozenParameterError if any parameter is frozen.
class Sgd {
public:
    Sgd(std::vector<Parameter>& params, SgdOptions options = {});

    void step(const std::vector<Tensor<float>>& grads, float lr);

    const SgdOptions& options() const { return options_; }

private:
    std::vector<Parameter>* params_;
    SgdOptions options_;
    std::vector<Tensor<float>> velocity_;
};

} // namespace mgd::models
