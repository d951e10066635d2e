#include "mgd/models/optimizer.hpp"

namespace mgd::models {

Sgd::Sgd(std::vector<Parameter>& params, SgdOptions options) : params_(&params), options_(options)
{
    for (const auto& p : params) {
        if (!p.trainable) throw FrozenParameterError("cannot register frozen parameter '" + p.name + "' with optimizer");
        velocity_.emplace_back(p.value.shape());
    }
}

void Sgd::step(const std::vector<Tensor<float>>& grads, float lr)
{
    auto& params = *params_;
    if (grads.size() != params.size()) throw std::invalid_argument("gradient count does not match parameters");
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        if (!p.trainable) throw FrozenParameterError("parameter '" + p.name + "' was frozen after registration");
        require_same_shape(p.value.shape(), grads[k].shape(), "sgd step");
        float* w = p.value.raw();
        float* v = velocity_[k].raw();
        const float* g = grads[k].raw();
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            v[i] = options_.momentum * v[i] + g[i] + options_.weight_decay * w[i];
            w[i] -= lr * v[i];
        }
    }
}

} // namespace mgd::models
