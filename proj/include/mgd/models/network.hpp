#pragma once

#include "mgd/core/tensor.hpp"

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgd::models {

struct Parameter {
    std::string name;
    Tensor<float> value;
    bool trainable = true;
};

struct NetworkOutput {
    Tensor<float> logits;   ///< B x N x H x W, input resolution
    Tensor<float> features; ///< B x C x h x w, final pre-classifier decoder map
};

/// Activations retained by a training forward pass for the matching backward pass.
struct ForwardTape {
    std::vector<Tensor<float>> saved;
};

/// Shape-level description of one executed layer, consumed by model_cost.
struct LayerTrace {
    std::string type; ///< "conv2d", "linear", "relu", "resize", "concat", ...
    std::string name;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t out_h = 1;
    std::size_t out_w = 1;
    bool bias = false;
};

class FrozenParameterError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Segmentation network contract: logits at input resolution plus decoder features.
class SegmentationNetwork {
public:
    virtual ~SegmentationNetwork() = default;

    virtual std::string architecture() const = 0;
    virtual std::size_t n_classes() const = 0;
    /// Number of convolution / linear layers.
    virtual std::size_t depth() const = 0;
    /// Largest channel count of any layer output.
    virtual std::size_t max_channels() const = 0;

    /// Forward pass; when tape is non-null the activations needed by backward are kept in it.
    /// Does not mutate the network, so concurrent calls are safe.
    virtual NetworkOutput forward(const Tensor<float>& images, ForwardTape* tape = nullptr) const = 0;

    /// Accumulates parameter gradients into grads (one tensor per parameter, same order).
    /// grad_features may be null when no loss touches the decoder features.
    virtual void backward(const ForwardTape& tape, const Tensor<float>& grad_logits,
                          const Tensor<float>* grad_features, std::vector<Tensor<float>>& grads) const = 0;

    virtual std::vector<LayerTrace> trace(std::size_t height, std::size_t width) const = 0;

    virtual std::unique_ptr<SegmentationNetwork> clone() const = 0;

    /// Seed the parameters were initialized from (recorded in checkpoints).
    virtual std::uint64_t seed() const = 0;

    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }

    std::vector<Tensor<float>> zero_gradients() const;
    std::size_t parameter_count() const;

    /// Disables gradient computation through every parameter.
    void freeze();
    bool frozen() const;

protected:
    std::vector<Parameter> params_;
};

/// SHA-256 (hex) over parameter names, shapes and raw values.
std::string parameter_hash(const SegmentationNetwork& net);

} // namespace mgd::models
