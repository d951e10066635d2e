#pragma once

#include "mgd/core/tensor.hpp"

namespace mgd::models::ops {

struct ConvGeometry {
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t padding = 1;

    std::size_t output_extent(std::size_t input) const { return (input + 2 * padding - kernel) / stride + 1; }
};

/// x: B x Cin x H x W, weight: Cout x Cin x k x k, bias: Cout or empty.
Tensor<float> conv2d(const Tensor<float>& x, const Tensor<float>& weight, const Tensor<float>& bias,
                     const ConvGeometry& geom);

/// Accumulates into grad_weight / grad_bias; writes grad_x when non-null.
void conv2d_backward(const Tensor<float>& x, const Tensor<float>& weight, const Tensor<float>& grad_y,
                     const ConvGeometry& geom, Tensor<float>* grad_x, Tensor<float>& grad_weight,
                     Tensor<float>* grad_bias);

void relu_inplace(Tensor<float>& x);

/// Masks grad by (activation > 0) in place.
void relu_backward_inplace(const Tensor<float>& activation, Tensor<float>& grad);

/// Bilinear resize with half-pixel centers (align_corners = false), B x C x H x W.
Tensor<float> resize_bilinear(const Tensor<float>& x, std::size_t out_h, std::size_t out_w);
Tensor<float> resize_bilinear_backward(const Tensor<float>& grad_y, std::size_t in_h, std::size_t in_w);

/// Channel concatenation of two tensors with equal B, H, W.
Tensor<float> concat_channels(const Tensor<float>& a, const Tensor<float>& b);
void split_channels(const Tensor<float>& grad, std::size_t channels_a, Tensor<float>& grad_a, Tensor<float>& grad_b);

} // namespace mgd::models::ops
