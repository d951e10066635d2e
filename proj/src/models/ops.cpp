#include "mgd/models/ops.hpp"

#include <Eigen/Core>

#include <cmath>

namespace mgd::models::ops {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// cols: (Cin * k * k) x (Ho * Wo)
void im2col(const float* x, std::size_t channels, std::size_t h, std::size_t w, const ConvGeometry& g,
            std::size_t ho, std::size_t wo, float* cols)
{
    const std::size_t k = g.kernel;
    for (std::size_t c = 0; c < channels; ++c) {
        const float* plane = x + c * h * w;
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                float* row = cols + ((c * k + ky) * k + kx) * ho * wo;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
                    float* dst = row + oy * wo;
                    if (iy < 0 || iy >= static_cast<long>(h)) {
                        std::fill_n(dst, wo, 0.0f);
                        continue;
                    }
                    const float* src = plane + iy * w;
                    for (std::size_t ox = 0; ox < wo; ++ox) {
                        const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
                        dst[ox] = (ix < 0 || ix >= static_cast<long>(w)) ? 0.0f : src[ix];
                    }
                }
            }
        }
    }
}

void col2im(const float* cols, std::size_t channels, std::size_t h, std::size_t w, const ConvGeometry& g,
            std::size_t ho, std::size_t wo, float* x)
{
    const std::size_t k = g.kernel;
    for (std::size_t c = 0; c < channels; ++c) {
        float* plane = x + c * h * w;
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                const float* row = cols + ((c * k + ky) * k + kx) * ho * wo;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
                    if (iy < 0 || iy >= static_cast<long>(h)) continue;
                    float* dst = plane + iy * w;
                    const float* src = row + oy * wo;
                    for (std::size_t ox = 0; ox < wo; ++ox) {
                        const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
                        if (ix >= 0 && ix < static_cast<long>(w)) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

struct ResizeTap {
    std::size_t i0, i1;
    float w0, w1;
};

std::vector<ResizeTap> resize_taps(std::size_t in, std::size_t out)
{
    std::vector<ResizeTap> taps(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
        double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
        if (src < 0.0) src = 0.0;
        auto i0 = static_cast<std::size_t>(std::floor(src));
        if (i0 > in - 1) i0 = in - 1;
        const std::size_t i1 = std::min(i0 + 1, in - 1);
        const auto frac = static_cast<float>(src - static_cast<double>(i0));
        taps[o] = {i0, i1, 1.0f - frac, frac};
    }
    return taps;
}

} // namespace

Tensor<float> conv2d(const Tensor<float>& x, const Tensor<float>& weight, const Tensor<float>& bias,
                     const ConvGeometry& geom)
{
    require_rank(x.shape(), 4, "conv2d input");
    require_rank(weight.shape(), 4, "conv2d weight");
    const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t cout = weight.dim(0);
    if (weight.dim(1) != cin || weight.dim(2) != geom.kernel || weight.dim(3) != geom.kernel) {
        throw ShapeError("conv2d: weight " + shape_string(weight.shape()) + " incompatible with input " +
                         shape_string(x.shape()));
    }
    if (h + 2 * geom.padding < geom.kernel || w + 2 * geom.padding < geom.kernel) {
        throw ShapeError("conv2d: input smaller than kernel");
    }
    const std::size_t ho = geom.output_extent(h), wo = geom.output_extent(w);
    const std::size_t patch = cin * geom.kernel * geom.kernel;
    Tensor<float> y({batch, cout, ho, wo});
    std::vector<float> cols(patch * ho * wo);
    ConstMatrixMap wmat(weight.raw(), static_cast<long>(cout), static_cast<long>(patch));
    for (std::size_t b = 0; b < batch; ++b) {
        const float* xb = x.raw() + b * cin * h * w;
        const float* col_src = xb;
        if (geom.kernel != 1 || geom.stride != 1 || geom.padding != 0) {
            im2col(xb, cin, h, w, geom, ho, wo, cols.data());
            col_src = cols.data();
        }
        ConstMatrixMap cmat(col_src, static_cast<long>(patch), static_cast<long>(ho * wo));
        MatrixMap ymat(y.raw() + b * cout * ho * wo, static_cast<long>(cout), static_cast<long>(ho * wo));
        ymat.noalias() = wmat * cmat;
        if (!bias.empty()) {
            for (std::size_t c = 0; c < cout; ++c) ymat.row(static_cast<long>(c)).array() += bias[c];
        }
    }
    return y;
}

void conv2d_backward(const Tensor<float>& x, const Tensor<float>& weight, const Tensor<float>& grad_y,
                     const ConvGeometry& geom, Tensor<float>* grad_x, Tensor<float>& grad_weight,
                     Tensor<float>* grad_bias)
{
    const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t cout = weight.dim(0);
    const std::size_t ho = grad_y.dim(2), wo = grad_y.dim(3);
    const std::size_t patch = cin * geom.kernel * geom.kernel;
    const bool pointwise = geom.kernel == 1 && geom.stride == 1 && geom.padding == 0;

    std::vector<float> cols(patch * ho * wo);
    std::vector<float> grad_cols(pointwise ? 0 : patch * ho * wo);
    ConstMatrixMap wmat(weight.raw(), static_cast<long>(cout), static_cast<long>(patch));
    MatrixMap gw(grad_weight.raw(), static_cast<long>(cout), static_cast<long>(patch));
    if (grad_x) *grad_x = Tensor<float>(x.shape());

    for (std::size_t b = 0; b < batch; ++b) {
        const float* xb = x.raw() + b * cin * h * w;
        const float* col_src = xb;
        if (!pointwise) {
            im2col(xb, cin, h, w, geom, ho, wo, cols.data());
            col_src = cols.data();
        }
        ConstMatrixMap cmat(col_src, static_cast<long>(patch), static_cast<long>(ho * wo));
        ConstMatrixMap gy(grad_y.raw() + b * cout * ho * wo, static_cast<long>(cout), static_cast<long>(ho * wo));
        gw.noalias() += gy * cmat.transpose();
        if (grad_bias) {
            for (std::size_t c = 0; c < cout; ++c) (*grad_bias)[c] += gy.row(static_cast<long>(c)).sum();
        }
        if (grad_x) {
            float* gxb = grad_x->raw() + b * cin * h * w;
            if (pointwise) {
                MatrixMap gx(gxb, static_cast<long>(patch), static_cast<long>(ho * wo));
                gx.noalias() = wmat.transpose() * gy;
            } else {
                MatrixMap gc(grad_cols.data(), static_cast<long>(patch), static_cast<long>(ho * wo));
                gc.noalias() = wmat.transpose() * gy;
                col2im(grad_cols.data(), cin, h, w, geom, ho, wo, gxb);
            }
        }
    }
}

void relu_inplace(Tensor<float>& x)
{
    for (auto& v : x.data()) v = v > 0.0f ? v : 0.0f;
}

void relu_backward_inplace(const Tensor<float>& activation, Tensor<float>& grad)
{
    require_same_shape(activation.shape(), grad.shape(), "relu_backward");
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(activation[i] > 0.0f)) grad[i] = 0.0f;
    }
}

Tensor<float> resize_bilinear(const Tensor<float>& x, std::size_t out_h, std::size_t out_w)
{
    require_rank(x.shape(), 4, "resize_bilinear");
    const std::size_t bc = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h == out_h && w == out_w) return x;
    const auto ty = resize_taps(h, out_h);
    const auto tx = resize_taps(w, out_w);
    Tensor<float> y({x.dim(0), x.dim(1), out_h, out_w});
    for (std::size_t k = 0; k < bc; ++k) {
        const float* src = x.raw() + k * h * w;
        float* dst = y.raw() + k * out_h * out_w;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
            const auto& a = ty[oy];
            const float* r0 = src + a.i0 * w;
            const float* r1 = src + a.i1 * w;
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                const auto& t = tx[ox];
                dst[oy * out_w + ox] = a.w0 * (t.w0 * r0[t.i0] + t.w1 * r0[t.i1]) +
                                       a.w1 * (t.w0 * r1[t.i0] + t.w1 * r1[t.i1]);
            }
        }
    }
    return y;
}

Tensor<float> resize_bilinear_backward(const Tensor<float>& grad_y, std::size_t in_h, std::size_t in_w)
{
    require_rank(grad_y.shape(), 4, "resize_bilinear_backward");
    const std::size_t bc = grad_y.dim(0) * grad_y.dim(1), out_h = grad_y.dim(2), out_w = grad_y.dim(3);
    if (in_h == out_h && in_w == out_w) return grad_y;
    const auto ty = resize_taps(in_h, out_h);
    const auto tx = resize_taps(in_w, out_w);
    Tensor<float> gx({grad_y.dim(0), grad_y.dim(1), in_h, in_w});
    for (std::size_t k = 0; k < bc; ++k) {
        const float* src = grad_y.raw() + k * out_h * out_w;
        float* dst = gx.raw() + k * in_h * in_w;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
            const auto& a = ty[oy];
            float* r0 = dst + a.i0 * in_w;
            float* r1 = dst + a.i1 * in_w;
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                const auto& t = tx[ox];
                const float g = src[oy * out_w + ox];
                r0[t.i0] += a.w0 * t.w0 * g;
                r0[t.i1] += a.w0 * t.w1 * g;
                r1[t.i0] += a.w1 * t.w0 * g;
                r1[t.i1] += a.w1 * t.w1 * g;
            }
        }
    }
    return gx;
}

Tensor<float> concat_channels(const Tensor<float>& a, const Tensor<float>& b)
{
    require_rank(a.shape(), 4, "concat_channels");
    require_rank(b.shape(), 4, "concat_channels");
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
        throw ShapeError("concat_channels: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    }
    const std::size_t batch = a.dim(0), plane = a.dim(2) * a.dim(3);
    const std::size_t ca = a.dim(1), cb = b.dim(1);
    Tensor<float> y({batch, ca + cb, a.dim(2), a.dim(3)});
    for (std::size_t n = 0; n < batch; ++n) {
        float* dst = y.raw() + n * (ca + cb) * plane;
        std::copy_n(a.raw() + n * ca * plane, ca * plane, dst);
        std::copy_n(b.raw() + n * cb * plane, cb * plane, dst + ca * plane);
    }
    return y;
}

void split_channels(const Tensor<float>& grad, std::size_t channels_a, Tensor<float>& grad_a, Tensor<float>& grad_b)
{
    const std::size_t batch = grad.dim(0), total = grad.dim(1), plane = grad.dim(2) * grad.dim(3);
    const std::size_t channels_b = total - channels_a;
    grad_a = Tensor<float>({batch, channels_a, grad.dim(2), grad.dim(3)});
    grad_b = Tensor<float>({batch, channels_b, grad.dim(2), grad.dim(3)});
    for (std::size_t n = 0; n < batch; ++n) {
        const float* src = grad.raw() + n * total * plane;
        std::copy_n(src, channels_a * plane, grad_a.raw() + n * channels_a * plane);
        std::copy_n(src + channels_a * plane, channels_b * plane, grad_b.raw() + n * channels_b * plane);
    }
}

} // namespace mgd::models::ops
