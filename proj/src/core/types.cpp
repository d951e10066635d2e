#include "mgd/core/types.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mgd {

Grid parse_grid(const std::string& text)
{
    const auto sep = text.find_first_of("xX");
    const bool digits_only = text.find_first_not_of("0123456789xX") == std::string::npos;
    if (!digits_only || sep == std::string::npos || sep == 0 || sep + 1 == text.size()) {
        throw std::invalid_argument("grid must look like HxW, got '" + text + "'");
    }
    try {
        std::size_t used = 0;
        const auto rows = std::stoul(text.substr(0, sep), &used);
        if (used != sep) throw std::invalid_argument("rows");
        const auto cols_text = text.substr(sep + 1);
        const auto cols = std::stoul(cols_text, &used);
        if (used != cols_text.size()) throw std::invalid_argument("cols");
        if (rows == 0 || cols == 0) throw std::invalid_argument("zero");
        return Grid{rows, cols};
    } catch (const std::exception&) {
        throw std::invalid_argument("grid must look like HxW with positive integers, got '" + text + "'");
    }
}

std::string to_string(const Grid& grid)
{
    return std::to_string(grid.rows) + "x" + std::to_string(grid.cols);
}

void LossWeights::validate() const
{
    if (!std::isfinite(lambda1) || !std::isfinite(lambda2) || lambda1 < 0.0 || lambda2 < 0.0) {
        std::ostringstream os;
        os << "loss weights must be finite and nonnegative (lambda1=" << lambda1
           << ", lambda2=" << lambda2 << ")";
        throw std::invalid_argument(os.str());
    }
}

template <typename T>
const PredictionMap<T>& validate_prediction_map(const PredictionMap<T>& map, double tolerance)
{
    const auto& shape = map.probs.shape();
    if (shape.size() != 3 && shape.size() != 4) {
        throw ShapeError("prediction map must be N x H x W or B x N x H x W, got " +
                         shape_string(shape));
    }
    const std::size_t off = shape.size() == 4 ? 1 : 0;
    const std::size_t batch = off ? shape[0] : 1;
    const std::size_t classes = shape[off];
    const std::size_t plane = shape[off + 1] * shape[off + 2];
    if (batch == 0 || classes == 0 || plane == 0) {
        throw ShapeError("prediction map has an empty extent: " + shape_string(shape));
    }

    const T* p = map.probs.raw();
    double worst = 0.0;
    std::size_t worst_b = 0, worst_px = 0;
    double worst_sum = 1.0;
    for (std::size_t b = 0; b < batch; ++b) {
        const T* sample = p + b * classes * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            double sum = 0.0;
            double range_violation = 0.0;
            for (std::size_t c = 0; c < classes; ++c) {
                const double v = sample[c * plane + i];
                if (!std::isfinite(v)) {
                    range_violation = std::numeric_limits<double>::infinity();
                } else if (v < 0.0) {
                    range_violation = std::max(range_violation, -v);
                } else if (v > 1.0) {
                    range_violation = std::max(range_violation, v - 1.0);
                }
                sum += v;
            }
            const double err = std::max(std::isfinite(sum) ? std::abs(sum - 1.0)
                                                           : std::numeric_limits<double>::infinity(),
                                        range_violation);
            if (err > worst) {
                worst = err;
                worst_b = b;
                worst_px = i;
                worst_sum = sum;
            }
        }
    }
    if (worst > tolerance) {
        const std::size_t w = shape[off + 2];
        std::ostringstream os;
        os << "prediction map not normalized: worst pixel (b=" << worst_b << ", y=" << worst_px / w
           << ", x=" << worst_px % w << ") has channel sum " << worst_sum << " (deviation " << worst
           << ", tolerance " << tolerance << ")";
        throw NormalizationError(os.str());
    }
    return map;
}

void validate_label_mask(const LabelMask& mask, std::size_t n_classes)
{
    require_rank(mask.classes.shape(), 3, "label mask");
    for (std::size_t i = 0; i < mask.classes.size(); ++i) {
        const auto v = mask.classes[i];
        if (v != kIgnoreLabel && v >= n_classes) {
            throw std::invalid_argument("label " + std::to_string(v) + " at flat index " +
                                        std::to_string(i) + " is out of range for " +
                                        std::to_string(n_classes) + " classes");
        }
    }
}

template <typename T>
PredictionMap<T> softmax(const Tensor<T>& logits)
{
    require_rank(logits.shape(), 4, "softmax");
    const std::size_t batch = logits.dim(0), classes = logits.dim(1);
    const std::size_t plane = logits.dim(2) * logits.dim(3);
    Tensor<T> out(logits.shape());
    std::vector<T> maxv(plane), sum(plane);
    for (std::size_t b = 0; b < batch; ++b) {
        const T* in = logits.raw() + b * classes * plane;
        T* o = out.raw() + b * classes * plane;
        std::copy(in, in + plane, maxv.begin());
        for (std::size_t c = 1; c < classes; ++c) {
            for (std::size_t i = 0; i < plane; ++i) maxv[i] = std::max(maxv[i], in[c * plane + i]);
        }
        std::fill(sum.begin(), sum.end(), T{0});
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t i = 0; i < plane; ++i) {
                const T e = std::exp(in[c * plane + i] - maxv[i]);
                o[c * plane + i] = e;
                sum[i] += e;
            }
        }
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t i = 0; i < plane; ++i) o[c * plane + i] /= sum[i];
        }
    }
    return PredictionMap<T>{std::move(out)};
}

template <typename T>
Tensor<T> softmax_backward(const PredictionMap<T>& probs, const Tensor<T>& grad_probs)
{
    require_same_shape(probs.probs.shape(), grad_probs.shape(), "softmax_backward");
    const std::size_t batch = probs.batch(), classes = probs.classes();
    const std::size_t plane = probs.height() * probs.width();
    Tensor<T> grad(probs.probs.shape());
    std::vector<T> dot(plane);
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t base = b * classes * plane;
        const T* p = probs.probs.raw() + base;
        const T* g = grad_probs.raw() + base;
        T* o = grad.raw() + base;
        std::fill(dot.begin(), dot.end(), T{0});
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t i = 0; i < plane; ++i) dot[i] += p[c * plane + i] * g[c * plane + i];
        }
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t i = 0; i < plane; ++i) {
                o[c * plane + i] = p[c * plane + i] * (g[c * plane + i] - dot[i]);
            }
        }
    }
    return grad;
}

template <typename T>
PredictionMap<T> crop(const PredictionMap<T>& map, std::size_t y0, std::size_t x0, std::size_t h,
                      std::size_t w)
{
    require_rank(map.probs.shape(), 4, "crop");
    if (h == 0 || w == 0 || y0 + h > map.height() || x0 + w > map.width()) {
        throw ShapeError("crop window exceeds prediction map extent");
    }
    Tensor<T> out({map.batch(), map.classes(), h, w});
    for (std::size_t b = 0; b < map.batch(); ++b)
        for (std::size_t c = 0; c < map.classes(); ++c)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) out(b, c, y, x) = map.probs(b, c, y0 + y, x0 + x);
    return PredictionMap<T>{std::move(out)};
}

template const PredictionMap<float>& validate_prediction_map(const PredictionMap<float>&, double);
template const PredictionMap<double>& validate_prediction_map(const PredictionMap<double>&, double);
template PredictionMap<float> softmax(const Tensor<float>&);
template PredictionMap<double> softmax(const Tensor<double>&);
template Tensor<float> softmax_backward(const PredictionMap<float>&, const Tensor<float>&);
template Tensor<double> softmax_backward(const PredictionMap<double>&, const Tensor<double>&);
template PredictionMap<float> crop(const PredictionMap<float>&, std::size_t, std::size_t, std::size_t,
                                   std::size_t);
template PredictionMap<double> crop(const PredictionMap<double>&, std::size_t, std::size_t,
                                    std::size_t, std::size_t);

} // namespace mgd
