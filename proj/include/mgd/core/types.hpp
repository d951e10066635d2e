#pragma once

#include "mgd/core/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mgd {

/// Annotation value for void pixels; skipped by every loss and metric.
inline constexpr std::uint8_t kIgnoreLabel = 255;

/// Probability tolerance for per-pixel normalization checks.
inline constexpr double kNormalizationTolerance = 1e-5;

class NormalizationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Batch of images, B x 3 x H x W, plus per-sample identifiers.
struct ImageBatch {
    Tensor<float> pixels;
    std::vector<std::string> ids;

    std::size_t batch() const { return pixels.dim(0); }
    std::size_t height() const { return pixels.dim(2); }
    std::size_t width() const { return pixels.dim(3); }
};

/// Per-pixel class ids, B x H x W, values in [0, N) or kIgnoreLabel.
struct LabelMask {
    Tensor<std::uint8_t> classes;

    std::size_t batch() const { return classes.dim(0); }
    std::size_t height() const { return classes.dim(1); }
    std::size_t width() const { return classes.dim(2); }
};

/// Per-pixel class distributions, B x N x H x W.
template <typename T>
struct PredictionMap {
    Tensor<T> probs;

    std::size_t batch() const { return probs.dim(0); }
    std::size_t classes() const { return probs.dim(1); }
    std::size_t height() const { return probs.dim(2); }
    std::size_t width() const { return probs.dim(3); }
};

/// Spatial mean of a PredictionMap, B x N.
template <typename T>
struct GlobalSemanticVector {
    Tensor<T> values;
};

/// Region-pooled decoder features, B x C x Hv x Wv.
template <typename T>
struct RegionalContentVectors {
    Tensor<T> values;

    std::size_t grid_rows() const { return values.dim(2); }
    std::size_t grid_cols() const { return values.dim(3); }
};

/// Pairwise cosine similarities among regional vectors, B x R x R with R = Hv * Wv.
template <typename T>
struct SelfCorrelationMatrix {
    Tensor<T> values;
};

/// Region grid used for regional content vectors.
struct Grid {
    std::size_t rows = 7;
    std::size_t cols = 7;

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// Parses "HxW" (e.g. "7x7").
Grid parse_grid(const std::string& text);
std::string to_string(const Grid& grid);

struct LossWeights {
    double lambda1 = 0.002; // image-level
    double lambda2 = 100.0; // region-level

    void validate() const;

    friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

/// Validates a PredictionMap (B x N x H x W, or N x H x W treated as B = 1).
/// Returns the input unchanged when every entry lies in [0, 1] and every pixel sums to 1.
template <typename T>
const PredictionMap<T>& validate_prediction_map(const PredictionMap<T>& map,
                                                double tolerance = kNormalizationTolerance);

/// Checks that every label is < n_classes or kIgnoreLabel.
void validate_label_mask(const LabelMask& mask, std::size_t n_classes);

/// Per-pixel softmax over the class axis of B x N x H x W logits.
template <typename T>
PredictionMap<T> softmax(const Tensor<T>& logits);

/// Pulls a gradient w.r.t. softmax probabilities back to the logits.
template <typename T>
Tensor<T> softmax_backward(const PredictionMap<T>& probs, const Tensor<T>& grad_probs);

/// Spatial crop [y0, y0 + h) x [x0, x0 + w) of a PredictionMap.
template <typename T>
PredictionMap<T> crop(const PredictionMap<T>& map, std::size_t y0, std::size_t x0, std::size_t h,
                      std::size_t w);

} // namespace mgd
