#pragma once

#include "mgd/core/types.hpp"

#include <stdexcept>
#include <type_traits>

namespace mgd::losses {

/// Raised by supervised_ce when every pixel of the batch is kIgnoreLabel.
class EmptySupervisionError : public std::domain_error {
public:
    EmptySupervisionError() : std::domain_error("empty supervision: every pixel is IGNORE") {}
};

/// Raised by total_loss when a component is NaN or infinite.
class NonFiniteLossError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Pseudo-label form used by the pixel consistency term.
enum class TargetKind {
    Hard, ///< argmax one-hot of the teacher distribution
    Soft, ///< the teacher distribution itself
};

/// Gradient outputs below are written (not accumulated) when the pointer is non-null and
/// always have the shape of the differentiated input. Teacher-side inputs are constants.

/// Mean over non-IGNORE pixels of -log(student probability at the ground-truth class).
template <typename T>
T supervised_ce(const PredictionMap<T>& student, const LabelMask& labels, std::type_identity_t<Tensor<T>>* grad_probs = nullptr);

/// Per-pixel argmax of a teacher distribution; ties go to the lowest class index.
template <typename T>
LabelMask pseudo_label(const PredictionMap<T>& teacher);

/// Cross-entropy of the student against one teacher's pseudo-labels, averaged over all pixels.
template <typename T>
T pixel_ce(const PredictionMap<T>& student, const PredictionMap<T>& teacher, std::type_identity_t<Tensor<T>>* grad_probs = nullptr,
           TargetKind targets = TargetKind::Hard);

/// Sum of the student's cross-entropy against both teachers' pseudo-labels.
template <typename T>
T pixel_consistency(const PredictionMap<T>& student, const PredictionMap<T>& t_d, const PredictionMap<T>& t_w,
                    std::type_identity_t<Tensor<T>>* grad_probs = nullptr, TargetKind targets = TargetKind::Hard);

/// Channel-wise global average pooling, B x N x H x W -> B x N.
template <typename T>
GlobalSemanticVector<T> global_semantic_vector(const PredictionMap<T>& p);

/// Spreads a B x N gradient on the semantic vector back over a B x N x H x W map.
template <typename T>
Tensor<T> global_semantic_vector_backward(const Tensor<T>& grad_vector, std::size_t height, std::size_t width);

/// (1/N) * sum |k_s - k_t|, averaged over the batch.
template <typename T>
T image_semantic_loss(const GlobalSemanticVector<T>& k_s, const GlobalSemanticVector<T>& k_t,
                      std::type_identity_t<Tensor<T>>* grad_ks = nullptr);

/// Adaptive average pooling of B x C x H x W features onto a grid.
/// Cell (i, j) averages rows [floor(i*H/Hv), ceil((i+1)*H/Hv)) and the analogous columns.
template <typename T>
RegionalContentVectors<T> regional_content_vectors(const Tensor<T>& features, Grid grid);

template <typename T>
Tensor<T> regional_content_vectors_backward(const Tensor<T>& grad_vectors, const Shape& feature_shape);

/// Cosine guard applied to vector norms before dividing.
inline constexpr double kCosineEpsilon = 1e-8;

/// m_ij = v_i . v_j / (max(|v_i|, eps) * max(|v_j|, eps)) over the flattened grid cells.
template <typename T>
SelfCorrelationMatrix<T> self_correlation(const RegionalContentVectors<T>& v);

template <typename T>
Tensor<T> self_correlation_backward(const RegionalContentVectors<T>& v, const Tensor<T>& grad_matrix);

/// Mean squared difference over all R x R entries, averaged over the batch.
template <typename T>
T region_content_loss(const SelfCorrelationMatrix<T>& m_s, const SelfCorrelationMatrix<T>& m_t,
                      std::type_identity_t<Tensor<T>>* grad_ms = nullptr);

/// Per-component values entering the total objective.
struct LossParts {
    double sup = 0.0;
    double pixel_labeled = 0.0;
    double pixel_unlabeled = 0.0;
    double image_level = 0.0;
    double region_level = 0.0;
};

struct LossReport {
    double sup = 0.0;
    double pixel_labeled = 0.0;
    double pixel_unlabeled = 0.0;
    double image_level = 0.0;
    double region_level = 0.0;
    double total = 0.0;

    friend bool operator==(const LossReport&, const LossReport&) = default;
};

/// total = sup + pixel_labeled + pixel_unlabeled + lambda1 * image_level + lambda2 * region_level.
LossReport total_loss(const LossParts& parts, const LossWeights& weights);

} // namespace mgd::losses
