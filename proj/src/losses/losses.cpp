#include "mgd/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mgd::losses {

namespace {

// Lower clamp for probabilities entering a log; keeps -log finite when softmax underflows.
template <typename T>
constexpr T prob_floor()
{
    return std::numeric_limits<T>::min();
}

template <typename T>
void require_prediction(const PredictionMap<T>& p, const char* what)
{
    require_rank(p.probs.shape(), 4, what);
}

std::size_t region_start(std::size_t i, std::size_t extent, std::size_t cells)
{
    return (i * extent) / cells;
}

std::size_t region_end(std::size_t i, std::size_t extent, std::size_t cells)
{
    return ((i + 1) * extent + cells - 1) / cells;
}

} // namespace

template <typename T>
T supervised_ce(const PredictionMap<T>& student, const LabelMask& labels, std::type_identity_t<Tensor<T>>* grad_probs)
{
    require_prediction(student, "supervised_ce");
    const std::size_t batch = student.batch(), classes = student.classes();
    const std::size_t plane = student.height() * student.width();
    require_same_shape(labels.classes.shape(), Shape{batch, student.height(), student.width()},
                       "supervised_ce labels");
    validate_label_mask(labels, classes);

    std::size_t count = 0;
    for (const auto v : labels.classes.data()) count += v != kIgnoreLabel;
    if (count == 0) throw EmptySupervisionError();

    if (grad_probs) *grad_probs = Tensor<T>(student.probs.shape());
    const T inv = T{1} / static_cast<T>(count);
    T sum{0};
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < plane; ++i) {
            const auto y = labels.classes[b * plane + i];
            if (y == kIgnoreLabel) continue;
            const std::size_t idx = (b * classes + y) * plane + i;
            const T p = std::max(student.probs[idx], prob_floor<T>());
            sum -= std::log(p);
            if (grad_probs) (*grad_probs)[idx] = -inv / p;
        }
    }
    return sum * inv;
}

template <typename T>
LabelMask pseudo_label(const PredictionMap<T>& teacher)
{
    require_prediction(teacher, "pseudo_label");
    const std::size_t batch = teacher.batch(), classes = teacher.classes();
    const std::size_t plane = teacher.height() * teacher.width();
    if (classes >= kIgnoreLabel) {
        throw std::invalid_argument("pseudo_label supports at most 254 classes");
    }
    LabelMask out{Tensor<std::uint8_t>({batch, teacher.height(), teacher.width()})};
    for (std::size_t b = 0; b < batch; ++b) {
        const T* p = teacher.probs.raw() + b * classes * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            std::size_t best = 0;
            T best_v = p[i];
            for (std::size_t c = 1; c < classes; ++c) {
                if (p[c * plane + i] > best_v) {
                    best_v = p[c * plane + i];
                    best = c;
                }
            }
            out.classes[b * plane + i] = static_cast<std::uint8_t>(best);
        }
    }
    return out;
}

template <typename T>
T pixel_ce(const PredictionMap<T>& student, const PredictionMap<T>& teacher, std::type_identity_t<Tensor<T>>* grad_probs,
           TargetKind targets)
{
    require_prediction(student, "pixel_ce");
    require_same_shape(student.probs.shape(), teacher.probs.shape(), "pixel_ce");
    const std::size_t batch = student.batch(), classes = student.classes();
    const std::size_t plane = student.height() * student.width();
    const T inv = T{1} / static_cast<T>(batch * plane);

    if (grad_probs) *grad_probs = Tensor<T>(student.probs.shape());
    T sum{0};
    if (targets == TargetKind::Hard) {
        const LabelMask hard = pseudo_label(teacher);
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t i = 0; i < plane; ++i) {
                const std::size_t idx = (b * classes + hard.classes[b * plane + i]) * plane + i;
                const T p = std::max(student.probs[idx], prob_floor<T>());
                sum -= std::log(p);
                if (grad_probs) (*grad_probs)[idx] = -inv / p;
            }
        }
    } else {
        for (std::size_t idx = 0; idx < student.probs.size(); ++idx) {
            const T t = teacher.probs[idx];
            if (t == T{0}) continue;
            const T p = std::max(student.probs[idx], prob_floor<T>());
            sum -= t * std::log(p);
            if (grad_probs) (*grad_probs)[idx] = -inv * t / p;
        }
    }
    return sum * inv;
}

template <typename T>
T pixel_consistency(const PredictionMap<T>& student, const PredictionMap<T>& t_d, const PredictionMap<T>& t_w,
                    std::type_identity_t<Tensor<T>>* grad_probs, TargetKind targets)
{
    require_same_shape(t_d.probs.shape(), t_w.probs.shape(), "pixel_consistency teachers");
    if (!grad_probs) return pixel_ce(student, t_d, nullptr, targets) + pixel_ce(student, t_w, nullptr, targets);
    Tensor<T> g_w;
    const T loss = pixel_ce(student, t_d, grad_probs, targets) + pixel_ce(student, t_w, &g_w, targets);
    for (std::size_t i = 0; i < g_w.size(); ++i) (*grad_probs)[i] += g_w[i];
    return loss;
}

template <typename T>
GlobalSemanticVector<T> global_semantic_vector(const PredictionMap<T>& p)
{
    require_prediction(p, "global_semantic_vector");
    const std::size_t batch = p.batch(), classes = p.classes();
    const std::size_t plane = p.height() * p.width();
    Tensor<T> out({batch, classes});
    for (std::size_t bc = 0; bc < batch * classes; ++bc) {
        const T* src = p.probs.raw() + bc * plane;
        T sum{0};
        for (std::size_t i = 0; i < plane; ++i) sum += src[i];
        out[bc] = sum / static_cast<T>(plane);
    }
    return GlobalSemanticVector<T>{std::move(out)};
}

template <typename T>
Tensor<T> global_semantic_vector_backward(const Tensor<T>& grad_vector, std::size_t height, std::size_t width)
{
    require_rank(grad_vector.shape(), 2, "global_semantic_vector_backward");
    const std::size_t plane = height * width;
    Tensor<T> out({grad_vector.dim(0), grad_vector.dim(1), height, width});
    for (std::size_t bc = 0; bc < grad_vector.size(); ++bc) {
        const T g = grad_vector[bc] / static_cast<T>(plane);
        std::fill_n(out.raw() + bc * plane, plane, g);
    }
    return out;
}

template <typename T>
T image_semantic_loss(const GlobalSemanticVector<T>& k_s, const GlobalSemanticVector<T>& k_t, std::type_identity_t<Tensor<T>>* grad_ks)
{
    require_rank(k_s.values.shape(), 2, "image_semantic_loss");
    require_same_shape(k_s.values.shape(), k_t.values.shape(), "image_semantic_loss");
    const std::size_t batch = k_s.values.dim(0), classes = k_s.values.dim(1);
    const T scale = T{1} / static_cast<T>(batch * classes);
    if (grad_ks) *grad_ks = Tensor<T>(k_s.values.shape());
    T sum{0};
    for (std::size_t i = 0; i < k_s.values.size(); ++i) {
        const T d = k_s.values[i] - k_t.values[i];
        sum += std::abs(d);
        if (grad_ks) (*grad_ks)[i] = d > T{0} ? scale : (d < T{0} ? -scale : T{0});
    }
    return sum * scale;
}

template <typename T>
RegionalContentVectors<T> regional_content_vectors(const Tensor<T>& features, Grid grid)
{
    require_rank(features.shape(), 4, "regional_content_vectors");
    const std::size_t bc = features.dim(0) * features.dim(1);
    const std::size_t h = features.dim(2), w = features.dim(3);
    if (grid.rows < 1 || grid.cols < 1 || grid.rows > h || grid.cols > w) {
        throw ShapeError("grid " + to_string(grid) + " exceeds feature extent " + std::to_string(h) + "x" +
                         std::to_string(w));
    }
    Tensor<T> out({features.dim(0), features.dim(1), grid.rows, grid.cols});
    for (std::size_t k = 0; k < bc; ++k) {
        const T* src = features.raw() + k * h * w;
        T* dst = out.raw() + k * grid.rows * grid.cols;
        for (std::size_t i = 0; i < grid.rows; ++i) {
            const std::size_t y0 = region_start(i, h, grid.rows), y1 = region_end(i, h, grid.rows);
            for (std::size_t j = 0; j < grid.cols; ++j) {
                const std::size_t x0 = region_start(j, w, grid.cols), x1 = region_end(j, w, grid.cols);
                T sum{0};
                for (std::size_t y = y0; y < y1; ++y)
                    for (std::size_t x = x0; x < x1; ++x) sum += src[y * w + x];
                dst[i * grid.cols + j] = sum / static_cast<T>((y1 - y0) * (x1 - x0));
            }
        }
    }
    return RegionalContentVectors<T>{std::move(out)};
}

template <typename T>
Tensor<T> regional_content_vectors_backward(const Tensor<T>& grad_vectors, const Shape& feature_shape)
{
    require_rank(grad_vectors.shape(), 4, "regional_content_vectors_backward");
    require_rank(feature_shape, 4, "regional_content_vectors_backward");
    const std::size_t rows = grad_vectors.dim(2), cols = grad_vectors.dim(3);
    const std::size_t h = feature_shape[2], w = feature_shape[3];
    const std::size_t bc = feature_shape[0] * feature_shape[1];
    if (grad_vectors.dim(0) * grad_vectors.dim(1) != bc) {
        throw ShapeError("regional_content_vectors_backward: batch/channel mismatch");
    }
    Tensor<T> out(feature_shape);
    for (std::size_t k = 0; k < bc; ++k) {
        const T* g = grad_vectors.raw() + k * rows * cols;
        T* dst = out.raw() + k * h * w;
        for (std::size_t i = 0; i < rows; ++i) {
            const std::size_t y0 = region_start(i, h, rows), y1 = region_end(i, h, rows);
            for (std::size_t j = 0; j < cols; ++j) {
                const std::size_t x0 = region_start(j, w, cols), x1 = region_end(j, w, cols);
                const T share = g[i * cols + j] / static_cast<T>((y1 - y0) * (x1 - x0));
                for (std::size_t y = y0; y < y1; ++y)
                    for (std::size_t x = x0; x < x1; ++x) dst[y * w + x] += share;
            }
        }
    }
    return out;
}

template <typename T>
SelfCorrelationMatrix<T> self_correlation(const RegionalContentVectors<T>& v)
{
    require_rank(v.values.shape(), 4, "self_correlation");
    const std::size_t batch = v.values.dim(0), channels = v.values.dim(1);
    const std::size_t regions = v.values.dim(2) * v.values.dim(3);
    const T eps = static_cast<T>(kCosineEpsilon);
    Tensor<T> out({batch, regions, regions});
    std::vector<T> norm(regions);
    for (std::size_t b = 0; b < batch; ++b) {
        const T* src = v.values.raw() + b * channels * regions;
        T* m = out.raw() + b * regions * regions;
        for (std::size_t r = 0; r < regions; ++r) {
            T sq{0};
            for (std::size_t c = 0; c < channels; ++c) sq += src[c * regions + r] * src[c * regions + r];
            norm[r] = std::max(std::sqrt(sq), eps);
        }
        for (std::size_t i = 0; i < regions; ++i) {
            for (std::size_t j = i; j < regions; ++j) {
                T dot{0};
                for (std::size_t c = 0; c < channels; ++c) dot += src[c * regions + i] * src[c * regions + j];
                // Rounding can push |dot| past the product of norms by an ulp.
                const T s = std::clamp(dot / (norm[i] * norm[j]), T{-1}, T{1});
                m[i * regions + j] = s;
                m[j * regions + i] = s;
            }
        }
    }
    return SelfCorrelationMatrix<T>{std::move(out)};
}

template <typename T>
Tensor<T> self_correlation_backward(const RegionalContentVectors<T>& v, const Tensor<T>& grad_matrix)
{
    require_rank(v.values.shape(), 4, "self_correlation_backward");
    const std::size_t batch = v.values.dim(0), channels = v.values.dim(1);
    const std::size_t regions = v.values.dim(2) * v.values.dim(3);
    require_same_shape(grad_matrix.shape(), Shape{batch, regions, regions}, "self_correlation_backward");
    const T eps = static_cast<T>(kCosineEpsilon);

    Tensor<T> out(v.values.shape());
    std::vector<T> norm(regions), raw_norm(regions), coef(regions * regions), radial(regions);
    for (std::size_t b = 0; b < batch; ++b) {
        const T* src = v.values.raw() + b * channels * regions;
        const T* g = grad_matrix.raw() + b * regions * regions;
        T* dst = out.raw() + b * channels * regions;
        for (std::size_t r = 0; r < regions; ++r) {
            T sq{0};
            for (std::size_t c = 0; c < channels; ++c) sq += src[c * regions + r] * src[c * regions + r];
            raw_norm[r] = std::sqrt(sq);
            norm[r] = std::max(raw_norm[r], eps);
        }
        // Symmetrized upstream gradient: dL/dv_k = sum_j (G_kj + G_jk) * d m_kj / d v_k.
        std::fill(radial.begin(), radial.end(), T{0});
        for (std::size_t k = 0; k < regions; ++k) {
            for (std::size_t j = 0; j < regions; ++j) {
                const T gs = g[k * regions + j] + g[j * regions + k];
                coef[k * regions + j] = gs / (norm[k] * norm[j]);
                if (raw_norm[k] > eps) {
                    T dot{0};
                    for (std::size_t c = 0; c < channels; ++c) dot += src[c * regions + k] * src[c * regions + j];
                    radial[k] += gs * dot / (norm[k] * norm[j]);
                }
            }
        }
        for (std::size_t c = 0; c < channels; ++c) {
            const T* row = src + c * regions;
            for (std::size_t k = 0; k < regions; ++k) {
                T acc{0};
                for (std::size_t j = 0; j < regions; ++j) acc += coef[k * regions + j] * row[j];
                if (raw_norm[k] > eps) acc -= radial[k] * row[k] / (norm[k] * norm[k]);
                dst[c * regions + k] = acc;
            }
        }
    }
    return out;
}

template <typename T>
T region_content_loss(const SelfCorrelationMatrix<T>& m_s, const SelfCorrelationMatrix<T>& m_t, std::type_identity_t<Tensor<T>>* grad_ms)
{
    require_rank(m_s.values.shape(), 3, "region_content_loss");
    require_same_shape(m_s.values.shape(), m_t.values.shape(), "region_content_loss");
    const T scale = T{1} / static_cast<T>(m_s.values.size());
    if (grad_ms) *grad_ms = Tensor<T>(m_s.values.shape());
    T sum{0};
    for (std::size_t i = 0; i < m_s.values.size(); ++i) {
        const T d = m_s.values[i] - m_t.values[i];
        sum += d * d;
        if (grad_ms) (*grad_ms)[i] = T{2} * d * scale;
    }
    return sum * scale;
}

LossReport total_loss(const LossParts& parts, const LossWeights& weights)
{
    weights.validate();
    const std::pair<const char*, double> named[] = {{"sup", parts.sup},
                                                    {"pixel_labeled", parts.pixel_labeled},
                                                    {"pixel_unlabeled", parts.pixel_unlabeled},
                                                    {"image_level", parts.image_level},
                                                    {"region_level", parts.region_level}};
    for (const auto& [name, value] : named) {
        if (!std::isfinite(value)) {
            std::ostringstream os;
            os << "non-finite loss component " << name << " = " << value;
            throw NonFiniteLossError(os.str());
        }
    }
    LossReport r;
    r.sup = parts.sup;
    r.pixel_labeled = parts.pixel_labeled;
    r.pixel_unlabeled = parts.pixel_unlabeled;
    r.image_level = parts.image_level;
    r.region_level = parts.region_level;
    r.total = parts.sup + parts.pixel_labeled + parts.pixel_unlabeled + weights.lambda1 * parts.image_level +
              weights.lambda2 * parts.region_level;
    return r;
}

#define MGD_INSTANTIATE_LOSSES(T)                                                                        \
    template T supervised_ce(const PredictionMap<T>&, const LabelMask&, Tensor<T>*);                    \
    template LabelMask pseudo_label(const PredictionMap<T>&);                                            \
    template T pixel_ce(const PredictionMap<T>&, const PredictionMap<T>&, Tensor<T>*, TargetKind);       \
    template T pixel_consistency(const PredictionMap<T>&, const PredictionMap<T>&, const PredictionMap<T>&, \
                                 Tensor<T>*, TargetKind);                                                \
    template GlobalSemanticVector<T> global_semantic_vector(const PredictionMap<T>&);                   \
    template Tensor<T> global_semantic_vector_backward(const Tensor<T>&, std::size_t, std::size_t);      \
    template T image_semantic_loss(const GlobalSemanticVector<T>&, const GlobalSemanticVector<T>&, Tensor<T>*); \
    template RegionalContentVectors<T> regional_content_vectors(const Tensor<T>&, Grid);                \
    template Tensor<T> regional_content_vectors_backward(const Tensor<T>&, const Shape&);                \
    template SelfCorrelationMatrix<T> self_correlation(const RegionalContentVectors<T>&);               \
    template Tensor<T> self_correlation_backward(const RegionalContentVectors<T>&, const Tensor<T>&);    \
    template T region_content_loss(const SelfCorrelationMatrix<T>&, const SelfCorrelationMatrix<T>&, Tensor<T>*);

MGD_INSTANTIATE_LOSSES(float)
MGD_INSTANTIATE_LOSSES(double)

#undef MGD_INSTANTIATE_LOSSES

} // namespace mgd::losses
