#pragma once

// Random-instance gradient checks of the loss functions against central differences, in double.
// Shared by the unit tests and the acceptance binary.

#include "mgd/losses/losses.hpp"

#include "support/oracle.hpp"

#include <string>

namespace mgd::oracle {

struct GradientCheck {
    std::string what;
    Shape input_shape;
    double relative_error = 0.0;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;

inline Shape random_map_shape(Rng& rng, std::size_t min_classes = 2)
{
    return {uniform_size(rng, 1, 2), uniform_size(rng, min_classes, 5), uniform_size(rng, 1, 8),
            uniform_size(rng, 1, 8)};
}

inline GradientCheck check_supervised_ce(Rng& rng)
{
    const auto s = random_map_shape(rng);
    const auto student = random_prediction<double>(s[0], s[1], s[2], s[3], rng, 2.0);
    auto labels = random_labels(s[0], s[2], s[3], s[1], rng, 0.2);
    labels.classes[0] = 0;
    Tensor<double> analytic;
    losses::supervised_ce(student, labels, &analytic);
    const auto numeric = finite_difference(
        [&](const Tensor<double>& p) { return losses::supervised_ce(PredictionMap<double>{p}, labels); },
        student.probs, kFiniteDifferenceStep);
    return {"supervised_ce", s, relative_error(analytic, numeric)};
}

inline GradientCheck check_pixel_consistency(Rng& rng, losses::TargetKind targets = losses::TargetKind::Hard)
{
    const auto s = random_map_shape(rng);
    const auto student = random_prediction<double>(s[0], s[1], s[2], s[3], rng, 2.0);
    const auto t_d = random_prediction<double>(s[0], s[1], s[2], s[3], rng);
    const auto t_w = random_prediction<double>(s[0], s[1], s[2], s[3], rng);
    Tensor<double> analytic;
    losses::pixel_consistency(student, t_d, t_w, &analytic, targets);
    const auto numeric = finite_difference(
        [&](const Tensor<double>& p) {
            return losses::pixel_consistency(PredictionMap<double>{p}, t_d, t_w, nullptr, targets);
        },
        student.probs, kFiniteDifferenceStep);
    return {targets == losses::TargetKind::Hard ? "pixel_consistency" : "pixel_consistency(soft)", s,
            relative_error(analytic, numeric)};
}

/// Gradient of the image-level loss with respect to the student's probability map.
inline GradientCheck check_image_semantic_loss(Rng& rng)
{
    const auto s = random_map_shape(rng);
    const auto student = random_prediction<double>(s[0], s[1], s[2], s[3], rng);
    const auto teacher = random_prediction<double>(s[0], s[1], s[2], s[3], rng);
    const auto k_t = losses::global_semantic_vector(teacher);
    Tensor<double> grad_k;
    losses::image_semantic_loss(losses::global_semantic_vector(student), k_t, &grad_k);
    const auto analytic = losses::global_semantic_vector_backward(grad_k, s[2], s[3]);
    const auto numeric = finite_difference(
        [&](const Tensor<double>& p) {
            return losses::image_semantic_loss(losses::global_semantic_vector(PredictionMap<double>{p}), k_t);
        },
        student.probs, kFiniteDifferenceStep);
    return {"image_semantic_loss", s, relative_error(analytic, numeric)};
}

/// Gradient of the region-level loss with respect to the student's decoder features, through
/// pooling and self-correlation. Instances have at least two channels and two grid cells; with
/// fewer, every cosine is constant and the gradient is identically zero.
inline GradientCheck check_region_content_loss(Rng& rng)
{
    Shape s;
    Grid grid;
    do {
        s = {uniform_size(rng, 1, 2), uniform_size(rng, 2, 5), uniform_size(rng, 1, 8), uniform_size(rng, 1, 8)};
        grid = {uniform_size(rng, 1, s[2]), uniform_size(rng, 1, s[3])};
    } while (grid.rows * grid.cols < 2);
    const auto features = random_tensor<double>(s, rng);
    const auto teacher = random_tensor<double>({s[0], uniform_size(rng, 1, 6), s[2], s[3]}, rng);
    const auto m_t = losses::self_correlation(losses::regional_content_vectors(teacher, grid));

    const auto v = losses::regional_content_vectors(features, grid);
    Tensor<double> grad_m;
    losses::region_content_loss(losses::self_correlation(v), m_t, &grad_m);
    const auto analytic =
        losses::regional_content_vectors_backward(losses::self_correlation_backward(v, grad_m), features.shape());
    const auto numeric = finite_difference(
        [&](const Tensor<double>& f) {
            return losses::region_content_loss(losses::self_correlation(losses::regional_content_vectors(f, grid)),
                                               m_t);
        },
        features, kFiniteDifferenceStep);
    return {"region_content_loss", s, relative_error(analytic, numeric)};
}

} // namespace mgd::oracle
