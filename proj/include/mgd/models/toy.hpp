#pragma once

#include "mgd/models/network.hpp"

namespace mgd::models {

/// Configuration of the small encoder-decoder used for students and toy teachers.
///
/// Layout (w = width):
///   stem   3x3 stride 2, 3 -> w, ReLU
///   down   3x3 stride 2, w -> 2w, ReLU
///   mid_k  3x3, 2w -> 2w, ReLU          (mid_blocks times)
///   resize to stem resolution, concat with stem output
///   dec    3x3, 3w -> w, ReLU           -> decoder features
///   cls    1x1, w -> N                  -> logits, resized to the input size
struct EncoderDecoderSpec {
    std::string architecture = "toy-student";
    std::size_t n_classes = 4;
    std::size_t width = 8;
    std::size_t mid_blocks = 1;
    std::uint64_t seed = 0;
};

class EncoderDecoder final : public SegmentationNetwork {
public:
    explicit EncoderDecoder(EncoderDecoderSpec spec);

    const EncoderDecoderSpec& spec() const { return spec_; }

    std::string architecture() const override { return spec_.architecture; }
    std::size_t n_classes() const override { return spec_.n_classes; }
    std::size_t depth() const override { return spec_.mid_blocks + 4; }
    std::size_t max_channels() const override { return std::max(2 * spec_.width, spec_.n_classes); }
    std::uint64_t seed() const override { return spec_.seed; }

    NetworkOutput forward(const Tensor<float>& images, ForwardTape* tape = nullptr) const override;
    void backward(const ForwardTape& tape, const Tensor<float>& grad_logits, const Tensor<float>* grad_features,
                  std::vector<Tensor<float>>& grads) const override;
    std::vector<LayerTrace> trace(std::size_t height, std::size_t width) const override;
    std::unique_ptr<SegmentationNetwork> clone() const override;

private:
    EncoderDecoderSpec spec_;
};

enum class TeacherKind { Deep, Wide };

TeacherKind parse_teacher_kind(const std::string& text);
std::string to_string(TeacherKind kind);

/// Shallow-and-thin student. Throws std::invalid_argument for width < 4.
std::unique_ptr<SegmentationNetwork> build_toy_student(std::size_t n_classes, std::size_t width = 8,
                                                       std::uint64_t seed = 0);

/// Deep-and-thin (Deep) or shallow-and-wide (Wide) teacher.
std::unique_ptr<SegmentationNetwork> build_toy_teacher(TeacherKind kind, std::size_t n_classes,
                                                       std::uint64_t seed = 0);

/// Rebuilds a network from its architecture tag and hyperparameters.
std::unique_ptr<SegmentationNetwork> build_network(const EncoderDecoderSpec& spec);

} // namespace mgd::models
