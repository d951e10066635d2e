#include "mgd/models/toy.hpp"

#include "mgd/models/ops.hpp"

#include <cmath>
#include <random>

namespace mgd::models {

namespace {

constexpr ops::ConvGeometry kStride2{3, 2, 1};
constexpr ops::ConvGeometry kSame3{3, 1, 1};
constexpr ops::ConvGeometry kPointwise{1, 1, 0};

// Parameter index layout: [stem.w, stem.b, down.w, down.b, mid0.w, mid0.b, ..., dec.w, dec.b, cls.w, cls.b]
struct Index {
    std::size_t mid_blocks;
    std::size_t stem() const { return 0; }
    std::size_t down() const { return 2; }
    std::size_t mid(std::size_t i) const { return 4 + 2 * i; }
    std::size_t dec() const { return 4 + 2 * mid_blocks; }
    std::size_t cls() const { return 6 + 2 * mid_blocks; }
};

// Tape layout: [input, stem, down, mid0..mid{k-1}, concat, features]
struct TapeIndex {
    std::size_t mid_blocks;
    std::size_t input() const { return 0; }
    std::size_t stem() const { return 1; }
    std::size_t down() const { return 2; }
    std::size_t mid(std::size_t i) const { return 3 + i; }
    std::size_t concat() const { return 3 + mid_blocks; }
    std::size_t features() const { return 4 + mid_blocks; }
};

Parameter make_conv_weight(const std::string& name, std::size_t out, std::size_t in, std::size_t k,
                           std::mt19937_64& rng)
{
    Tensor<float> w({out, in, k, k});
    const float stddev = std::sqrt(2.0f / static_cast<float>(in * k * k));
    std::normal_distribution<float> dist(0.0f, stddev);
    for (auto& v : w.data()) v = dist(rng);
    return Parameter{name + ".weight", std::move(w), true};
}

Parameter make_bias(const std::string& name, std::size_t out)
{
    return Parameter{name + ".bias", Tensor<float>({out}), true};
}

} // namespace

EncoderDecoder::EncoderDecoder(EncoderDecoderSpec spec) : spec_(std::move(spec))
{
    if (spec_.n_classes < 2) throw std::invalid_argument("segmentation network needs at least 2 classes");
    if (spec_.width < 1) throw std::invalid_argument("network width must be positive");
    const std::size_t w = spec_.width;
    std::mt19937_64 rng(spec_.seed);
    auto add_conv = [&](const std::string& name, std::size_t out, std::size_t in, std::size_t k) {
        params_.push_back(make_conv_weight(name, out, in, k, rng));
        params_.push_back(make_bias(name, out));
    };
    add_conv("stem", w, 3, 3);
    add_conv("down", 2 * w, w, 3);
    for (std::size_t i = 0; i < spec_.mid_blocks; ++i) add_conv("mid" + std::to_string(i), 2 * w, 2 * w, 3);
    add_conv("dec", w, 3 * w, 3);
    add_conv("cls", spec_.n_classes, w, 1);
}

NetworkOutput EncoderDecoder::forward(const Tensor<float>& images, ForwardTape* tape) const
{
    require_rank(images.shape(), 4, "network input");
    if (images.dim(1) != 3) throw ShapeError("network input must have 3 channels, got " + shape_string(images.shape()));
    const Index idx{spec_.mid_blocks};
    const auto& p = params_;

    Tensor<float> stem = ops::conv2d(images, p[idx.stem()].value, p[idx.stem() + 1].value, kStride2);
    ops::relu_inplace(stem);
    Tensor<float> cur = ops::conv2d(stem, p[idx.down()].value, p[idx.down() + 1].value, kStride2);
    ops::relu_inplace(cur);
    if (tape) {
        tape->saved.clear();
        tape->saved.reserve(5 + spec_.mid_blocks);
        tape->saved.push_back(images);
        tape->saved.push_back(stem);
        tape->saved.push_back(cur);
    }
    for (std::size_t i = 0; i < spec_.mid_blocks; ++i) {
        cur = ops::conv2d(cur, p[idx.mid(i)].value, p[idx.mid(i) + 1].value, kSame3);
        ops::relu_inplace(cur);
        if (tape) tape->saved.push_back(cur);
    }
    Tensor<float> up = ops::resize_bilinear(cur, stem.dim(2), stem.dim(3));
    Tensor<float> cat = ops::concat_channels(up, stem);
    Tensor<float> features = ops::conv2d(cat, p[idx.dec()].value, p[idx.dec() + 1].value, kSame3);
    ops::relu_inplace(features);
    Tensor<float> low = ops::conv2d(features, p[idx.cls()].value, p[idx.cls() + 1].value, kPointwise);
    Tensor<float> logits = ops::resize_bilinear(low, images.dim(2), images.dim(3));
    if (tape) {
        tape->saved.push_back(std::move(cat));
        tape->saved.push_back(features);
    }
    return NetworkOutput{std::move(logits), std::move(features)};
}

void EncoderDecoder::backward(const ForwardTape& tape, const Tensor<float>& grad_logits,
                              const Tensor<float>* grad_features, std::vector<Tensor<float>>& grads) const
{
    for (const auto& prm : params_) {
        if (!prm.trainable) {
            throw FrozenParameterError("backward through frozen parameter '" + prm.name + "' of " + spec_.architecture);
        }
    }
    const Index idx{spec_.mid_blocks};
    const TapeIndex t{spec_.mid_blocks};
    if (tape.saved.size() != 5 + spec_.mid_blocks) throw std::logic_error("forward tape does not match network");
    if (grads.size() != params_.size()) throw std::logic_error("gradient buffer does not match parameters");
    const auto& p = params_;
    const auto& features = tape.saved[t.features()];
    const auto& stem = tape.saved[t.stem()];

    Tensor<float> g_low = ops::resize_bilinear_backward(grad_logits, features.dim(2), features.dim(3));
    Tensor<float> g_feat;
    ops::conv2d_backward(features, p[idx.cls()].value, g_low, kPointwise, &g_feat, grads[idx.cls()],
                         &grads[idx.cls() + 1]);
    if (grad_features) {
        require_same_shape(grad_features->shape(), g_feat.shape(), "decoder feature gradient");
        for (std::size_t i = 0; i < g_feat.size(); ++i) g_feat[i] += (*grad_features)[i];
    }
    ops::relu_backward_inplace(features, g_feat);

    Tensor<float> g_cat;
    ops::conv2d_backward(tape.saved[t.concat()], p[idx.dec()].value, g_feat, kSame3, &g_cat, grads[idx.dec()],
                         &grads[idx.dec() + 1]);
    Tensor<float> g_up, g_stem;
    ops::split_channels(g_cat, 2 * spec_.width, g_up, g_stem);

    const auto& last = tape.saved[spec_.mid_blocks > 0 ? t.mid(spec_.mid_blocks - 1) : t.down()];
    Tensor<float> g = ops::resize_bilinear_backward(g_up, last.dim(2), last.dim(3));
    for (std::size_t i = spec_.mid_blocks; i-- > 0;) {
        ops::relu_backward_inplace(tape.saved[t.mid(i)], g);
        const auto& input = i == 0 ? tape.saved[t.down()] : tape.saved[t.mid(i - 1)];
        Tensor<float> g_in;
        ops::conv2d_backward(input, p[idx.mid(i)].value, g, kSame3, &g_in, grads[idx.mid(i)], &grads[idx.mid(i) + 1]);
        g = std::move(g_in);
    }
    ops::relu_backward_inplace(tape.saved[t.down()], g);
    Tensor<float> g_stem_from_down;
    ops::conv2d_backward(stem, p[idx.down()].value, g, kStride2, &g_stem_from_down, grads[idx.down()],
                         &grads[idx.down() + 1]);
    for (std::size_t i = 0; i < g_stem.size(); ++i) g_stem[i] += g_stem_from_down[i];
    ops::relu_backward_inplace(stem, g_stem);
    ops::conv2d_backward(tape.saved[t.input()], p[idx.stem()].value, g_stem, kStride2, nullptr, grads[idx.stem()],
                         &grads[idx.stem() + 1]);
}

std::vector<LayerTrace> EncoderDecoder::trace(std::size_t height, std::size_t width) const
{
    if (height == 0 || width == 0) throw std::invalid_argument("trace needs a nonempty input size");
    const std::size_t w = spec_.width;
    std::vector<LayerTrace> out;
    auto conv = [&](const std::string& name, std::size_t in, std::size_t outc, std::size_t k, std::size_t oh,
                    std::size_t ow) {
        out.push_back(LayerTrace{"conv2d", name, in, outc, k, k, oh, ow, true});
        out.push_back(LayerTrace{"relu", name + ".relu", outc, outc, 0, 0, oh, ow, false});
    };
    const std::size_t h1 = kStride2.output_extent(height), w1 = kStride2.output_extent(width);
    const std::size_t h2 = kStride2.output_extent(h1), w2 = kStride2.output_extent(w1);
    conv("stem", 3, w, 3, h1, w1);
    conv("down", w, 2 * w, 3, h2, w2);
    for (std::size_t i = 0; i < spec_.mid_blocks; ++i) conv("mid" + std::to_string(i), 2 * w, 2 * w, 3, h2, w2);
    out.push_back(LayerTrace{"resize", "up", 2 * w, 2 * w, 0, 0, h1, w1, false});
    out.push_back(LayerTrace{"concat", "skip", 3 * w, 3 * w, 0, 0, h1, w1, false});
    conv("dec", 3 * w, w, 3, h1, w1);
    out.push_back(LayerTrace{"conv2d", "cls", w, spec_.n_classes, 1, 1, h1, w1, true});
    out.push_back(LayerTrace{"resize", "logits", spec_.n_classes, spec_.n_classes, 0, 0, height, width, false});
    return out;
}

std::unique_ptr<SegmentationNetwork> EncoderDecoder::clone() const
{
    return std::make_unique<EncoderDecoder>(*this);
}

TeacherKind parse_teacher_kind(const std::string& text)
{
    if (text == "deep") return TeacherKind::Deep;
    if (text == "wide") return TeacherKind::Wide;
    throw std::invalid_argument("teacher kind must be 'deep' or 'wide', got '" + text + "'");
}

std::string to_string(TeacherKind kind)
{
    return kind == TeacherKind::Deep ? "deep" : "wide";
}

std::unique_ptr<SegmentationNetwork> build_toy_student(std::size_t n_classes, std::size_t width, std::uint64_t seed)
{
    if (width < 4) throw std::invalid_argument("student width must be at least 4, got " + std::to_string(width));
    return std::make_unique<EncoderDecoder>(EncoderDecoderSpec{"toy-student", n_classes, width, 1, seed});
}

std::unique_ptr<SegmentationNetwork> build_toy_teacher(TeacherKind kind, std::size_t n_classes, std::uint64_t seed)
{
    if (kind == TeacherKind::Deep) {
        return std::make_unique<EncoderDecoder>(EncoderDecoderSpec{"toy-teacher-deep", n_classes, 12, 5, seed});
    }
    return std::make_unique<EncoderDecoder>(EncoderDecoderSpec{"toy-teacher-wide", n_classes, 24, 1, seed});
}

std::unique_ptr<SegmentationNetwork> build_network(const EncoderDecoderSpec& spec)
{
    if (spec.architecture != "toy-student" && spec.architecture != "toy-teacher-deep" &&
        spec.architecture != "toy-teacher-wide") {
        throw std::invalid_argument("unknown architecture '" + spec.architecture + "'");
    }
    return std::make_unique<EncoderDecoder>(spec);
}

} // namespace mgd::models
