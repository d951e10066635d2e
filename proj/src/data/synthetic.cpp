#include "mgd/data/synthetic.hpp"

#include "mgd/data/rng.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mgd::data {

namespace {

constexpr std::array<std::array<float, 3>, SyntheticSceneSpec::kMaxClasses> kPalette{{
    {0.45f, 0.45f, 0.45f}, // background reference (unused for shapes)
    {0.85f, 0.20f, 0.20f},
    {0.20f, 0.75f, 0.25f},
    {0.20f, 0.30f, 0.85f},
    {0.90f, 0.85f, 0.20f},
    {0.80f, 0.25f, 0.80f},
    {0.20f, 0.80f, 0.85f},
    {0.95f, 0.55f, 0.15f},
}};

bool inside(std::size_t kind, double dx, double dy, double r)
{
    const double ax = std::abs(dx), ay = std::abs(dy);
    switch (kind) {
    case 0: // disk
        return dx * dx + dy * dy <= r * r;
    case 1: // square
        return ax <= 0.85 * r && ay <= 0.85 * r;
    case 2: { // upward triangle
        if (dy < -r || dy > 0.8 * r) return false;
        return ax <= (dy + r) / 1.8;
    }
    case 3: { // ring
        const double d2 = dx * dx + dy * dy;
        return d2 <= r * r && d2 >= 0.3 * r * r;
    }
    case 4: // diamond
        return ax + ay <= r;
    case 5: // cross
        return (ax <= 0.3 * r && ay <= r) || (ay <= 0.3 * r && ax <= r);
    default: // ellipse
        return (dx / r) * (dx / r) + (dy / (0.5 * r)) * (dy / (0.5 * r)) <= 1.0;
    }
}

Sample generate_one(const SyntheticSceneSpec& spec, std::size_t index, const std::string& id)
{
    std::mt19937_64 rng(mix_seed(spec.seed, index));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::size_t h = spec.height, w = spec.width;

    std::vector<float> rgb(h * w * 3);
    Tensor<std::uint8_t> mask({h, w});

    // Background: tinted gray with oriented stripes and pixel noise.
    std::array<double, 3> base{};
    for (auto& b : base) b = 0.3 + 0.35 * unit(rng);
    const double angle = unit(rng) * std::numbers::pi;
    const double freq = 0.15 + 0.35 * unit(rng);
    const double amp = 0.05 + 0.1 * unit(rng);
    const double phase = unit(rng) * 2.0 * std::numbers::pi;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double t = std::sin(freq * (std::cos(angle) * x + std::sin(angle) * y) + phase) * amp;
            for (std::size_t c = 0; c < 3; ++c) rgb[(y * w + x) * 3 + c] = static_cast<float>(base[c] + t);
        }
    }

    const std::size_t shape_span = spec.max_shapes - spec.min_shapes + 1;
    const std::size_t n_shapes = spec.min_shapes + static_cast<std::size_t>(unit(rng) * shape_span) % shape_span;
    const double extent = static_cast<double>(std::min(h, w));
    for (std::size_t s = 0; s < n_shapes; ++s) {
        const std::size_t cls = 1 + static_cast<std::size_t>(unit(rng) * (spec.n_classes - 1)) % (spec.n_classes - 1);
        const double r = extent * (spec.min_radius + (spec.max_radius - spec.min_radius) * unit(rng));
        const double cx = unit(rng) * w;
        const double cy = unit(rng) * h;
        std::size_t color_cls = cls;
        if (unit(rng) >= spec.color_consistency && spec.n_classes > 2) {
            const std::size_t other = 1 + static_cast<std::size_t>(unit(rng) * (spec.n_classes - 2)) % (spec.n_classes - 2);
            color_cls = other >= cls ? other + 1 : other;
        }
        std::array<double, 3> color{};
        for (std::size_t c = 0; c < 3; ++c) {
            color[c] = std::clamp(kPalette[color_cls][c] + 0.12 * noise(rng), 0.0, 1.0);
        }
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                if (!inside(cls - 1, x + 0.5 - cx, y + 0.5 - cy, r)) continue;
                mask(y, x) = static_cast<std::uint8_t>(cls);
                for (std::size_t c = 0; c < 3; ++c) rgb[(y * w + x) * 3 + c] = static_cast<float>(color[c]);
            }
        }
    }

    std::vector<std::uint8_t> bytes(h * w * 3);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const double v = rgb[i] + 0.04 * noise(rng);
        bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    return Sample{id, normalize_rgb(bytes.data(), h, w), std::move(mask)};
}

} // namespace

void SyntheticSceneSpec::validate() const
{
    if (n_classes < 2 || n_classes > kMaxClasses) {
        throw std::invalid_argument("synthetic scenes support 2.." + std::to_string(kMaxClasses) + " classes");
    }
    if (height < 8 || width < 8) throw std::invalid_argument("synthetic images must be at least 8x8");
    if (min_shapes > max_shapes) throw std::invalid_argument("min_shapes exceeds max_shapes");
    if (!(min_radius > 0.0) || min_radius > max_radius) throw std::invalid_argument("invalid shape radius range");
    if (color_consistency < 0.0 || color_consistency > 1.0) {
        throw std::invalid_argument("color_consistency must lie in [0, 1]");
    }
}

InMemoryDataset generate_synthetic(const SyntheticSceneSpec& spec, std::size_t n_images, const std::string& prefix,
                                   std::size_t first_index)
{
    spec.validate();
    if (n_images < 1) throw std::invalid_argument("generate_synthetic needs n_images >= 1");
    std::vector<Sample> samples;
    samples.reserve(n_images);
    for (std::size_t i = 0; i < n_images; ++i) {
        char id[64];
        std::snprintf(id, sizeof(id), "%s_%05zu", prefix.c_str(), first_index + i);
        samples.push_back(generate_one(spec, first_index + i, id));
    }
    return InMemoryDataset(std::move(samples));
}

} // namespace mgd::data
