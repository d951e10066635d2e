#include "mgd/data/augment.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>

namespace mgd::data {

Sample hflip(const Sample& sample)
{
    Sample out = sample;
    const std::size_t c = sample.image.dim(0), h = sample.image.dim(1), w = sample.image.dim(2);
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.image(k, y, x) = sample.image(k, y, w - 1 - x);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) out.mask(y, x) = sample.mask(y, w - 1 - x);
    return out;
}

Sample scaled_crop(const Sample& sample, double scale, std::size_t y0, std::size_t x0, std::size_t out_h,
                   std::size_t out_w)
{
    if (!(scale > 0.0)) throw std::invalid_argument("scaled_crop needs a positive scale");
    const std::size_t c = sample.image.dim(0), h = sample.image.dim(1), w = sample.image.dim(2);
    const auto sh = static_cast<std::size_t>(std::lround(h * scale));
    const auto sw = static_cast<std::size_t>(std::lround(w * scale));
    const cv::Size target(static_cast<int>(sw), static_cast<int>(sh));

    Sample out;
    out.id = sample.id;
    out.image = Tensor<float>({c, out_h, out_w});
    out.mask = Tensor<std::uint8_t>({out_h, out_w}, kIgnoreLabel);

    for (std::size_t k = 0; k < c; ++k) {
        const cv::Mat plane(static_cast<int>(h), static_cast<int>(w), CV_32F,
                            const_cast<float*>(sample.image.raw() + k * h * w));
        cv::Mat scaled;
        if (sh == h && sw == w) {
            scaled = plane;
        } else {
            cv::resize(plane, scaled, target, 0, 0, cv::INTER_LINEAR);
        }
        for (std::size_t y = 0; y < out_h && y0 + y < sh; ++y) {
            const float* row = scaled.ptr<float>(static_cast<int>(y0 + y));
            for (std::size_t x = 0; x < out_w && x0 + x < sw; ++x) out.image(k, y, x) = row[x0 + x];
        }
    }
    const cv::Mat mask(static_cast<int>(h), static_cast<int>(w), CV_8U, const_cast<std::uint8_t*>(sample.mask.raw()));
    cv::Mat scaled_mask;
    if (sh == h && sw == w) {
        scaled_mask = mask;
    } else {
        cv::resize(mask, scaled_mask, target, 0, 0, cv::INTER_NEAREST);
    }
    for (std::size_t y = 0; y < out_h && y0 + y < sh; ++y) {
        const auto* row = scaled_mask.ptr<std::uint8_t>(static_cast<int>(y0 + y));
        for (std::size_t x = 0; x < out_w && x0 + x < sw; ++x) out.mask(y, x) = row[x0 + x];
    }
    return out;
}

Sample augment(const Sample& sample, const AugmentOptions& options, std::mt19937_64& rng)
{
    const std::size_t h = sample.image.dim(1), w = sample.image.dim(2);
    const std::size_t out_h = options.crop_height ? options.crop_height : h;
    const std::size_t out_w = options.crop_width ? options.crop_width : w;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Draws happen unconditionally so the random stream does not depend on the options.
    const bool flip = unit(rng) < 0.5;
    const double scale = options.min_scale + (options.max_scale - options.min_scale) * unit(rng);
    const double ry = unit(rng), rx = unit(rng);
    if (!options.enabled) {
        if (out_h == h && out_w == w) return sample;
        return scaled_crop(sample, 1.0, 0, 0, out_h, out_w);
    }
    const Sample base = options.hflip && flip ? hflip(sample) : sample;
    const auto sh = static_cast<std::size_t>(std::lround(h * scale));
    const auto sw = static_cast<std::size_t>(std::lround(w * scale));
    const std::size_t y0 = sh > out_h ? static_cast<std::size_t>(ry * static_cast<double>(sh - out_h + 1)) : 0;
    const std::size_t x0 = sw > out_w ? static_cast<std::size_t>(rx * static_cast<double>(sw - out_w + 1)) : 0;
    return scaled_crop(base, scale, std::min(y0, sh > out_h ? sh - out_h : 0), std::min(x0, sw > out_w ? sw - out_w : 0),
                       out_h, out_w);
}

} // namespace mgd::data
