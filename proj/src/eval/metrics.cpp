#include "mgd/eval/metrics.hpp"

#include "mgd/data/dataset.hpp"
#include "mgd/models/network.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mgd::eval {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes) : n_(n_classes), counts_(n_classes * n_classes, 0)
{
    if (n_classes == 0) throw std::invalid_argument("confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const
{
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::accumulate(const LabelMask& predicted, const LabelMask& truth)
{
    require_same_shape(predicted.classes.shape(), truth.classes.shape(), "confusion matrix accumulate");
    for (std::size_t i = 0; i < truth.classes.size(); ++i) {
        const auto t = truth.classes[i];
        if (t == kIgnoreLabel) continue;
        const auto p = predicted.classes[i];
        if (p >= n_) {
            throw std::invalid_argument("predicted class " + std::to_string(p) + " out of range for " +
                                        std::to_string(n_) + " classes");
        }
        if (t >= n_) {
            throw std::invalid_argument("ground-truth class " + std::to_string(t) + " out of range for " +
                                        std::to_string(n_) + " classes");
        }
        ++counts_[t * n_ + p];
    }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other)
{
    if (other.n_ != n_) throw std::invalid_argument("cannot add confusion matrices of different sizes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

std::vector<double> ConfusionMatrix::class_iou() const
{
    std::vector<double> iou(n_, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < n_; ++c) {
        std::uint64_t row = 0, col = 0;
        for (std::size_t k = 0; k < n_; ++k) {
            row += at(c, k);
            col += at(k, c);
        }
        const std::uint64_t inter = at(c, c);
        const std::uint64_t uni = row + col - inter;
        if (uni > 0) iou[c] = static_cast<double>(inter) / static_cast<double>(uni);
    }
    return iou;
}

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMask& predicted, const LabelMask& truth)
{
    cm.accumulate(predicted, truth);
    return cm;
}

double miou(const ConfusionMatrix& cm, ZeroUnionPolicy policy)
{
    const auto iou = cm.class_iou();
    double sum = 0.0;
    std::size_t used = 0, nonzero_union = 0;
    for (const double v : iou) {
        if (std::isnan(v)) {
            if (policy == ZeroUnionPolicy::CountAsZero) ++used;
            continue;
        }
        sum += v;
        ++used;
        ++nonzero_union;
    }
    if (nonzero_union == 0) throw std::domain_error("mIoU of an empty confusion matrix");
    return sum / static_cast<double>(used);
}

ConfusionMatrix evaluate(const models::SegmentationNetwork& net, const data::Dataset& dataset, std::size_t batch_size)
{
    ConfusionMatrix cm(net.n_classes());
    const std::size_t classes = net.n_classes();
    for (std::size_t start = 0; start < dataset.size();) {
        // Samples may differ in size, so a batch only groups consecutive equal-sized samples.
        std::vector<data::Sample> group;
        group.push_back(dataset.get(start));
        const std::size_t h = group[0].image.dim(1), w = group[0].image.dim(2);
        std::size_t next = start + 1;
        while (next < dataset.size() && group.size() < batch_size) {
            auto s = dataset.get(next);
            if (s.image.dim(1) != h || s.image.dim(2) != w) break;
            group.push_back(std::move(s));
            ++next;
        }
        const std::size_t plane = h * w;
        Tensor<float> images({group.size(), 3, h, w});
        LabelMask truth{Tensor<std::uint8_t>({group.size(), h, w})};
        for (std::size_t k = 0; k < group.size(); ++k) {
            std::copy(group[k].image.data().begin(), group[k].image.data().end(), images.raw() + k * 3 * plane);
            std::copy(group[k].mask.data().begin(), group[k].mask.data().end(), truth.classes.raw() + k * plane);
        }
        const auto out = net.forward(images);
        LabelMask pred{Tensor<std::uint8_t>({group.size(), h, w})};
        for (std::size_t k = 0; k < group.size(); ++k) {
            const float* z = out.logits.raw() + k * classes * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                std::size_t best = 0;
                for (std::size_t c = 1; c < classes; ++c) {
                    if (z[c * plane + i] > z[best * plane + i]) best = c;
                }
                pred.classes[k * plane + i] = static_cast<std::uint8_t>(best);
            }
        }
        cm.accumulate(pred, truth);
        start = next;
    }
    return cm;
}

} // namespace mgd::eval
