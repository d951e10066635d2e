#pragma once

#include "mgd/core/types.hpp"

#include <cstdint>
#include <vector>

namespace mgd::data {
class Dataset;
}
namespace mgd::models {
class SegmentationNetwork;
}

namespace mgd::eval {

/// How classes absent from both ground truth and prediction enter the mean IoU.
enum class ZeroUnionPolicy {
    Exclude,    ///< left out of the mean (default)
    CountAsZero ///< contribute an IoU of 0
};

/// N x N pixel tally; rows are ground truth, columns are predictions.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t n_classes);

    std::size_t n_classes() const { return n_; }
    std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
    std::uint64_t total() const;

    /// Skips IGNORE ground-truth pixels. Throws for predictions >= N or shape mismatch.
    void accumulate(const LabelMask& predicted, const LabelMask& truth);

    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

    /// Per-class IoU; NaN for zero-union classes.
    std::vector<double> class_iou() const;

private:
    std::size_t n_;
    std::vector<std::uint64_t> counts_;
};

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMask& predicted, const LabelMask& truth);

/// Mean IoU over classes. Throws std::domain_error when every class has zero union.
double miou(const ConfusionMatrix& cm, ZeroUnionPolicy policy = ZeroUnionPolicy::Exclude);

/// Argmax segmentation of every dataset sample at native resolution, tallied into one matrix.
ConfusionMatrix evaluate(const models::SegmentationNetwork& net, const data::Dataset& dataset,
                         std::size_t batch_size = 8);

} // namespace mgd::eval
