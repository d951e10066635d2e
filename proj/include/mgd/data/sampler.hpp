#pragma once

#include "mgd/data/augment.hpp"
#include "mgd/data/dataset.hpp"

#include <random>
#include <span>

namespace mgd::data {

struct BatchIds {
    std::vector<std::size_t> labeled;
    std::vector<std::size_t> unlabeled;
};

/// Yields one labeled and one unlabeled batch of equal size per training step.
///
/// Each stream walks a shuffled permutation of its pool and reshuffles once fewer than
/// batch_size items remain, so the smaller pool cycles more often. A pool smaller than the
/// batch is sampled with replacement (a warning is logged once).
class CooperativeSampler {
public:
    CooperativeSampler(std::vector<std::size_t> labeled, std::vector<std::size_t> unlabeled, std::size_t batch_size,
                       std::uint64_t seed);

    BatchIds next();

    std::size_t labeled_epochs() const { return labeled_.epoch; }
    std::size_t unlabeled_epochs() const { return unlabeled_.epoch; }
    bool with_replacement() const { return labeled_.with_replacement || unlabeled_.with_replacement; }

private:
    struct Stream {
        std::vector<std::size_t> pool;
        std::vector<std::size_t> order;
        std::size_t cursor = 0;
        std::size_t epoch = 0;
        bool with_replacement = false;
        std::mt19937_64 rng;

        std::vector<std::size_t> take(std::size_t n);
    };
    std::size_t batch_size_;
    Stream labeled_;
    Stream unlabeled_;
};

struct TrainingBatch {
    ImageBatch images;
    LabelMask labels;
};

/// Loads and augments `indices` into one batch. Sample k of the batch uses a random stream derived
/// from (seed, step, stream, k), so the result is independent of `workers`.
TrainingBatch assemble_batch(const Dataset& dataset, std::span<const std::size_t> indices,
                             const AugmentOptions& options, std::uint64_t seed, std::uint64_t step,
                             std::uint64_t stream, std::size_t workers = 1);

/// Worker count from MGD_NUM_WORKERS (default 1, minimum 1).
std::size_t num_workers_from_env();

} // namespace mgd::data
