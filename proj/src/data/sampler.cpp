#include "mgd/data/sampler.hpp"

#include "mgd/data/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <thread>

namespace mgd::data {

std::vector<std::size_t> CooperativeSampler::Stream::take(std::size_t n)
{
    std::vector<std::size_t> out;
    out.reserve(n);
    if (with_replacement) {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        for (std::size_t i = 0; i < n; ++i) out.push_back(pool[pick(rng)]);
        ++epoch;
        return out;
    }
    if (order.empty() || cursor + n > order.size()) {
        order = pool;
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
        if (!order.empty()) ++epoch;
    }
    out.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
               order.begin() + static_cast<std::ptrdiff_t>(cursor + n));
    cursor += n;
    return out;
}

CooperativeSampler::CooperativeSampler(std::vector<std::size_t> labeled, std::vector<std::size_t> unlabeled,
                                       std::size_t batch_size, std::uint64_t seed)
    : batch_size_(batch_size)
{
    if (labeled.empty() || unlabeled.empty()) throw std::invalid_argument("sampler needs nonempty labeled and unlabeled sets");
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    const std::set<std::size_t> lab(labeled.begin(), labeled.end());
    for (const auto u : unlabeled) {
        if (lab.count(u)) throw std::invalid_argument("index " + std::to_string(u) + " is both labeled and unlabeled");
    }
    labeled_.pool = std::move(labeled);
    unlabeled_.pool = std::move(unlabeled);
    labeled_.rng.seed(mix_seed(seed, 0x1abe1));
    unlabeled_.rng.seed(mix_seed(seed, 0x0b1abe1));
    for (auto* s : {&labeled_, &unlabeled_}) {
        s->with_replacement = batch_size > s->pool.size();
    }
    if (with_replacement()) {
        spdlog::warn("batch size {} exceeds a data pool (labeled {}, unlabeled {}); sampling that pool with replacement",
                     batch_size, labeled_.pool.size(), unlabeled_.pool.size());
    }
}

BatchIds CooperativeSampler::next()
{
    BatchIds ids;
    ids.labeled = labeled_.take(batch_size_);
    ids.unlabeled = unlabeled_.take(batch_size_);
    return ids;
}

TrainingBatch assemble_batch(const Dataset& dataset, std::span<const std::size_t> indices,
                             const AugmentOptions& options, std::uint64_t seed, std::uint64_t step,
                             std::uint64_t stream, std::size_t workers)
{
    if (indices.empty()) throw std::invalid_argument("cannot assemble an empty batch");
    std::vector<Sample> samples(indices.size());
    auto load = [&](std::size_t k) {
        std::mt19937_64 rng(mix_seed(seed, step, stream, k));
        samples[k] = augment(dataset.get(indices[k]), options, rng);
    };
    workers = std::clamp<std::size_t>(workers, 1, indices.size());
    if (workers == 1) {
        for (std::size_t k = 0; k < indices.size(); ++k) load(k);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t k = t; k < indices.size(); k += workers) load(k);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    const std::size_t h = samples[0].image.dim(1), w = samples[0].image.dim(2);
    TrainingBatch batch;
    batch.images.pixels = Tensor<float>({samples.size(), 3, h, w});
    batch.labels.classes = Tensor<std::uint8_t>({samples.size(), h, w});
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& s = samples[k];
        if (s.image.dim(1) != h || s.image.dim(2) != w) {
            throw ShapeError("batch samples differ in size; set a crop size for augmentation");
        }
        std::copy(s.image.data().begin(), s.image.data().end(), batch.images.pixels.raw() + k * 3 * h * w);
        std::copy(s.mask.data().begin(), s.mask.data().end(), batch.labels.classes.raw() + k * h * w);
        batch.images.ids.push_back(s.id);
    }
    return batch;
}

std::size_t num_workers_from_env()
{
    const char* v = std::getenv("MGD_NUM_WORKERS");
    if (!v) return 1;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 1) {
        spdlog::warn("ignoring invalid MGD_NUM_WORKERS='{}'", v);
        return 1;
    }
    return static_cast<std::size_t>(n);
}

} // namespace mgd::data
