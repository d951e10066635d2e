#include "mgd/train/distill.hpp"

#include "mgd/data/rng.hpp"
#include "mgd/eval/metrics.hpp"
#include "mgd/models/checkpoint.hpp"
#include "mgd/train/log.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace mgd::train {

namespace {

using Clock = std::chrono::steady_clock;
using models::NetworkOutput;

void add_scaled(Tensor<float>& dst, const Tensor<float>& src, float scale)
{
    require_same_shape(dst.shape(), src.shape(), "gradient accumulation");
    float* d = dst.raw();
    const float* s = src.raw();
    for (std::size_t i = 0; i < dst.size(); ++i) d[i] += scale * s[i];
}

/// Teacher outputs on one batch, computed on first use.
class TeacherOutputs {
public:
    TeacherOutputs(const models::FrozenNetwork& net, const Tensor<float>& images) : net_(net), images_(images) {}

    const NetworkOutput& output()
    {
        if (!out_) out_ = net_.forward(images_);
        return *out_;
    }
    const PredictionMap<float>& probs()
    {
        if (!probs_) probs_ = softmax(output().logits);
        return *probs_;
    }

private:
    const models::FrozenNetwork& net_;
    const Tensor<float>& images_;
    std::optional<NetworkOutput> out_;
    std::optional<PredictionMap<float>> probs_;
};

void check_images(const Tensor<float>& images, const char* what)
{
    require_rank(images.shape(), 4, what);
    if (images.dim(0) == 0 || images.dim(1) != 3) {
        throw ShapeError(std::string(what) + ": expected B x 3 x H x W with B > 0, got " + shape_string(images.shape()));
    }
}

double elapsed_seconds(Clock::time_point since)
{
    return std::chrono::duration<double>(Clock::now() - since).count();
}

double validation_miou(const models::SegmentationNetwork& net, const data::Dataset& val)
{
    return eval::miou(eval::evaluate(net, val));
}

void write_validation(const std::filesystem::path& path, const std::vector<std::pair<std::size_t, double>>& rows)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step\tmiou\n";
    for (const auto& [step, miou] : rows) out << step << '\t' << format_double(miou) << '\n';
}

} // namespace

StepGradients distillation_gradients(const models::SegmentationNetwork& student,
                                     const models::TeacherEnsemble& teachers, const data::TrainingBatch& labeled,
                                     const ImageBatch& unlabeled, const TrainConfig& cfg)
{
    const auto& sw = cfg.switches;
    const models::FrozenNetwork& deep = teachers.deep;
    const models::FrozenNetwork& wide = teachers.wide ? *teachers.wide : teachers.deep;
    const float lambda1 = static_cast<float>(cfg.weights.lambda1);
    const float lambda2 = static_cast<float>(cfg.weights.lambda2);

    check_images(labeled.images.pixels, "labeled batch");
    validate_label_mask(labeled.labels, student.n_classes());
    {
        const auto& x = labeled.images.pixels.shape();
        const auto& y = labeled.labels.classes.shape();
        if (y.size() != 3 || y[0] != x[0] || y[1] != x[2] || y[2] != x[3]) {
            throw ShapeError("labels " + shape_string(y) + " do not match labeled images " + shape_string(x));
        }
    }

    StepGradients result;
    result.grads = student.zero_gradients();
    losses::LossParts parts;

    // Labeled stream: supervised term plus pixel consistency against both teachers.
    {
        models::ForwardTape tape;
        const auto out = student.forward(labeled.images.pixels, &tape);
        const auto probs = softmax(out.logits);
        Tensor<float> grad_probs(probs.probs.shape());
        parts.sup = losses::supervised_ce(probs, labeled.labels, &grad_probs);
        if (sw.pixel_labeled) {
            TeacherOutputs td(deep, labeled.images.pixels);
            TeacherOutputs tw(wide, labeled.images.pixels);
            Tensor<float> g(probs.probs.shape());
            parts.pixel_labeled = losses::pixel_consistency(probs, td.probs(), tw.probs(), &g, cfg.targets);
            add_scaled(grad_probs, g, 1.0f);
        }
        student.backward(tape, softmax_backward(probs, grad_probs), nullptr, result.grads);
    }

    // Unlabeled stream: pixel, image and region levels.
    if (sw.any_unlabeled()) {
        check_images(unlabeled.pixels, "unlabeled batch");
        models::ForwardTape tape;
        const auto out = student.forward(unlabeled.pixels, &tape);
        const auto probs = softmax(out.logits);
        const std::size_t h = probs.probs.dim(2), w = probs.probs.dim(3);
        TeacherOutputs td(deep, unlabeled.pixels);
        TeacherOutputs tw(wide, unlabeled.pixels);

        Tensor<float> grad_probs(probs.probs.shape());
        if (sw.pixel_unlabeled) {
            Tensor<float> g(probs.probs.shape());
            parts.pixel_unlabeled = losses::pixel_consistency(probs, td.probs(), tw.probs(), &g, cfg.targets);
            add_scaled(grad_probs, g, 1.0f);
        }

        if (sw.image_td || sw.image_tw) {
            const auto k_s = losses::global_semantic_vector(probs);
            Tensor<float> grad_ks(k_s.values.shape());
            for (auto [enabled, teacher] : {std::pair{sw.image_td, &td}, std::pair{sw.image_tw, &tw}}) {
                if (!enabled) continue;
                Tensor<float> g(k_s.values.shape());
                parts.image_level += losses::image_semantic_loss(k_s, losses::global_semantic_vector(teacher->probs()), &g);
                add_scaled(grad_ks, g, 1.0f);
            }
            add_scaled(grad_probs, losses::global_semantic_vector_backward(grad_ks, h, w), lambda1);
        }

        std::optional<Tensor<float>> grad_features;
        if (sw.region_td || sw.region_tw) {
            const auto v_s = losses::regional_content_vectors(out.features, cfg.grid);
            const auto m_s = losses::self_correlation(v_s);
            Tensor<float> grad_ms(m_s.values.shape());
            for (auto [enabled, teacher] : {std::pair{sw.region_td, &td}, std::pair{sw.region_tw, &tw}}) {
                if (!enabled) continue;
                const auto m_t = losses::self_correlation(losses::regional_content_vectors(teacher->output().features, cfg.grid));
                Tensor<float> g(m_s.values.shape());
                parts.region_level += losses::region_content_loss(m_s, m_t, &g);
                add_scaled(grad_ms, g, lambda2);
            }
            grad_features = losses::regional_content_vectors_backward(losses::self_correlation_backward(v_s, grad_ms),
                                                                      out.features.shape());
        }

        student.backward(tape, softmax_backward(probs, grad_probs), grad_features ? &*grad_features : nullptr,
                         result.grads);
    }

    result.report = losses::total_loss(parts, cfg.weights);
    return result;
}

StepRecord distill_step(models::SegmentationNetwork& student, models::Sgd& optimizer,
                        const models::TeacherEnsemble& teachers, const data::TrainingBatch& labeled,
                        const ImageBatch& unlabeled, const TrainConfig& cfg, std::size_t step, double lr)
{
    auto g = distillation_gradients(student, teachers, labeled, unlabeled, cfg);
    optimizer.step(g.grads, static_cast<float>(lr));
    return StepRecord{step, g.report, lr, 0.0};
}

DistillationResult run_distillation(const TrainConfig& cfg, const SplitData& data, const models::TeacherEnsemble& teachers,
                           std::unique_ptr<models::SegmentationNetwork> student, const RunOptions& options)
{
    cfg.validate();
    if (!data.train) throw std::invalid_argument("run_distillation needs a training dataset");
    if (!student) throw std::invalid_argument("run_distillation needs a student network");

    const auto start = Clock::now();
    models::Sgd optimizer(student->parameters(),
                          {static_cast<float>(cfg.momentum), static_cast<float>(cfg.weight_decay)});
    data::CooperativeSampler sampler(data.labeled, data.unlabeled, cfg.batch_size, data::mix_seed(cfg.seed, 0x5a3));
    const std::size_t period = cfg.validation_period();

    DistillationResult result;
    result.log.reserve(cfg.total_steps);
    for (std::size_t step = 0; step < cfg.total_steps; ++step) {
        const auto ids = sampler.next();
        const auto lab = data::assemble_batch(*data.train, ids.labeled, cfg.augment, cfg.seed, step, 0, options.workers);
        ImageBatch unl;
        if (cfg.switches.any_unlabeled()) {
            unl = data::assemble_batch(*data.train, ids.unlabeled, cfg.augment, cfg.seed, step, 1, options.workers).images;
        }
        auto record = distill_step(*student, optimizer, teachers, lab, unl, cfg, step, cfg.learning_rate(step));
        record.wall_time = elapsed_seconds(start);
        result.log.push_back(record);
        if (options.on_step) options.on_step(record);

        const bool last = step + 1 == cfg.total_steps;
        if (data.val && ((step + 1) % period == 0 || last)) {
            const double miou = validation_miou(*student, *data.val);
            result.validation.emplace_back(step + 1, miou);
            spdlog::debug("step {}: validation mIoU {:.4f}", step + 1, miou);
            if (!result.best || miou > result.best_miou) {
                result.best = student->clone();
                result.best_miou = miou;
                result.best_step = step + 1;
            }
            if (last) result.final_miou = miou;
        }
    }
    if (!result.best) {
        result.best = student->clone();
        result.best_step = cfg.total_steps;
    }
    if (!teachers.intact()) throw std::logic_error("teacher parameters changed during distillation");

    if (options.out_dir) {
        std::filesystem::create_directories(*options.out_dir);
        Manifest extra;
        extra.set("best_step", result.best_step);
        extra.set("best_miou", result.best_miou);
        models::save_checkpoint(*result.best, *options.out_dir / "best", extra);
        Manifest final_extra;
        final_extra.set("step", cfg.total_steps);
        final_extra.set("miou", result.final_miou);
        models::save_checkpoint(*student, *options.out_dir / "final", final_extra);
        write_step_log(*options.out_dir / "steps.tsv", result.log);
        if (data.val) write_validation(*options.out_dir / "validation.tsv", result.validation);
    }
    result.student = std::move(student);
    return result;
}

std::vector<StepRecord> train_supervised(models::SegmentationNetwork& net, const TrainConfig& cfg,
                                         const data::Dataset& train, const std::vector<std::size_t>& indices,
                                         const RunOptions& options,
                                         std::vector<std::pair<std::size_t, double>>* validation,
                                         const data::Dataset* val)
{
    cfg.validate();
    if (indices.empty()) throw std::invalid_argument("supervised training needs labeled data");
    const auto start = Clock::now();
    models::Sgd optimizer(net.parameters(), {static_cast<float>(cfg.momentum), static_cast<float>(cfg.weight_decay)});
    std::mt19937_64 rng(data::mix_seed(cfg.seed, 0x7e));
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    const std::size_t period = cfg.validation_period();

    std::vector<StepRecord> log;
    log.reserve(cfg.total_steps);
    for (std::size_t step = 0; step < cfg.total_steps; ++step) {
        std::vector<std::size_t> ids;
        if (cfg.batch_size > indices.size()) {
            std::uniform_int_distribution<std::size_t> pick(0, indices.size() - 1);
            for (std::size_t k = 0; k < cfg.batch_size; ++k) ids.push_back(indices[pick(rng)]);
        } else {
            if (order.empty() || cursor + cfg.batch_size > order.size()) {
                order = indices;
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            ids.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                       order.begin() + static_cast<std::ptrdiff_t>(cursor + cfg.batch_size));
            cursor += cfg.batch_size;
        }
        const auto batch = data::assemble_batch(train, ids, cfg.augment, cfg.seed, step, 0, options.workers);

        models::ForwardTape tape;
        const auto out = net.forward(batch.images.pixels, &tape);
        const auto probs = softmax(out.logits);
        Tensor<float> grad_probs(probs.probs.shape());
        losses::LossParts parts;
        parts.sup = losses::supervised_ce(probs, batch.labels, &grad_probs);
        const auto report = losses::total_loss(parts, cfg.weights);
        auto grads = net.zero_gradients();
        net.backward(tape, softmax_backward(probs, grad_probs), nullptr, grads);
        const double lr = cfg.learning_rate(step);
        optimizer.step(grads, static_cast<float>(lr));

        log.push_back(StepRecord{step, report, lr, elapsed_seconds(start)});
        if (options.on_step) options.on_step(log.back());
        if (validation && val && ((step + 1) % period == 0 || step + 1 == cfg.total_steps)) {
            validation->emplace_back(step + 1, validation_miou(net, *val));
        }
    }
    return log;
}

PretrainResult pretrain_teacher(models::TeacherKind kind, const SplitData& data, const TrainConfig& cfg,
                                std::size_t n_classes, const RunOptions& options)
{
    if (!data.train) throw std::invalid_argument("pretrain_teacher needs a training dataset");
    auto net = models::build_toy_teacher(kind, n_classes, cfg.seed);
    std::vector<std::pair<std::size_t, double>> validation;
    auto log = train_supervised(*net, cfg, *data.train, data.labeled, options, &validation, data.val);
    const double final_miou = validation.empty() ? 0.0 : validation.back().second;
    if (options.out_dir) {
        Manifest extra;
        extra.set("teacher_kind", models::to_string(kind));
        extra.set("steps", cfg.total_steps);
        if (data.val) extra.set("val_miou", final_miou);
        models::save_checkpoint(*net, *options.out_dir, extra);
        write_step_log(*options.out_dir / "steps.tsv", log);
        if (data.val) write_validation(*options.out_dir / "validation.tsv", validation);
    }
    return PretrainResult{models::freeze(std::move(net)), std::move(log), std::move(validation), final_miou};
}

} // namespace mgd::train
