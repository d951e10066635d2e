#include "mgd/train/config.hpp"

#include <cmath>
#include <stdexcept>

namespace mgd::train {

LossSwitches loss_preset(const std::string& name)
{
    LossSwitches s{false, false, false, false, false, false};
    if (name == "sup") return s;
    s.pixel_labeled = s.pixel_unlabeled = true;
    if (name == "pixel") return s;
    if (name == "pixel-image") {
        s.image_td = true;
        return s;
    }
    if (name == "pixel-region") {
        s.region_tw = true;
        return s;
    }
    if (name == "mgd") return LossSwitches{};
    if (name == "all") return LossSwitches{true, true, true, true, true, true};
    throw std::invalid_argument("unknown loss preset '" + name + "'");
}

const std::vector<std::string>& loss_preset_names()
{
    static const std::vector<std::string> names{"sup", "pixel", "pixel-image", "pixel-region", "mgd", "all"};
    return names;
}

void TrainConfig::validate() const
{
    if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("lr must be positive");
    if (total_steps == 0) throw std::invalid_argument("total_steps must be at least 1");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be nonnegative");
    if (poly_power < 0.0) throw std::invalid_argument("poly_power must be nonnegative");
    if (grid.rows == 0 || grid.cols == 0) throw std::invalid_argument("grid must be at least 1x1");
    if (augment.min_scale <= 0.0 || augment.max_scale < augment.min_scale) {
        throw std::invalid_argument("augment scale range must satisfy 0 < min_scale <= max_scale");
    }
    weights.validate();
}

std::size_t TrainConfig::validation_period() const
{
    if (eval_every) return eval_every;
    return std::max<std::size_t>(1, total_steps / 10);
}

double TrainConfig::learning_rate(std::size_t step) const
{
    const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr * std::pow(std::max(0.0, 1.0 - progress), poly_power);
}

std::string to_string(losses::TargetKind kind)
{
    return kind == losses::TargetKind::Hard ? "hard" : "soft";
}

losses::TargetKind parse_target_kind(const std::string& text)
{
    if (text == "hard") return losses::TargetKind::Hard;
    if (text == "soft") return losses::TargetKind::Soft;
    throw std::invalid_argument("pseudo-label kind must be 'hard' or 'soft', got '" + text + "'");
}

void TrainConfig::write(Manifest& m, const std::string& p) const
{
    m.set(p + "lr", lr);
    m.set(p + "momentum", momentum);
    m.set(p + "weight_decay", weight_decay);
    m.set(p + "poly_power", poly_power);
    m.set(p + "total_steps", total_steps);
    m.set(p + "batch_size", batch_size);
    m.set(p + "lambda1", weights.lambda1);
    m.set(p + "lambda2", weights.lambda2);
    m.set(p + "grid", to_string(grid));
    m.set(p + "seed", static_cast<unsigned long long>(seed));
    m.set(p + "loss.pixel_labeled", switches.pixel_labeled);
    m.set(p + "loss.pixel_unlabeled", switches.pixel_unlabeled);
    m.set(p + "loss.image_td", switches.image_td);
    m.set(p + "loss.image_tw", switches.image_tw);
    m.set(p + "loss.region_td", switches.region_td);
    m.set(p + "loss.region_tw", switches.region_tw);
    m.set(p + "pseudo_labels", to_string(targets));
    m.set(p + "eval_every", eval_every);
    m.set(p + "augment.enabled", augment.enabled);
    m.set(p + "augment.hflip", augment.hflip);
    m.set(p + "augment.min_scale", augment.min_scale);
    m.set(p + "augment.max_scale", augment.max_scale);
    m.set(p + "augment.crop_height", augment.crop_height);
    m.set(p + "augment.crop_width", augment.crop_width);
}

TrainConfig TrainConfig::read(const Manifest& m, const std::string& p)
{
    TrainConfig c;
    auto real = [&](const char* key, double& out) {
        if (m.find(p + key)) out = m.get_double(p + key);
    };
    auto count = [&](const char* key, std::size_t& out) {
        if (m.find(p + key)) {
            const long long v = m.get_int(p + key);
            if (v < 0) throw std::invalid_argument(p + key + " must be nonnegative");
            out = static_cast<std::size_t>(v);
        }
    };
    auto flag = [&](const char* key, bool& out) {
        if (m.find(p + key)) out = m.get_bool(p + key);
    };
    real("lr", c.lr);
    real("momentum", c.momentum);
    real("weight_decay", c.weight_decay);
    real("poly_power", c.poly_power);
    count("total_steps", c.total_steps);
    count("batch_size", c.batch_size);
    real("lambda1", c.weights.lambda1);
    real("lambda2", c.weights.lambda2);
    if (auto g = m.find(p + "grid")) c.grid = parse_grid(*g);
    if (auto s = m.find(p + "seed")) c.seed = std::stoull(*s);
    flag("loss.pixel_labeled", c.switches.pixel_labeled);
    flag("loss.pixel_unlabeled", c.switches.pixel_unlabeled);
    flag("loss.image_td", c.switches.image_td);
    flag("loss.image_tw", c.switches.image_tw);
    flag("loss.region_td", c.switches.region_td);
    flag("loss.region_tw", c.switches.region_tw);
    if (auto t = m.find(p + "pseudo_labels")) c.targets = parse_target_kind(*t);
    count("eval_every", c.eval_every);
    flag("augment.enabled", c.augment.enabled);
    flag("augment.hflip", c.augment.hflip);
    real("augment.min_scale", c.augment.min_scale);
    real("augment.max_scale", c.augment.max_scale);
    count("augment.crop_height", c.augment.crop_height);
    count("augment.crop_width", c.augment.crop_width);
    return c;
}

} // namespace mgd::train
