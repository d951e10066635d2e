#include "mgd/cli/config.hpp"

#include "mgd/core/hash.hpp"
#include "mgd/data/voc.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mgd::cli {

namespace {

void flatten(const YAML::Node& node, const std::string& prefix, Manifest& out)
{
    if (node.IsMap()) {
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            flatten(kv.second, prefix.empty() ? key : prefix + "." + key, out);
        }
    } else if (node.IsScalar()) {
        out.set(prefix, node.as<std::string>());
    } else if (node.IsNull()) {
        out.set(prefix, std::string());
    } else {
        throw std::invalid_argument("config key '" + prefix + "' must be a scalar or mapping");
    }
}

std::string get_or(const Manifest& m, const std::string& key, const std::string& fallback)
{
    const auto v = m.find(key);
    return v ? *v : fallback;
}

std::size_t get_count(const Manifest& m, const std::string& key, std::size_t fallback)
{
    if (!m.find(key)) return fallback;
    const long long v = m.get_int(key);
    if (v < 0) throw std::invalid_argument(key + " must be nonnegative");
    return static_cast<std::size_t>(v);
}

double get_real(const Manifest& m, const std::string& key, double fallback)
{
    return m.find(key) ? m.get_double(key) : fallback;
}

} // namespace

void ExperimentConfig::validate() const
{
    if (dataset.kind != "synthetic" && dataset.kind != "voc") {
        throw std::invalid_argument("dataset.kind must be 'synthetic' or 'voc', got '" + dataset.kind + "'");
    }
    if (dataset.n_classes < 2 || dataset.n_classes > 254) throw std::invalid_argument("dataset.n_classes must be in [2, 254]");
    if (dataset.kind == "synthetic") {
        auto spec = dataset.synthetic;
        spec.n_classes = dataset.n_classes;
        spec.validate();
        if (dataset.train_size == 0 || dataset.val_size == 0) throw std::invalid_argument("synthetic split sizes must be positive");
    } else if (dataset.root.empty()) {
        throw std::invalid_argument("dataset.root is required for voc datasets");
    }
    if (labeled_list.empty()) data::Fraction::parse(fraction);
    train.validate();
}

Manifest ExperimentConfig::to_manifest() const
{
    Manifest m;
    m.set("dataset.kind", dataset.kind);
    m.set("dataset.n_classes", dataset.n_classes);
    m.set("dataset.train_size", dataset.train_size);
    m.set("dataset.val_size", dataset.val_size);
    m.set("dataset.root", dataset.root);
    m.set("dataset.train_list", dataset.train_list);
    m.set("dataset.val_list", dataset.val_list);
    const auto& s = dataset.synthetic;
    m.set("dataset.synthetic.height", s.height);
    m.set("dataset.synthetic.width", s.width);
    m.set("dataset.synthetic.min_shapes", s.min_shapes);
    m.set("dataset.synthetic.max_shapes", s.max_shapes);
    m.set("dataset.synthetic.min_radius", s.min_radius);
    m.set("dataset.synthetic.max_radius", s.max_radius);
    m.set("dataset.synthetic.color_consistency", s.color_consistency);
    m.set("dataset.synthetic.seed", static_cast<unsigned long long>(s.seed));
    m.set("partition.fraction", fraction);
    m.set("partition.labeled_list", labeled_list);
    m.set("model.student_width", student_width);
    m.set("model.teacher_deep", teacher_deep);
    m.set("model.teacher_wide", teacher_wide);
    train.write(m, "train.");
    m.set("out", out);
    return m;
}

ExperimentConfig ExperimentConfig::from_manifest(const Manifest& m)
{
    const auto known = ExperimentConfig{}.to_manifest();
    std::set<std::string> keys;
    for (const auto& [k, v] : known.entries()) keys.insert(k);
    for (const auto& [k, v] : m.entries()) {
        if (!keys.count(k)) throw std::invalid_argument("unknown config key '" + k + "'");
    }

    ExperimentConfig c;
    c.dataset.kind = get_or(m, "dataset.kind", c.dataset.kind);
    c.dataset.n_classes = get_count(m, "dataset.n_classes", c.dataset.n_classes);
    c.dataset.train_size = get_count(m, "dataset.train_size", c.dataset.train_size);
    c.dataset.val_size = get_count(m, "dataset.val_size", c.dataset.val_size);
    c.dataset.root = get_or(m, "dataset.root", c.dataset.root);
    c.dataset.train_list = get_or(m, "dataset.train_list", c.dataset.train_list);
    c.dataset.val_list = get_or(m, "dataset.val_list", c.dataset.val_list);
    auto& s = c.dataset.synthetic;
    s.height = get_count(m, "dataset.synthetic.height", s.height);
    s.width = get_count(m, "dataset.synthetic.width", s.width);
    s.min_shapes = get_count(m, "dataset.synthetic.min_shapes", s.min_shapes);
    s.max_shapes = get_count(m, "dataset.synthetic.max_shapes", s.max_shapes);
    s.min_radius = get_real(m, "dataset.synthetic.min_radius", s.min_radius);
    s.max_radius = get_real(m, "dataset.synthetic.max_radius", s.max_radius);
    s.color_consistency = get_real(m, "dataset.synthetic.color_consistency", s.color_consistency);
    if (auto v = m.find("dataset.synthetic.seed")) s.seed = std::stoull(*v);
    s.n_classes = c.dataset.n_classes;
    c.fraction = get_or(m, "partition.fraction", c.fraction);
    c.labeled_list = get_or(m, "partition.labeled_list", c.labeled_list);
    c.student_width = get_count(m, "model.student_width", c.student_width);
    c.teacher_deep = get_or(m, "model.teacher_deep", c.teacher_deep);
    c.teacher_wide = get_or(m, "model.teacher_wide", c.teacher_wide);
    c.train = train::TrainConfig::read(m, "train.");
    c.out = get_or(m, "out", c.out);
    return c;
}

Manifest flatten_yaml(const std::string& text)
{
    Manifest m;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw std::invalid_argument(std::string("malformed config: ") + e.what());
    }
    if (root.IsNull()) return m;
    if (!root.IsMap()) throw std::invalid_argument("config must be a mapping at the top level");
    flatten(root, "", m);
    return m;
}

std::string nest_to_yaml(const Manifest& manifest)
{
    YAML::Node root(YAML::NodeType::Map);
    for (const auto& [key, value] : manifest.entries()) {
        std::vector<std::string> parts;
        std::stringstream ss(key);
        for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
        YAML::Node node = root;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            if (!node[parts[i]]) node[parts[i]] = YAML::Node(YAML::NodeType::Map);
            node.reset(node[parts[i]]);
        }
        node[parts.back()] = value;
    }
    YAML::Emitter out;
    out << root;
    return std::string(out.c_str()) + "\n";
}

std::string ExperimentConfig::to_yaml() const
{
    return nest_to_yaml(to_manifest());
}

ExperimentConfig ExperimentConfig::from_yaml(const std::string& text)
{
    return from_manifest(flatten_yaml(text));
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_yaml(buffer.str());
}

void ExperimentConfig::save(const std::filesystem::path& path) const
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config " + path.string());
    out << to_yaml();
}

std::string ExperimentConfig::hash() const
{
    ExperimentConfig copy = *this;
    copy.out.clear();
    return sha256_hex(copy.to_manifest().to_string());
}

LoadedData load_datasets(const DatasetConfig& config)
{
    LoadedData out;
    if (config.kind == "synthetic") {
        auto spec = config.synthetic;
        spec.n_classes = config.n_classes;
        out.train = std::make_unique<data::InMemoryDataset>(data::generate_synthetic(spec, config.train_size));
        out.val = std::make_unique<data::InMemoryDataset>(
            data::generate_synthetic(spec, config.val_size, "synth", config.train_size));
        return out;
    }
    if (config.kind != "voc") throw std::invalid_argument("unknown dataset kind '" + config.kind + "'");
    const std::filesystem::path root(config.root);
    if (!std::filesystem::is_directory(root)) throw std::runtime_error("dataset root not found: " + root.string());
    for (const auto& list : {config.train_list, config.val_list}) {
        if (!std::filesystem::exists(root / list)) throw std::runtime_error("split list not found: " + (root / list).string());
    }
    out.train = std::make_unique<data::VocStyleDataset>(root, root / config.train_list);
    out.val = std::make_unique<data::VocStyleDataset>(root, root / config.val_list);
    return out;
}

data::PartitionProtocol resolve_partition(const ExperimentConfig& config, const data::Dataset& train)
{
    if (!config.labeled_list.empty()) {
        const auto labeled = data::read_id_list(config.labeled_list);
        const std::set<std::string> chosen(labeled.begin(), labeled.end());
        data::PartitionProtocol p;
        p.requested_count = labeled.size();
        p.seed = config.train.seed;
        p.labeled_ids = labeled;
        for (const auto& id : train.ids()) {
            if (!chosen.count(id)) p.unlabeled_ids.push_back(id);
        }
        train.indices_of(labeled); // rejects ids absent from the training set
        return p;
    }
    return data::partition(train.ids(), data::Fraction::parse(config.fraction), config.train.seed);
}

} // namespace mgd::cli
