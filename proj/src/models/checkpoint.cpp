#include "mgd/models/checkpoint.hpp"

#include "mgd/models/toy.hpp"

#include <fstream>

namespace mgd::models {

namespace fs = std::filesystem;

void save_checkpoint(const SegmentationNetwork& net, const fs::path& dir, const Manifest& extra)
{
    const auto* toy = dynamic_cast<const EncoderDecoder*>(&net);
    if (!toy) throw std::invalid_argument("save_checkpoint: unsupported network type " + net.architecture());
    fs::create_directories(dir);

    {
        std::ofstream blob(dir / kParameterBlobName, std::ios::binary);
        if (!blob) throw std::runtime_error("cannot write " + (dir / kParameterBlobName).string());
        for (const auto& p : net.parameters()) {
            blob.write(reinterpret_cast<const char*>(p.value.raw()),
                       static_cast<std::streamsize>(p.value.size() * sizeof(float)));
        }
        if (!blob) throw std::runtime_error("failed writing " + (dir / kParameterBlobName).string());
    }

    Manifest m;
    m.set("format", "mgd-checkpoint-v1");
    m.set("architecture", net.architecture());
    m.set("n_classes", net.n_classes());
    m.set("width", toy->spec().width);
    m.set("mid_blocks", toy->spec().mid_blocks);
    m.set("seed", static_cast<unsigned long long>(net.seed()));
    m.set("param_count", net.parameter_count());
    m.set("param_hash", parameter_hash(net));
    for (const auto& [k, v] : extra.entries()) m.set(k, v);
    m.save(dir / kCheckpointManifestName);
}

Manifest read_checkpoint_manifest(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw std::runtime_error("checkpoint directory not found: " + dir.string());
    return Manifest::load(dir / kCheckpointManifestName);
}

std::unique_ptr<SegmentationNetwork> load_checkpoint(const fs::path& dir)
{
    const Manifest m = read_checkpoint_manifest(dir);
    if (m.get("format") != "mgd-checkpoint-v1") {
        throw std::runtime_error("unsupported checkpoint format '" + m.get("format") + "' in " + dir.string());
    }
    EncoderDecoderSpec spec;
    spec.architecture = m.get("architecture");
    spec.n_classes = static_cast<std::size_t>(m.get_int("n_classes"));
    spec.width = static_cast<std::size_t>(m.get_int("width"));
    spec.mid_blocks = static_cast<std::size_t>(m.get_int("mid_blocks"));
    spec.seed = std::stoull(m.get("seed"));
    auto net = build_network(spec);

    const fs::path blob_path = dir / kParameterBlobName;
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("cannot read " + blob_path.string());
    const auto expected = net->parameter_count() * sizeof(float);
    if (fs::file_size(blob_path) != expected) {
        throw std::runtime_error("parameter blob " + blob_path.string() + " has " +
                                 std::to_string(fs::file_size(blob_path)) + " bytes, expected " +
                                 std::to_string(expected));
    }
    for (auto& p : net->parameters()) {
        blob.read(reinterpret_cast<char*>(p.value.raw()), static_cast<std::streamsize>(p.value.size() * sizeof(float)));
    }
    if (!blob) throw std::runtime_error("failed reading " + blob_path.string());
    const auto hash = parameter_hash(*net);
    if (hash != m.get("param_hash")) {
        throw std::runtime_error("checkpoint " + dir.string() + " parameter hash mismatch: manifest " +
                                 m.get("param_hash") + ", blob " + hash);
    }
    return net;
}

} // namespace mgd::models
