#include "eegret/checkpoint.hpp"

#include <cstring>

#include "container.hpp"
#include "eegret/errors.hpp"

namespace eegret {

namespace {

constexpr char kMagic[8] = {'E', 'E', 'G', 'R', 'C', 'K', 'P', 'T'};

nlohmann::json dims_to_json(const EncoderDims& d) {
    return {{"channels", d.channels},         {"timepoints", d.timepoints},
            {"conv_maps", d.conv_maps},       {"hidden1", d.hidden1},
            {"hidden2", d.hidden2},           {"embed_dim", d.embed_dim},
            {"feature_dim", d.feature_dim},   {"adapter_hidden", d.adapter_hidden},
            {"n_blur", d.n_blur},             {"dropout_mlp1", d.dropout_mlp1},
            {"dropout_mlp2", d.dropout_mlp2}, {"dropout_adapter", d.dropout_adapter},
            {"bn_momentum", d.bn_momentum},   {"bn_eps", d.bn_eps}};
}

EncoderDims dims_from_json(const nlohmann::json& j) {
    EncoderDims d;
    d.channels = j.at("channels");
    d.timepoints = j.at("timepoints");
    d.conv_maps = j.at("conv_maps");
    d.hidden1 = j.at("hidden1");
    d.hidden2 = j.at("hidden2");
    d.embed_dim = j.at("embed_dim");
    d.feature_dim = j.at("feature_dim");
    d.adapter_hidden = j.at("adapter_hidden");
    d.n_blur = j.at("n_blur");
    d.dropout_mlp1 = j.at("dropout_mlp1");
    d.dropout_mlp2 = j.at("dropout_mlp2");
    d.dropout_adapter = j.at("dropout_adapter");
    d.bn_momentum = j.at("bn_momentum");
    d.bn_eps = j.at("bn_eps");
    return d;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const auto& p = ckpt.params;
    if (static_cast<std::size_t>(p.values.size()) != p.layout.total())
        throw ShapeError("checkpoint parameters do not match their layout");
    nlohmann::json header;
    header["format"] = "eegret-checkpoint";
    header["version"] = 1;
    header["dtype"] = detail::kDtype;
    header["dims"] = dims_to_json(p.dims);
    header["streams"] = {{"blur", ckpt.streams.blur_streams},
                         {"use_evnet", ckpt.streams.use_evnet},
                         {"evnet", ckpt.streams.evnet_stream}};
    header["epoch"] = ckpt.epoch;
    header["seed"] = ckpt.seed;
    header["total"] = p.layout.total();
    auto& table = header["layout"] = nlohmann::json::array();
    for (const auto& b : p.layout.blocks())
        table.push_back({{"name", b.name}, {"offset", b.offset}, {"shape", b.shape}, {"trainable", b.trainable}});

    const std::string text = header.dump();
    std::vector<char> bytes(kMagic, kMagic + 8);
    const std::uint64_t len = text.size();
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((len >> (8 * i)) & 0xffu));
    bytes.insert(bytes.end(), text.begin(), text.end());
    const auto blob = detail::encode_f32le(std::span<const float>(p.values.data(), static_cast<std::size_t>(p.values.size())));
    bytes.insert(bytes.end(), blob.begin(), blob.end());
    detail::write_file_atomic(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw FormatError("not a checkpoint: " + path.string());
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
    if (bytes.size() < 16 + len) throw FormatError("truncated checkpoint header: " + path.string());
    const auto header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len),
                                              nullptr, false);
    if (header.is_discarded() || header.value("format", std::string{}) != "eegret-checkpoint")
        throw FormatError("corrupt checkpoint header: " + path.string());

    Checkpoint ckpt;
    try {
        ckpt.params = EncoderParams<float>(dims_from_json(header.at("dims")));
        const auto& s = header.at("streams");
        ckpt.streams.blur_streams = s.at("blur").get<std::vector<std::string>>();
        ckpt.streams.use_evnet = s.at("use_evnet");
        ckpt.streams.evnet_stream = s.at("evnet");
        ckpt.epoch = header.at("epoch");
        ckpt.seed = header.at("seed");
        const auto& table = header.at("layout");
        const auto& blocks = ckpt.params.layout.blocks();
        if (table.size() != blocks.size()) throw IntegrityError("checkpoint layout table disagrees with dims");
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            if (table[i].at("name") != blocks[i].name || table[i].at("offset") != blocks[i].offset ||
                table[i].at("shape").get<std::vector<std::size_t>>() != blocks[i].shape)
                throw IntegrityError("checkpoint layout entry '" + blocks[i].name + "' disagrees with dims");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad checkpoint header in " + path.string() + ": " + e.what());
    }
    const std::size_t total = ckpt.params.layout.total();
    const std::size_t payload = bytes.size() - 16 - len;
    if (payload != total * 4) throw IntegrityError("checkpoint payload size disagrees with layout: " + path.string());
    const auto values = detail::decode_f32le(std::span<const char>(bytes.data() + 16 + len, payload));
    ckpt.params.values = Eigen::Map<const Vector<float>>(values.data(), static_cast<Eigen::Index>(values.size()));
    return ckpt;
}

}  // namespace eegret
