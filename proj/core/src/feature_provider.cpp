#include "eegret/feature_provider.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "container.hpp"
#include "eegret/errors.hpp"
#include "eegret/rng.hpp"

namespace fs = std::filesystem;

namespace eegret {

std::string blur_stream_name(int kernel_size) {
    return "blur_k" + std::to_string(kernel_size);
}

std::vector<std::string> default_stream_names(std::span<const int> kernel_sizes) {
    std::vector<std::string> names;
    for (int k : kernel_sizes) names.push_back(blur_stream_name(k));
    names.emplace_back(kEvnetStream);
    return names;
}

std::vector<std::string> default_stream_names() {
    static constexpr int kSizes[] = {1, 3, 15, 21, 33, 45, 57, 63};
    return default_stream_names(kSizes);
}

std::size_t LatentTable::index_of(const std::string& id) const {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw LookupError("unknown image id '" + id + "'");
    return static_cast<std::size_t>(it - ids.begin());
}

std::string to_string(ProviderKind k) {
    return k == ProviderKind::precomputed ? "precomputed" : "synthetic";
}

ProviderKind parse_provider_kind(const std::string& s) {
    if (s == "precomputed") return ProviderKind::precomputed;
    if (s == "synthetic") return ProviderKind::synthetic;
    throw ConfigError("unknown provider kind '" + s + "'");
}

PrecomputedProvider::PrecomputedProvider(const ProviderSpec& spec)
    : bank_(load_feature_bank(spec.source)), streams_(spec.streams) {
    if (streams_.empty()) throw ConfigError("provider needs at least one stream");
    for (const auto& s : streams_) stream_cols_.push_back(bank_.stream_index(s));
    if (bank_.feature_dim != spec.feature_dim)
        throw ConfigError("bank at " + spec.source.string() + " has feature_dim " +
                          std::to_string(bank_.feature_dim) + ", expected " + std::to_string(spec.feature_dim));
}

FeatureBank PrecomputedProvider::provide(std::span<const std::string> image_ids) const {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < bank_.n_images; ++i) index.emplace(bank_.image_ids[i], i);

    FeatureBank out;
    out.n_images = image_ids.size();
    out.n_streams = streams_.size();
    out.feature_dim = bank_.feature_dim;
    out.stream_names = streams_;
    out.image_ids.assign(image_ids.begin(), image_ids.end());
    out.provider_tag = bank_.provider_tag;
    out.features.reserve(out.n_images * out.n_streams * out.feature_dim);
    for (const auto& id : image_ids) {
        auto it = index.find(id);
        if (it == index.end()) throw LookupError("image id '" + id + "' not in precomputed bank");
        for (std::size_t col : stream_cols_) {
            auto r = bank_.row(it->second, col);
            out.features.insert(out.features.end(), r.begin(), r.end());
        }
    }
    return out;
}

SyntheticProvider::SyntheticProvider(const ProviderSpec& spec, LatentTable latents)
    : spec_(spec), latents_(std::move(latents)) {
    if (spec_.streams.empty()) throw ConfigError("provider needs at least one stream");
    if (latents_.latent_dim == 0) throw ConfigError("synthetic provider needs latents");
    const std::size_t dim = spec_.feature_dim;
    const std::size_t ld = latents_.latent_dim;

    std::vector<double> shared(dim * ld);
    CounterRng shared_rng(derive_key(spec_.seed, {hash_string("feature-projection/shared")}));
    for (double& v : shared) v = shared_rng.normal();

    for (const auto& stream : spec_.streams) {
        std::vector<double> p = shared;
        CounterRng rng(derive_key(spec_.seed, {hash_string("feature-projection"), hash_string(stream)}));
        for (double& v : p) v += spec_.stream_perturbation * rng.normal();
        for (std::size_t c = 0; c < ld; ++c) {
            double norm = 0.0;
            for (std::size_t r = 0; r < dim; ++r) norm += p[r * ld + c] * p[r * ld + c];
            norm = std::sqrt(norm);
            for (std::size_t r = 0; r < dim; ++r) p[r * ld + c] /= norm;
        }
        projections_.push_back(std::move(p));
    }
}

FeatureBank SyntheticProvider::provide(std::span<const std::string> image_ids) const {
    const std::size_t dim = spec_.feature_dim;
    const std::size_t ld = latents_.latent_dim;
    const double jitter_scale = spec_.image_jitter / std::sqrt(static_cast<double>(dim));

    FeatureBank out;
    out.n_images = image_ids.size();
    out.n_streams = spec_.streams.size();
    out.feature_dim = dim;
    out.stream_names = spec_.streams;
    out.image_ids.assign(image_ids.begin(), image_ids.end());
    out.provider_tag = "synthetic:seed=" + std::to_string(spec_.seed);
    out.features.reserve(out.n_images * out.n_streams * dim);
    for (const auto& id : image_ids) {
        auto latent = latents_.latent(latents_.index_of(id));
        for (std::size_t s = 0; s < spec_.streams.size(); ++s) {
            const auto& p = projections_[s];
            CounterRng rng(derive_key(spec_.seed, {hash_string("feature-jitter"), hash_string(id),
                                                   hash_string(spec_.streams[s])}));
            for (std::size_t r = 0; r < dim; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < ld; ++c) acc += p[r * ld + c] * latent[c];
                out.features.push_back(static_cast<float>(acc + jitter_scale * rng.normal()));
            }
        }
    }
    return out;
}

std::unique_ptr<FeatureProvider> make_provider(const ProviderSpec& spec, const LatentTable* latents) {
    if (spec.streams.empty()) throw ConfigError("provider needs at least one stream");
    if (spec.kind == ProviderKind::precomputed) return std::make_unique<PrecomputedProvider>(spec);
    if (latents == nullptr) throw ConfigError("synthetic provider needs a latent table");
    return std::make_unique<SyntheticProvider>(spec, *latents);
}

FeatureBank provide_features(const ProviderSpec& spec, std::span<const std::string> image_ids,
                             const LatentTable* latents) {
    return make_provider(spec, latents)->provide(image_ids);
}

void cache_features(const FeatureBank& bank, const fs::path& path) {
    if (bank.stream_names.empty()) throw ConfigError("cannot cache a bank with no streams");
    write_feature_bank(path, bank);
}

FeatureBank select_streams(const FeatureBank& bank, std::span<const std::string> streams) {
    if (streams.empty()) throw ConfigError("stream selection is empty");
    std::vector<std::size_t> cols;
    for (const auto& s : streams) cols.push_back(bank.stream_index(s));
    FeatureBank out;
    out.n_images = bank.n_images;
    out.n_streams = cols.size();
    out.feature_dim = bank.feature_dim;
    out.stream_names.assign(streams.begin(), streams.end());
    out.image_ids = bank.image_ids;
    out.provider_tag = bank.provider_tag;
    out.features.reserve(out.n_images * out.n_streams * out.feature_dim);
    for (std::size_t i = 0; i < bank.n_images; ++i)
        for (std::size_t c : cols) {
            auto r = bank.row(i, c);
            out.features.insert(out.features.end(), r.begin(), r.end());
        }
    return out;
}

void write_latents(const fs::path& dir, const LatentTable& latents) {
    nlohmann::json meta;
    meta["kind"] = "latents";
    meta["image_ids"] = latents.ids;
    std::vector<float> v(latents.values.begin(), latents.values.end());
    detail::write_container(dir, meta, {latents.ids.size(), latents.latent_dim}, v);
}

LatentTable load_latents(const fs::path& dir) {
    auto raw = detail::read_container(dir);
    if (raw.shape.size() != 2) throw FormatError("latent table must be 2-D in " + dir.string());
    LatentTable t;
    try {
        t.ids = raw.meta.at("image_ids").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad latent header in " + dir.string() + ": " + e.what());
    }
    if (t.ids.size() != raw.shape[0]) throw IntegrityError("latent ids disagree with shape in " + dir.string());
    t.latent_dim = raw.shape[1];
    t.values.assign(raw.values.begin(), raw.values.end());
    return t;
}

}  // namespace eegret
