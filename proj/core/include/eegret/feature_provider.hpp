#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "eegret/dataset.hpp"

namespace eegret {

inline constexpr std::size_t kDefaultFeatureDim = 1024;
inline constexpr const char* kEvnetStream = "evnet";

// "blur_k<k>", the stream that holds features of the image blurred with an
// odd kernel of size k.
std::string blur_stream_name(int kernel_size);
// Blur streams for the given kernel sizes followed by the EVNet stream.
std::vector<std::string> default_stream_names(std::span<const int> kernel_sizes);
std::vector<std::string> default_stream_names();

// Ground-truth latent vector per image id (the synthetic world's "content").
struct LatentTable {
    std::vector<std::string> ids;
    std::size_t latent_dim = 0;
    std::vector<double> values;  // [ids.size() x latent_dim]

    std::span<const double> latent(std::size_t i) const {
        return std::span<const double>(values).subspan(i * latent_dim, latent_dim);
    }
    // LookupError when absent.
    std::size_t index_of(const std::string& id) const;
};

enum class ProviderKind { precomputed, synthetic };

struct ProviderSpec {
    ProviderKind kind = ProviderKind::synthetic;
    std::filesystem::path source;  // precomputed: bank container directory
    std::uint64_t seed = 0;        // synthetic
    std::vector<std::string> streams;
    std::size_t feature_dim = kDefaultFeatureDim;
    // Synthetic knobs: how far each stream's projection departs from the
    // shared one, and the per-image jitter relative to the unit-norm signal.
    double stream_perturbation = 0.3;
    double image_jitter = 0.01;
};

std::string to_string(ProviderKind k);
ProviderKind parse_provider_kind(const std::string& s);

// Frozen visual backbone stand-in: maps image ids to per-stream features.
// Rows of the returned bank follow the query order exactly.
class FeatureProvider {
public:
    virtual ~FeatureProvider() = default;
    virtual FeatureBank provide(std::span<const std::string> image_ids) const = 0;
};

// Serves rows of a bank previously written with cache_features.
class PrecomputedProvider final : public FeatureProvider {
public:
    explicit PrecomputedProvider(const ProviderSpec& spec);
    FeatureBank provide(std::span<const std::string> image_ids) const override;

private:
    FeatureBank bank_;
    std::vector<std::size_t> stream_cols_;
    std::vector<std::string> streams_;
};

// Deterministic features: for stream s, feature = P_s * latent(id) + jitter,
// where P_s has unit-norm columns drawn from (seed, s) and jitter is drawn
// from (seed, id, s).
class SyntheticProvider final : public FeatureProvider {
public:
    SyntheticProvider(const ProviderSpec& spec, LatentTable latents);
    FeatureBank provide(std::span<const std::string> image_ids) const override;

private:
    ProviderSpec spec_;
    LatentTable latents_;
    std::vector<std::vector<double>> projections_;  // per stream, [dim x latent_dim]
};

std::unique_ptr<FeatureProvider> make_provider(const ProviderSpec& spec, const LatentTable* latents);

// Convenience wrapper around make_provider(...)->provide(ids).
FeatureBank provide_features(const ProviderSpec& spec, std::span<const std::string> image_ids,
                             const LatentTable* latents = nullptr);

// Persists the bank (atomic replace of any existing cache at path).
void cache_features(const FeatureBank& bank, const std::filesystem::path& path);

// Returns a bank restricted to the named streams, in the given order.
FeatureBank select_streams(const FeatureBank& bank, std::span<const std::string> streams);

void write_latents(const std::filesystem::path& dir, const LatentTable& latents);
LatentTable load_latents(const std::filesystem::path& dir);

}  // namespace eegret
