#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "eegret/dataset.hpp"
#include "eegret/feature_provider.hpp"

namespace eegret {

// Desk-scale stand-in for the THINGS-EEG2 single-subject tensors.
struct SyntheticSpec {
    int class_count = 200;
    int samples_per_class = 10;
    std::size_t latent_dim = 64;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;

    int test_samples_per_class = 1;
    std::size_t n_reps = 1;
    std::size_t n_channels = kThingsChannels;
    std::size_t n_timepoints = kThingsTimepoints;
    std::size_t feature_dim = kDefaultFeatureDim;
    std::vector<std::string> streams = default_stream_names();
    double stream_perturbation = 0.3;
    double image_jitter = 0.01;
    // Latents are re-drawn until every pair has cosine below this bound.
    double max_latent_cosine = 0.9;
};

struct SyntheticData {
    EegDataset train;
    EegDataset test;
    FeatureBank bank;     // one image per class, row c is class c
    LatentTable latents;  // ground truth: class id -> unit-norm latent
};

std::string class_image_id(int cls);

// EEG(sample) = M * latent(class) + noise_sigma * N(0, I), with M a fixed
// seeded [channels*time x latent_dim] Gaussian map. Pure function of spec.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// The provider spec that reproduces SyntheticData::bank from its latents.
ProviderSpec synthetic_provider_spec(const SyntheticSpec& spec);

}  // namespace eegret
