#include "eegret/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "eegret/errors.hpp"
#include "eegret/rng.hpp"

namespace eegret {

namespace {

LatentTable draw_latents(const SyntheticSpec& spec) {
    LatentTable t;
    t.latent_dim = spec.latent_dim;
    const std::size_t ld = spec.latent_dim;
    CounterRng rng(derive_key(spec.seed, {hash_string("latents")}));
    std::vector<double> v(ld);
    for (int c = 0; c < spec.class_count; ++c) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 10000) throw ConfigError("cannot draw sufficiently distinct class latents");
            double norm = 0.0;
            for (double& x : v) {
                x = rng.normal();
                norm += x * x;
            }
            norm = std::sqrt(norm);
            // Stored values are rounded to f32 so a latent table written to
            // disk reproduces the same features bit-for-bit.
            for (double& x : v) x = static_cast<double>(static_cast<float>(x / norm));
            bool distinct = true;
            for (std::size_t prev = 0; prev < t.ids.size() && distinct; ++prev) {
                auto p = t.latent(prev);
                double dot = 0.0, np = 0.0, nv = 0.0;
                for (std::size_t k = 0; k < ld; ++k) {
                    dot += p[k] * v[k];
                    np += p[k] * p[k];
                    nv += v[k] * v[k];
                }
                distinct = dot / std::sqrt(np * nv) < spec.max_latent_cosine;
            }
            if (distinct) break;
        }
        t.ids.push_back(class_image_id(c));
        t.values.insert(t.values.end(), v.begin(), v.end());
    }
    return t;
}

EegDataset draw_eeg(const SyntheticSpec& spec, const LatentTable& latents, const std::vector<double>& mixing,
                    int per_class, SplitTag split, std::uint64_t noise_key) {
    EegDataset d;
    d.n_samples = static_cast<std::size_t>(spec.class_count * per_class);
    d.n_reps = spec.n_reps;
    d.n_channels = spec.n_channels;
    d.n_timepoints = spec.n_timepoints;
    d.class_count = spec.class_count;
    d.split = split;
    for (int c = 0; c < spec.class_count; ++c) d.class_names.push_back(class_image_id(c));

    const std::size_t seg = d.segment_size();
    const std::size_t ld = spec.latent_dim;
    std::vector<double> clean(seg);
    d.segments.reserve(d.n_samples * d.n_reps * seg);
    for (int c = 0; c < spec.class_count; ++c) {
        auto latent = latents.latent(static_cast<std::size_t>(c));
        for (std::size_t e = 0; e < seg; ++e) {
            double acc = 0.0;
            for (std::size_t k = 0; k < ld; ++k) acc += mixing[e * ld + k] * latent[k];
            clean[e] = acc;
        }
        for (int s = 0; s < per_class; ++s) {
            d.labels.push_back(c);
            for (std::size_t r = 0; r < d.n_reps; ++r) {
                CounterRng rng(derive_key(noise_key, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(s),
                                                      static_cast<std::uint64_t>(r)}));
                for (std::size_t e = 0; e < seg; ++e)
                    d.segments.push_back(static_cast<float>(clean[e] + spec.noise_sigma * rng.normal()));
            }
        }
    }
    return d;
}

}  // namespace

std::string class_image_id(int cls) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "class_%04d", cls);
    return buf;
}

ProviderSpec synthetic_provider_spec(const SyntheticSpec& spec) {
    ProviderSpec p;
    p.kind = ProviderKind::synthetic;
    p.seed = spec.seed;
    p.streams = spec.streams;
    p.feature_dim = spec.feature_dim;
    p.stream_perturbation = spec.stream_perturbation;
    p.image_jitter = spec.image_jitter;
    return p;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.class_count < 2) throw ConfigError("synthetic data needs at least two classes");
    if (spec.latent_dim < 2) throw ConfigError("synthetic latent_dim must be at least 2");
    if (spec.samples_per_class < 1 || spec.test_samples_per_class < 1 || spec.n_reps < 1)
        throw ConfigError("synthetic sample counts must be positive");
    if (spec.noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");

    SyntheticData out;
    out.latents = draw_latents(spec);

    const std::size_t seg = spec.n_channels * spec.n_timepoints;
    std::vector<double> mixing(seg * spec.latent_dim);
    CounterRng mix_rng(derive_key(spec.seed, {hash_string("eeg-mixing")}));
    for (double& m : mixing) m = mix_rng.normal();

    out.train = draw_eeg(spec, out.latents, mixing, spec.samples_per_class, SplitTag::train,
                         derive_key(spec.seed, {hash_string("eeg-noise/train")}));
    out.test = draw_eeg(spec, out.latents, mixing, spec.test_samples_per_class, SplitTag::test,
                        derive_key(spec.seed, {hash_string("eeg-noise/test")}));
    out.bank = provide_features(synthetic_provider_spec(spec), out.latents.ids, &out.latents);
    return out;
}

}  // namespace eegret
