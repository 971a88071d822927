#include "eegret/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "container.hpp"
#include "eegret/errors.hpp"
#include "eegret/rng.hpp"

namespace fs = std::filesystem;

namespace eegret {

std::string to_string(SplitTag tag) {
    switch (tag) {
        case SplitTag::train: return "train";
        case SplitTag::val: return "val";
        case SplitTag::test: return "test";
    }
    return "train";
}

SplitTag parse_split_tag(const std::string& s) {
    if (s == "train") return SplitTag::train;
    if (s == "val") return SplitTag::val;
    if (s == "test") return SplitTag::test;
    throw FormatError("unknown split tag '" + s + "'");
}

std::string to_string(SplitStrategy s) {
    return s == SplitStrategy::by_sample ? "by-sample" : "stratified";
}

SplitStrategy parse_split_strategy(const std::string& s) {
    if (s == "by-sample") return SplitStrategy::by_sample;
    if (s == "stratified") return SplitStrategy::stratified;
    throw ConfigError("unknown split strategy '" + s + "'");
}

std::span<const float> EegDataset::segment(std::size_t sample, std::size_t rep) const {
    const std::size_t sz = segment_size();
    return std::span<const float>(segments).subspan((sample * n_reps + rep) * sz, sz);
}

void EegDataset::validate() const {
    if (n_reps < 1) throw ShapeError("dataset needs at least one repetition");
    if (n_channels < 1 || n_timepoints < 1) throw ShapeError("dataset segment shape is empty");
    if (segments.size() != n_samples * n_reps * n_channels * n_timepoints)
        throw ShapeError("dataset payload does not match its shape");
    if (labels.size() != n_samples) throw ShapeError("dataset has one label per sample");
    if (class_count < 1) throw DataError("class_count must be positive");
    for (int l : labels)
        if (l < 0 || l >= class_count) throw DataError("label " + std::to_string(l) + " outside [0, class_count)");
    if (!class_names.empty() && class_names.size() != static_cast<std::size_t>(class_count))
        throw ShapeError("class_names must list every class");
    for (float v : segments)
        if (!std::isfinite(v)) throw DataError("dataset contains non-finite values");
}

std::span<const float> FeatureBank::row(std::size_t image, std::size_t stream) const {
    return std::span<const float>(features).subspan((image * n_streams + stream) * feature_dim, feature_dim);
}

std::size_t FeatureBank::stream_index(const std::string& name) const {
    auto it = std::find(stream_names.begin(), stream_names.end(), name);
    if (it == stream_names.end()) throw ConfigError("feature bank has no stream '" + name + "'");
    return static_cast<std::size_t>(it - stream_names.begin());
}

bool FeatureBank::has_stream(const std::string& name) const {
    return std::find(stream_names.begin(), stream_names.end(), name) != stream_names.end();
}

void FeatureBank::validate() const {
    if (n_streams == 0 || stream_names.size() != n_streams)
        throw ConfigError("feature bank needs a non-empty stream list matching its shape");
    if (feature_dim == 0) throw ShapeError("feature_dim must be positive");
    if (image_ids.size() != n_images) throw ShapeError("feature bank needs one id per image");
    if (features.size() != n_images * n_streams * feature_dim)
        throw ShapeError("feature bank payload does not match its shape");
    if (std::set<std::string>(stream_names.begin(), stream_names.end()).size() != stream_names.size())
        throw ConfigError("stream names must be unique");
    for (std::size_t i = 0; i < n_images; ++i) {
        for (std::size_t s = 0; s < n_streams; ++s) {
            bool nonzero = false;
            for (float v : row(i, s)) {
                if (!std::isfinite(v)) throw DataError("feature bank contains non-finite values");
                nonzero = nonzero || v != 0.0f;
            }
            if (!nonzero)
                throw DataError("all-zero feature vector for image '" + image_ids[i] + "' stream '" +
                                stream_names[s] + "'");
        }
    }
}

void write_dataset(const fs::path& dir, const EegDataset& d) {
    d.validate();
    nlohmann::json meta;
    meta["kind"] = "eeg-dataset";
    meta["labels"] = d.labels;
    meta["class_count"] = d.class_count;
    meta["classes"] = d.class_names;
    meta["split"] = to_string(d.split);
    detail::write_container(dir, meta, {d.n_samples, d.n_reps, d.n_channels, d.n_timepoints}, d.segments);
}

EegDataset load_dataset(const fs::path& dir) {
    auto raw = detail::read_container(dir);
    EegDataset d;
    if (raw.shape.size() == 4) {
        d.n_samples = raw.shape[0];
        d.n_reps = raw.shape[1];
        d.n_channels = raw.shape[2];
        d.n_timepoints = raw.shape[3];
    } else if (raw.shape.size() == 3) {
        d.n_samples = raw.shape[0];
        d.n_channels = raw.shape[1];
        d.n_timepoints = raw.shape[2];
    } else {
        throw FormatError("dataset shape must be [n, reps, channels, time] in " + dir.string());
    }
    try {
        d.labels = raw.meta.at("labels").get<std::vector<int>>();
        d.class_names = raw.meta.value("classes", std::vector<std::string>{});
        int max_label = -1;
        for (int l : d.labels) max_label = std::max(max_label, l);
        d.class_count = raw.meta.value("class_count",
                                       d.class_names.empty() ? max_label + 1 : static_cast<int>(d.class_names.size()));
        d.split = parse_split_tag(raw.meta.value("split", std::string{"train"}));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad dataset header in " + dir.string() + ": " + e.what());
    }
    d.segments = std::move(raw.values);
    d.validate();
    return d;
}

void write_feature_bank(const fs::path& dir, const FeatureBank& bank) {
    bank.validate();
    nlohmann::json meta;
    meta["kind"] = "feature-bank";
    meta["streams"] = bank.stream_names;
    meta["image_ids"] = bank.image_ids;
    meta["provider"] = bank.provider_tag;
    detail::write_container(dir, meta, {bank.n_images, bank.n_streams, bank.feature_dim}, bank.features);
}

FeatureBank load_feature_bank(const fs::path& dir) {
    auto raw = detail::read_container(dir);
    if (raw.shape.size() != 3) throw FormatError("feature bank shape must be [images, streams, dim] in " + dir.string());
    FeatureBank b;
    b.n_images = raw.shape[0];
    b.n_streams = raw.shape[1];
    b.feature_dim = raw.shape[2];
    try {
        b.stream_names = raw.meta.at("streams").get<std::vector<std::string>>();
        b.image_ids = raw.meta.at("image_ids").get<std::vector<std::string>>();
        b.provider_tag = raw.meta.value("provider", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad feature bank header in " + dir.string() + ": " + e.what());
    }
    b.features = std::move(raw.values);
    b.validate();
    return b;
}

EegDataset average_repetitions(const EegDataset& d) {
    EegDataset out = d;
    out.n_reps = 1;
    const std::size_t sz = d.segment_size();
    out.segments.assign(d.n_samples * sz, 0.0f);
    std::vector<double> acc(sz);
    for (std::size_t i = 0; i < d.n_samples; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t r = 0; r < d.n_reps; ++r) {
            auto seg = d.segment(i, r);
            for (std::size_t k = 0; k < sz; ++k) acc[k] += seg[k];
        }
        for (std::size_t k = 0; k < sz; ++k)
            out.segments[i * sz + k] = static_cast<float>(acc[k] / static_cast<double>(d.n_reps));
    }
    return out;
}

EegDataset subset(const EegDataset& d, std::span<const std::size_t> indices, SplitTag tag) {
    EegDataset out;
    out.n_samples = indices.size();
    out.n_reps = d.n_reps;
    out.n_channels = d.n_channels;
    out.n_timepoints = d.n_timepoints;
    out.class_count = d.class_count;
    out.class_names = d.class_names;
    out.split = tag;
    const std::size_t block = d.n_reps * d.segment_size();
    out.segments.reserve(indices.size() * block);
    out.labels.reserve(indices.size());
    for (std::size_t idx : indices) {
        if (idx >= d.n_samples) throw ParameterError("subset index out of range");
        auto first = d.segments.begin() + static_cast<std::ptrdiff_t>(idx * block);
        out.segments.insert(out.segments.end(), first, first + static_cast<std::ptrdiff_t>(block));
        out.labels.push_back(d.labels[idx]);
    }
    return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const EegDataset& d,
                                                                            const SplitSpec& s) {
    if (!(s.train_fraction > 0.0 && s.train_fraction <= 1.0))
        throw ConfigError("train_fraction must lie in (0, 1]");
    const std::size_t n = d.n_samples;
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * s.train_fraction));
    if (n_train >= n) throw ConfigError("split leaves the validation set empty");
    if (n_train == 0) throw ConfigError("split leaves the training set empty");
    const std::size_t n_val = n - n_train;

    CounterRng rng(derive_key(s.seed, {hash_string("split"), static_cast<std::uint64_t>(s.strategy)}));
    std::vector<std::size_t> order;
    if (s.strategy == SplitStrategy::by_sample) {
        order = random_permutation(n, rng);
    } else {
        // Shuffle inside each class, then interleave classes by relative rank
        // so every prefix is close to class-proportional.
        std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(d.class_count));
        for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(d.labels[i])].push_back(i);
        struct Keyed {
            double key;
            int cls;
            std::size_t idx;
        };
        std::vector<Keyed> keyed;
        keyed.reserve(n);
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            auto& members = by_class[c];
            auto perm = random_permutation(members.size(), rng);
            for (std::size_t r = 0; r < members.size(); ++r)
                keyed.push_back({(static_cast<double>(r) + 0.5) / static_cast<double>(members.size()),
                                 static_cast<int>(c), members[perm[r]]});
        }
        std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
            return a.key != b.key ? a.key < b.key : a.cls < b.cls;
        });
        for (const auto& k : keyed) order.push_back(k.idx);
    }

    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    return {std::move(train), std::move(val)};
}

std::pair<EegDataset, EegDataset> split_train_val(const EegDataset& d, const SplitSpec& s) {
    if (d.split != SplitTag::train) throw ConfigError("only a training dataset can be split");
    auto [train_idx, val_idx] = split_indices(d, s);
    return {subset(d, train_idx, SplitTag::train), subset(d, val_idx, SplitTag::val)};
}

}  // namespace eegret
