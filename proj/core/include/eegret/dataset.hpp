#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace eegret {

enum class SplitTag { train, val, test };

std::string to_string(SplitTag tag);
SplitTag parse_split_tag(const std::string& s);

// Canonical recording geometry of the preprocessed THINGS-EEG2 tensors.
inline constexpr std::size_t kThingsChannels = 63;
inline constexpr std::size_t kThingsTimepoints = 250;

// EEG segments laid out row-major as [sample][repetition][channel][time].
struct EegDataset {
    std::size_t n_samples = 0;
    std::size_t n_reps = 1;
    std::size_t n_channels = 0;
    std::size_t n_timepoints = 0;
    std::vector<float> segments;
    std::vector<int> labels;
    int class_count = 0;
    std::vector<std::string> class_names;
    SplitTag split = SplitTag::train;

    std::size_t segment_size() const noexcept { return n_channels * n_timepoints; }
    std::span<const float> segment(std::size_t sample, std::size_t rep = 0) const;

    // Throws ShapeError / DataError when any invariant is broken.
    void validate() const;
};

// Per-image, per-stream feature vectors laid out as [image][stream][dim].
// Image i of the bank is the stimulus of every EEG sample with label i.
struct FeatureBank {
    std::size_t n_images = 0;
    std::size_t n_streams = 0;
    std::size_t feature_dim = 0;
    std::vector<float> features;
    std::vector<std::string> stream_names;
    std::vector<std::string> image_ids;
    std::string provider_tag;

    std::span<const float> row(std::size_t image, std::size_t stream) const;
    // ConfigError when the stream is absent.
    std::size_t stream_index(const std::string& name) const;
    bool has_stream(const std::string& name) const;

    // Unique stream names, finite values, no all-zero vector.
    void validate() const;
};

enum class SplitStrategy { by_sample, stratified };

struct SplitSpec {
    double train_fraction = 0.95;
    std::uint64_t seed = 0;
    SplitStrategy strategy = SplitStrategy::by_sample;
};

std::string to_string(SplitStrategy s);
SplitStrategy parse_split_strategy(const std::string& s);

// Container I/O (directory with meta.json + data.bin).
void write_dataset(const std::filesystem::path& dir, const EegDataset& d);
EegDataset load_dataset(const std::filesystem::path& dir);
void write_feature_bank(const std::filesystem::path& dir, const FeatureBank& bank);
FeatureBank load_feature_bank(const std::filesystem::path& dir);

// Mean over the repetition axis; the result has n_reps == 1.
EegDataset average_repetitions(const EegDataset& d);

// Samples at the given indices, in that order.
EegDataset subset(const EegDataset& d, std::span<const std::size_t> indices, SplitTag tag);

// Index partition used by split_train_val; both halves sorted ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const EegDataset& d,
                                                                            const SplitSpec& s);
std::pair<EegDataset, EegDataset> split_train_val(const EegDataset& d, const SplitSpec& s);

}  // namespace eegret
