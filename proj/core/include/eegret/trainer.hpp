#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eegret/checkpoint.hpp"
#include "eegret/dataset.hpp"
#include "eegret/encoder.hpp"
#include "eegret/retrieval.hpp"

namespace eegret {

enum class SelectionPolicy { final_epoch, val_selected, best_test_diagnostic };

std::string to_string(SelectionPolicy p);
SelectionPolicy parse_selection_policy(const std::string& s);

struct TrainConfig {
    int epochs = 200;
    int batch_size = 1024;
    double lr = 1e-3;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::vector<std::uint64_t> seeds{21, 22, 23, 24, 25, 26, 27, 28, 29, 30};
    double logit_scale = 1.0;
    bool normalize_embeddings = false;
    SelectionPolicy selection = SelectionPolicy::final_epoch;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double top1 = 0.0;  // standard 200-way test protocol
    double top5 = 0.0;
    std::optional<double> val_acc;
    double hungarian_top1 = 0.0;
    double hungarian_top5 = 0.0;
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::string config_hash;
    double wall_seconds = 0.0;  // informational; never written to deterministic outputs
    std::vector<EpochMetrics> epochs;
    int selected_checkpoint = -1;

    // "epoch,loss,top1,top5,val_acc,hungarian_top1,hungarian_top5"; val_acc
    // is empty when absent. Values use 17 significant digits.
    static std::string csv_header();
    static std::string csv_row(const EpochMetrics& m);
    std::string to_csv() const;
};

RunRecord read_run_record_csv(const std::filesystem::path& path, std::uint64_t seed = 0);

// final_epoch -> last; val_selected -> argmax val_acc; best_test_diagnostic
// -> argmax test Top-1. Earliest epoch wins ties. ConfigError when
// val_selected is requested without validation metrics.
int select_checkpoint(const RunRecord& record, SelectionPolicy policy);

struct TrainingInputs {
    const EegDataset* train = nullptr;
    const EegDataset* val = nullptr;  // optional
    const EegDataset* test = nullptr;
    const FeatureBank* bank = nullptr;
    StreamConfig streams;
};

struct TrainResult {
    RunRecord record;
    Checkpoint final_epoch;
    std::optional<Checkpoint> val_selected;
    Checkpoint best_test;  // diagnostic only

    const Checkpoint& checkpoint_for(SelectionPolicy policy) const;
};

// Stable fingerprint of everything that determines a run besides the seed.
std::string config_fingerprint(const TrainConfig& cfg, const EncoderDims& dims, const StreamConfig& streams);

// Derives the network geometry from the data and stream selection.
EncoderDims dims_for(const EegDataset& train, const FeatureBank& bank, const StreamConfig& streams,
                     EncoderDims base = {});

// Seeded end-to-end training: per epoch a seeded shuffle, mini-batches of
// both towers through symmetric InfoNCE, one AdamW step per batch, then
// evaluation on the test set (both protocols) and the optional val set.
// on_epoch is called after every epoch with the fresh metrics.
TrainResult train(const TrainingInputs& inputs, const TrainConfig& cfg, std::uint64_t seed, const EncoderDims& dims,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

// Eval-mode embeddings.
RowMatrix<float> embed_eeg(const EncoderParams<float>& params, const EegDataset& data);
RowMatrix<float> embed_images(const EncoderParams<float>& params, const FeatureBank& bank,
                              const std::vector<std::size_t>& images, const StreamConfig& streams);

// Query EEG vs the distinct images named by the queries' labels.
SimilarityMatrix retrieval_similarity(const EncoderParams<float>& params, const EegDataset& queries,
                                      const FeatureBank& bank, const StreamConfig& streams);

RetrievalMetrics evaluate_retrieval(const EncoderParams<float>& params, const EegDataset& test, const FeatureBank& bank,
                                    const StreamConfig& streams, Protocol protocol);

}  // namespace eegret
