#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eegret/aggregate.hpp"
#include "eegret/blur.hpp"
#include "eegret/checkpoint.hpp"
#include "eegret/dataset.hpp"
#include "eegret/feature_provider.hpp"
#include "eegret/rsvp.hpp"
#include "eegret/synthetic.hpp"
#include "eegret/trainer.hpp"

namespace eegret {

inline constexpr int kConfigSchemaVersion = 1;

// Visual-stream enable states of the ablation matrix.
enum class StreamSet { none, evnet_only, blur_only, both };

std::string to_string(StreamSet s);
StreamSet parse_stream_set(const std::string& s);
inline constexpr StreamSet kAllStreamSets[] = {StreamSet::none, StreamSet::evnet_only, StreamSet::blur_only,
                                               StreamSet::both};

enum class DataSource { synthetic, files };

struct DataConfig {
    DataSource source = DataSource::synthetic;
    SyntheticSpec synthetic;
    std::filesystem::path train;
    std::filesystem::path test;
    std::filesystem::path val;  // optional; empty means derive from split
};

struct FeatureConfig {
    ProviderKind provider = ProviderKind::synthetic;
    std::filesystem::path source;   // precomputed bank container
    std::filesystem::path latents;  // synthetic provider over file data
    std::uint64_t seed = 0;
    double stream_perturbation = 0.3;
    double image_jitter = 0.01;
};

struct RsvpToggle {
    bool enabled = false;
    RsvpSpec spec;
};

struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    std::string name = "experiment";
    DataConfig data;
    FeatureConfig features;
    StreamSet streams = StreamSet::both;
    BlurSpec blur;
    RsvpToggle rsvp;
    SplitSpec split{1.0, 0, SplitStrategy::by_sample};
    TrainConfig train;
    EncoderDims encoder;  // geometry fields are derived from the data
    std::vector<Protocol> protocols{Protocol::standard, Protocol::hungarian};
    // The only path to test-selected numbers; always reported as diagnostic.
    bool diagnostic_best_test = false;
    bool save_checkpoints = true;
    int workers = 1;
    std::filesystem::path output_dir = "runs/experiment";

    void validate() const;
    // ConfigError naming the first missing path.
    void check_paths() const;
};

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

// Blur stream names for the blur spec, "rsvp_"-prefixed when the RSVP
// compositor is on, followed by the EVNet stream.
std::vector<std::string> experiment_stream_names(const ExperimentConfig& cfg);
// none: sharpest blur level only; evnet_only: sharpest level fused with
// EVNet; blur_only: all levels; both: all levels fused with EVNet.
StreamConfig stream_config_for(const ExperimentConfig& cfg);

struct PreparedData {
    EegDataset train;
    std::optional<EegDataset> val;
    EegDataset test;
    FeatureBank bank;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

// Everything persisted for one seed.
struct SeedOutcome {
    std::uint64_t seed = 0;
    bool complete = false;
    std::string failure;  // stage and reason when incomplete
    RunRecord record;
};

struct ReportRow {
    std::string key;    // "<policy>/<protocol>/<metric>"
    std::string label;  // human-readable, with diagnostic markers
    std::vector<double> per_seed;  // aligned with AggregateReport::completed
    Aggregate value;
};

struct AggregateReport {
    std::string name;
    std::string config_hash;
    std::size_t n_candidates = 0;
    std::vector<std::uint64_t> seeds;      // requested, ascending
    std::vector<std::uint64_t> completed;  // ascending
    std::vector<std::pair<std::uint64_t, std::string>> incomplete;
    std::vector<ReportRow> rows;
    // Conventions behind the numbers (split, blur sigma rule, Hungarian
    // Top-k rule, ...), echoed into report.json.
    std::vector<std::pair<std::string, std::string>> metadata;

    bool all_complete() const noexcept { return incomplete.empty(); }
    const ReportRow* find(const std::string& key) const;

    std::string to_json() const;
    std::string to_text() const;
    std::string per_seed_csv() const;
};

// Pure fold over per-seed outcomes; the input order does not matter.
AggregateReport aggregate_outcomes(const ExperimentConfig& cfg, std::vector<SeedOutcome> outcomes,
                                   std::size_t n_candidates);

using ProgressFn = std::function<void(std::uint64_t seed, const EpochMetrics&)>;

// Trains every seed on a bounded worker pool, persisting under
// cfg.output_dir: seed_<n>/{record.csv, metrics.json, *.ckpt}, report.json,
// report.txt, seeds.csv, curves.svg and config.json. A failing seed is
// recorded as incomplete; the others still run.
AggregateReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

struct AblationReport {
    std::vector<std::pair<StreamSet, AggregateReport>> variants;

    std::string to_text() const;
    std::string to_json() const;
    bool all_complete() const;
};

// One experiment per stream set under output_dir/<set>, then
// ablation.txt/ablation.json with the comparison table.
AblationReport run_ablation(const ExperimentConfig& cfg, std::span<const StreamSet> sets,
                            const ProgressFn& progress = {});

}  // namespace eegret
