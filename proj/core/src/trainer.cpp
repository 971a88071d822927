#include "eegret/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "eegret/adamw.hpp"
#include "eegret/errors.hpp"
#include "eegret/infonce.hpp"
#include "eegret/rng.hpp"

namespace eegret {

namespace {

constexpr Eigen::Index kEvalChunk = 256;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

RowMatrix<float> gather_eeg(const EegDataset& d, std::span<const std::size_t> idx) {
    const auto sz = static_cast<Eigen::Index>(d.segment_size());
    RowMatrix<float> out(static_cast<Eigen::Index>(idx.size()), sz);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        auto seg = d.segment(idx[r]);
        std::copy(seg.begin(), seg.end(), out.data() + static_cast<Eigen::Index>(r) * sz);
    }
    return out;
}

struct StreamColumns {
    std::vector<std::size_t> blur;
    std::optional<std::size_t> evnet;
};

StreamColumns resolve_streams(const FeatureBank& bank, const StreamConfig& streams) {
    if (streams.blur_streams.empty()) throw ConfigError("stream configuration needs at least one blur stream");
    StreamColumns c;
    for (const auto& s : streams.blur_streams) c.blur.push_back(bank.stream_index(s));
    if (streams.use_evnet) c.evnet = bank.stream_index(streams.evnet_stream);
    return c;
}

void gather_visual(const FeatureBank& bank, const StreamColumns& cols, std::span<const std::size_t> images,
                   RowMatrix<float>& blur, RowMatrix<float>& evnet) {
    const auto D = static_cast<Eigen::Index>(bank.feature_dim);
    const auto L = static_cast<Eigen::Index>(cols.blur.size());
    const auto B = static_cast<Eigen::Index>(images.size());
    blur.resize(B, L * D);
    for (Eigen::Index r = 0; r < B; ++r)
        for (Eigen::Index l = 0; l < L; ++l) {
            auto row = bank.row(images[static_cast<std::size_t>(r)], cols.blur[static_cast<std::size_t>(l)]);
            std::copy(row.begin(), row.end(), blur.data() + r * L * D + l * D);
        }
    if (cols.evnet) {
        evnet.resize(B, D);
        for (Eigen::Index r = 0; r < B; ++r) {
            auto row = bank.row(images[static_cast<std::size_t>(r)], *cols.evnet);
            std::copy(row.begin(), row.end(), evnet.data() + r * D);
        }
    }
}

std::vector<std::size_t> label_images(const EegDataset& d, std::span<const std::size_t> idx) {
    std::vector<std::size_t> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(static_cast<std::size_t>(d.labels[i]));
    return out;
}

// Batch boundaries over n samples; a trailing batch of one sample is folded
// into its predecessor.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch) out.emplace_back(start, std::min(n, start + batch));
    if (out.size() > 1 && out.back().second - out.back().first == 1) {
        out[out.size() - 2].second = out.back().second;
        out.pop_back();
    }
    return out;
}

void check_alignment(const EegDataset& d, const FeatureBank& bank, const char* what) {
    for (int l : d.labels)
        if (l < 0 || static_cast<std::size_t>(l) >= bank.n_images)
            throw ConfigError(std::string(what) + " label " + std::to_string(l) + " has no image in the feature bank");
}

}  // namespace

std::string to_string(SelectionPolicy p) {
    switch (p) {
        case SelectionPolicy::final_epoch: return "final_epoch";
        case SelectionPolicy::val_selected: return "val_selected";
        case SelectionPolicy::best_test_diagnostic: return "best_test_diagnostic";
    }
    return "final_epoch";
}

SelectionPolicy parse_selection_policy(const std::string& s) {
    if (s == "final_epoch") return SelectionPolicy::final_epoch;
    if (s == "val_selected") return SelectionPolicy::val_selected;
    if (s == "best_test_diagnostic") return SelectionPolicy::best_test_diagnostic;
    throw ConfigError("unknown selection policy '" + s + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
    if (!(logit_scale > 0.0)) throw ConfigError("logit_scale must be positive");
    if (lr < 0.0 || weight_decay < 0.0) throw ConfigError("lr and weight_decay must be non-negative");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
}

std::string RunRecord::csv_header() {
    return "epoch,loss,top1,top5,val_acc,hungarian_top1,hungarian_top5";
}

std::string RunRecord::csv_row(const EpochMetrics& m) {
    return std::to_string(m.epoch) + "," + num(m.train_loss) + "," + num(m.top1) + "," + num(m.top5) + "," +
           (m.val_acc ? num(*m.val_acc) : std::string{}) + "," + num(m.hungarian_top1) + "," + num(m.hungarian_top5);
}

std::string RunRecord::to_csv() const {
    std::string out = csv_header() + "\n";
    for (const auto& e : epochs) out += csv_row(e) + "\n";
    return out;
}

RunRecord read_run_record_csv(const std::filesystem::path& path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run record " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != RunRecord::csv_header())
        throw FormatError("unexpected run record header in " + path.string());
    RunRecord r;
    r.seed = seed;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 7) throw FormatError("malformed run record row in " + path.string());
        try {
            EpochMetrics m;
            m.epoch = std::stoi(f[0]);
            m.train_loss = std::stod(f[1]);
            m.top1 = std::stod(f[2]);
            m.top5 = std::stod(f[3]);
            if (!f[4].empty()) m.val_acc = std::stod(f[4]);
            m.hungarian_top1 = std::stod(f[5]);
            m.hungarian_top5 = std::stod(f[6]);
            r.epochs.push_back(m);
        } catch (const std::exception&) {
            throw FormatError("malformed number in run record " + path.string());
        }
    }
    return r;
}

int select_checkpoint(const RunRecord& record, SelectionPolicy policy) {
    if (record.epochs.empty()) throw ConfigError("cannot select a checkpoint from an empty record");
    const auto& e = record.epochs;
    switch (policy) {
        case SelectionPolicy::final_epoch: return static_cast<int>(e.size()) - 1;
        case SelectionPolicy::val_selected: {
            int best = -1;
            for (std::size_t i = 0; i < e.size(); ++i) {
                if (!e[i].val_acc) throw ConfigError("val_selected needs validation accuracy on every epoch");
                if (best < 0 || *e[i].val_acc > *e[static_cast<std::size_t>(best)].val_acc) best = static_cast<int>(i);
            }
            return best;
        }
        case SelectionPolicy::best_test_diagnostic: {
            int best = 0;
            for (std::size_t i = 1; i < e.size(); ++i)
                if (e[i].top1 > e[static_cast<std::size_t>(best)].top1) best = static_cast<int>(i);
            return best;
        }
    }
    return static_cast<int>(e.size()) - 1;
}

const Checkpoint& TrainResult::checkpoint_for(SelectionPolicy policy) const {
    switch (policy) {
        case SelectionPolicy::final_epoch: return final_epoch;
        case SelectionPolicy::val_selected:
            if (!val_selected) throw ConfigError("run has no validation-selected checkpoint");
            return *val_selected;
        case SelectionPolicy::best_test_diagnostic: return best_test;
    }
    return final_epoch;
}

std::string config_fingerprint(const TrainConfig& cfg, const EncoderDims& d, const StreamConfig& streams) {
    std::ostringstream os;
    os << "epochs=" << cfg.epochs << ";batch=" << cfg.batch_size << ";lr=" << num(cfg.lr)
       << ";wd=" << num(cfg.weight_decay) << ";b1=" << num(cfg.beta1) << ";b2=" << num(cfg.beta2)
       << ";eps=" << num(cfg.adam_eps) << ";scale=" << num(cfg.logit_scale) << ";norm=" << cfg.normalize_embeddings
       << ";dims=" << d.channels << "," << d.timepoints << "," << d.conv_maps << "," << d.hidden1 << "," << d.hidden2
       << "," << d.embed_dim << "," << d.feature_dim << "," << d.adapter_hidden << "," << d.n_blur << ","
       << num(d.dropout_mlp1) << "," << num(d.dropout_mlp2) << "," << num(d.dropout_adapter) << ","
       << num(d.bn_momentum) << "," << num(d.bn_eps) << ";streams=";
    for (const auto& s : streams.blur_streams) os << s << "|";
    os << (streams.use_evnet ? streams.evnet_stream : std::string("-"));
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_string(os.str())));
    return buf;
}

EncoderDims dims_for(const EegDataset& train, const FeatureBank& bank, const StreamConfig& streams, EncoderDims base) {
    base.channels = train.n_channels;
    base.timepoints = train.n_timepoints;
    base.feature_dim = bank.feature_dim;
    base.n_blur = streams.blur_streams.size();
    return base;
}

RowMatrix<float> embed_eeg(const EncoderParams<float>& params, const EegDataset& data) {
    const EegDataset averaged = data.n_reps > 1 ? average_repetitions(data) : EegDataset{};
    const EegDataset& d = data.n_reps > 1 ? averaged : data;
    RowMatrix<float> out(static_cast<Eigen::Index>(d.n_samples), static_cast<Eigen::Index>(params.dims.embed_dim));
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < d.n_samples; start += kEvalChunk) {
        idx.clear();
        for (std::size_t i = start; i < std::min(d.n_samples, start + kEvalChunk); ++i) idx.push_back(i);
        out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(idx.size())) =
            eeg_forward(params, gather_eeg(d, idx), ForwardMode{Mode::eval});
    }
    return out;
}

RowMatrix<float> embed_images(const EncoderParams<float>& params, const FeatureBank& bank,
                              const std::vector<std::size_t>& images, const StreamConfig& streams) {
    const StreamColumns cols = resolve_streams(bank, streams);
    RowMatrix<float> out(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(params.dims.embed_dim));
    RowMatrix<float> blur, evnet;
    for (std::size_t start = 0; start < images.size(); start += kEvalChunk) {
        const std::size_t end = std::min(images.size(), start + kEvalChunk);
        std::span<const std::size_t> chunk(images.data() + start, end - start);
        gather_visual(bank, cols, chunk, blur, evnet);
        out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(chunk.size())) =
            visual_forward(params, blur, cols.evnet ? &evnet : nullptr, ForwardMode{Mode::eval});
    }
    return out;
}

SimilarityMatrix retrieval_similarity(const EncoderParams<float>& params, const EegDataset& queries,
                                      const FeatureBank& bank, const StreamConfig& streams) {
    check_alignment(queries, bank, "query");
    std::set<int> distinct(queries.labels.begin(), queries.labels.end());
    std::vector<std::size_t> images(distinct.begin(), distinct.end());
    std::vector<int> candidate_labels(distinct.begin(), distinct.end());
    const RowMatrix<double> e = embed_eeg(params, queries).cast<double>();
    const RowMatrix<double> v = embed_images(params, bank, images, streams).cast<double>();
    return cosine_matrix(e, v, queries.labels, std::move(candidate_labels));
}

RetrievalMetrics evaluate_retrieval(const EncoderParams<float>& params, const EegDataset& test, const FeatureBank& bank,
                                    const StreamConfig& streams, Protocol protocol) {
    return score_similarity(retrieval_similarity(params, test, bank, streams), protocol);
}

TrainResult train(const TrainingInputs& in, const TrainConfig& cfg, std::uint64_t seed, const EncoderDims& dims,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
    cfg.validate();
    if (!in.train || !in.test || !in.bank) throw ConfigError("training needs train, test and feature bank inputs");
    const auto start_time = std::chrono::steady_clock::now();
    const FeatureBank& bank = *in.bank;
    const StreamColumns cols = resolve_streams(bank, in.streams);
    check_alignment(*in.train, bank, "train");
    check_alignment(*in.test, bank, "test");
    if (in.val) check_alignment(*in.val, bank, "val");
    if (dims.n_blur != cols.blur.size()) throw ConfigError("encoder n_blur does not match the blur stream count");
    if (dims.feature_dim != bank.feature_dim) throw ConfigError("encoder feature_dim does not match the bank");
    if (dims.channels != in.train->n_channels || dims.timepoints != in.train->n_timepoints)
        throw ConfigError("encoder input geometry does not match the dataset");

    const EegDataset train_set = in.train->n_reps > 1 ? average_repetitions(*in.train) : *in.train;
    const std::size_t n = train_set.n_samples;
    if (n < 2) throw ConfigError("training needs at least two samples");

    EncoderParams<float> params = init_params<float>(dims, derive_key(seed, {hash_string("init")}));
    AdamW<float> opt(AdamWConfig{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay},
                     trainable_mask<float>(params.layout));

    TrainResult result;
    result.record.seed = seed;
    result.record.config_hash = config_fingerprint(cfg, dims, in.streams);
    auto snapshot = [&](int epoch) { return Checkpoint{params, in.streams, epoch, seed}; };

    EegCache<float> eeg_cache;
    VisualCache<float> vis_cache;
    RowMatrix<float> blur, evnet;
    const auto ranges = batch_ranges(n, static_cast<std::size_t>(cfg.batch_size));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        CounterRng shuffle_rng(derive_key(seed, {hash_string("shuffle"), static_cast<std::uint64_t>(epoch)}));
        const auto order = random_permutation(n, shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t step = 0; step < ranges.size(); ++step) {
            std::span<const std::size_t> idx(order.data() + ranges[step].first, ranges[step].second - ranges[step].first);
            const std::uint64_t dropout_seed =
                derive_key(seed, {hash_string("dropout"), static_cast<std::uint64_t>(epoch), step});
            const ForwardMode mode{Mode::train, dropout_seed, true};

            const RowMatrix<float> z = eeg_forward(params, gather_eeg(train_set, idx), mode, &eeg_cache);
            const auto images = label_images(train_set, idx);
            gather_visual(bank, cols, images, blur, evnet);
            const RowMatrix<float> v = visual_forward(params, blur, cols.evnet ? &evnet : nullptr, mode, &vis_cache);

            const auto loss = infonce_loss<float>(z, v, cfg.logit_scale, cfg.normalize_embeddings);
            const Vector<float> grad = backward(params, eeg_cache, vis_cache, loss.grad_z, loss.grad_v);
            opt.step(params.values, grad);
            loss_sum += static_cast<double>(loss.loss) * static_cast<double>(idx.size());
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / static_cast<double>(n);
        const SimilarityMatrix test_sim = retrieval_similarity(params, *in.test, bank, in.streams);
        const auto standard = score_similarity(test_sim, Protocol::standard);
        const auto hungarian = score_similarity(test_sim, Protocol::hungarian);
        m.top1 = standard.top1;
        m.top5 = standard.top5;
        m.hungarian_top1 = hungarian.top1;
        m.hungarian_top5 = hungarian.top5;
        if (in.val) m.val_acc = top_k_accuracy(retrieval_similarity(params, *in.val, bank, in.streams), 1);

        const bool first = result.record.epochs.empty();
        if (in.val && (first || *m.val_acc > *result.record.epochs[static_cast<std::size_t>(
                                                  select_checkpoint(result.record, SelectionPolicy::val_selected))]
                                                  .val_acc))
            result.val_selected = snapshot(epoch);
        if (first || m.top1 > result.record.epochs[static_cast<std::size_t>(
                                  select_checkpoint(result.record, SelectionPolicy::best_test_diagnostic))]
                                  .top1)
            result.best_test = snapshot(epoch);

        result.record.epochs.push_back(m);
        if (on_epoch) on_epoch(m);
    }

    result.final_epoch = snapshot(cfg.epochs - 1);
    result.record.selected_checkpoint = select_checkpoint(result.record, cfg.selection);
    result.record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return result;
}

}  // namespace eegret
