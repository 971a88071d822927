#include "eegret/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "eegret/curves.hpp"
#include "eegret/errors.hpp"
#include "container.hpp"

namespace eegret {

using nlohmann::json;

std::string to_string(StreamSet s) {
    switch (s) {
        case StreamSet::none: return "none";
        case StreamSet::evnet_only: return "evnet_only";
        case StreamSet::blur_only: return "blur_only";
        case StreamSet::both: return "both";
    }
    return "both";
}

StreamSet parse_stream_set(const std::string& s) {
    for (StreamSet v : kAllStreamSets)
        if (to_string(v) == s) return v;
    throw ConfigError("unknown stream set '" + s + "' (expected none, evnet_only, blur_only or both)");
}

namespace {

std::string to_string(DataSource s) { return s == DataSource::synthetic ? "synthetic" : "files"; }

DataSource parse_data_source(const std::string& s) {
    if (s == "synthetic") return DataSource::synthetic;
    if (s == "files") return DataSource::files;
    throw ConfigError("unknown data source '" + s + "'");
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_path(const json& j, const char* key, std::filesystem::path& out) {
    if (j.contains(key)) out = j.at(key).get<std::string>();
}

json synthetic_to_json(const SyntheticSpec& s) {
    return {{"class_count", s.class_count},
            {"samples_per_class", s.samples_per_class},
            {"latent_dim", s.latent_dim},
            {"noise_sigma", s.noise_sigma},
            {"seed", s.seed},
            {"test_samples_per_class", s.test_samples_per_class},
            {"n_reps", s.n_reps},
            {"n_channels", s.n_channels},
            {"n_timepoints", s.n_timepoints},
            {"feature_dim", s.feature_dim},
            {"max_latent_cosine", s.max_latent_cosine}};
}

SyntheticSpec synthetic_from_json(const json& j) {
    SyntheticSpec s;
    read_opt(j, "class_count", s.class_count);
    read_opt(j, "samples_per_class", s.samples_per_class);
    read_opt(j, "latent_dim", s.latent_dim);
    read_opt(j, "noise_sigma", s.noise_sigma);
    read_opt(j, "seed", s.seed);
    read_opt(j, "test_samples_per_class", s.test_samples_per_class);
    read_opt(j, "n_reps", s.n_reps);
    read_opt(j, "n_channels", s.n_channels);
    read_opt(j, "n_timepoints", s.n_timepoints);
    read_opt(j, "feature_dim", s.feature_dim);
    read_opt(j, "max_latent_cosine", s.max_latent_cosine);
    return s;
}

json train_to_json(const TrainConfig& t) {
    return {{"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"lr", t.lr},
            {"weight_decay", t.weight_decay},
            {"beta1", t.beta1},
            {"beta2", t.beta2},
            {"adam_eps", t.adam_eps},
            {"seeds", t.seeds},
            {"logit_scale", t.logit_scale},
            {"normalize_embeddings", t.normalize_embeddings},
            {"selection", to_string(t.selection)}};
}

TrainConfig train_from_json(const json& j) {
    TrainConfig t;
    read_opt(j, "epochs", t.epochs);
    read_opt(j, "batch_size", t.batch_size);
    read_opt(j, "lr", t.lr);
    read_opt(j, "weight_decay", t.weight_decay);
    read_opt(j, "beta1", t.beta1);
    read_opt(j, "beta2", t.beta2);
    read_opt(j, "adam_eps", t.adam_eps);
    read_opt(j, "seeds", t.seeds);
    read_opt(j, "logit_scale", t.logit_scale);
    read_opt(j, "normalize_embeddings", t.normalize_embeddings);
    if (j.contains("selection")) t.selection = parse_selection_policy(j.at("selection").get<std::string>());
    return t;
}

json encoder_to_json(const EncoderDims& d) {
    return {{"conv_maps", d.conv_maps},
            {"hidden1", d.hidden1},
            {"hidden2", d.hidden2},
            {"embed_dim", d.embed_dim},
            {"adapter_hidden", d.adapter_hidden},
            {"dropout_mlp1", d.dropout_mlp1},
            {"dropout_mlp2", d.dropout_mlp2},
            {"dropout_adapter", d.dropout_adapter},
            {"bn_momentum", d.bn_momentum},
            {"bn_eps", d.bn_eps}};
}

EncoderDims encoder_from_json(const json& j) {
    EncoderDims d;
    read_opt(j, "conv_maps", d.conv_maps);
    read_opt(j, "hidden1", d.hidden1);
    read_opt(j, "hidden2", d.hidden2);
    read_opt(j, "embed_dim", d.embed_dim);
    read_opt(j, "adapter_hidden", d.adapter_hidden);
    read_opt(j, "dropout_mlp1", d.dropout_mlp1);
    read_opt(j, "dropout_mlp2", d.dropout_mlp2);
    read_opt(j, "dropout_adapter", d.dropout_adapter);
    read_opt(j, "bn_momentum", d.bn_momentum);
    read_opt(j, "bn_eps", d.bn_eps);
    return d;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (schema_version != kConfigSchemaVersion)
        throw ConfigError("unsupported config schema_version " + std::to_string(schema_version));
    if (name.empty()) throw ConfigError("experiment name must not be empty");
    train.validate();
    blur.validate();
    if (blur.kernel_sizes.empty()) throw ConfigError("blur spec needs at least one kernel size");
    if (protocols.empty()) throw ConfigError("at least one retrieval protocol is required");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (!(split.train_fraction > 0.0 && split.train_fraction <= 1.0))
        throw ConfigError("split.train_fraction must lie in (0, 1]");
    if (train.selection == SelectionPolicy::best_test_diagnostic && !diagnostic_best_test)
        throw ConfigError("best_test_diagnostic selection requires diagnostic_best_test");
    std::set<std::uint64_t> unique(train.seeds.begin(), train.seeds.end());
    if (unique.size() != train.seeds.size()) throw ConfigError("seeds must be distinct");
    if (data.source == DataSource::files) {
        if (data.train.empty() || data.test.empty()) throw ConfigError("file data needs train and test paths");
        if (features.provider == ProviderKind::precomputed && features.source.empty())
            throw ConfigError("precomputed features need a source path");
        if (features.provider == ProviderKind::synthetic && features.latents.empty())
            throw ConfigError("synthetic features over file data need a latents path");
    }
}

void ExperimentConfig::check_paths() const {
    auto need = [](const std::filesystem::path& p, const char* what) {
        if (!p.empty() && !std::filesystem::exists(p))
            throw ConfigError(std::string(what) + " path does not exist: " + p.string());
    };
    if (data.source == DataSource::files) {
        need(data.train, "train data");
        need(data.test, "test data");
        need(data.val, "val data");
        if (features.provider == ProviderKind::precomputed) need(features.source, "feature bank");
        else need(features.latents, "latents");
    }
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json data = {{"source", to_string(cfg.data.source)}};
    if (cfg.data.source == DataSource::synthetic) {
        data["synthetic"] = synthetic_to_json(cfg.data.synthetic);
    } else {
        data["train"] = cfg.data.train.string();
        data["test"] = cfg.data.test.string();
        data["val"] = cfg.data.val.string();
    }
    std::vector<std::string> protocols;
    for (Protocol p : cfg.protocols) protocols.push_back(to_string(p));
    const auto& r = cfg.rsvp.spec;
    json j = {
        {"schema_version", cfg.schema_version},
        {"name", cfg.name},
        {"data", data},
        {"features",
         {{"provider", to_string(cfg.features.provider)},
          {"source", cfg.features.source.string()},
          {"latents", cfg.features.latents.string()},
          {"seed", cfg.features.seed},
          {"stream_perturbation", cfg.features.stream_perturbation},
          {"image_jitter", cfg.features.image_jitter}}},
        {"streams", to_string(cfg.streams)},
        {"blur", {{"kernel_sizes", cfg.blur.kernel_sizes}}},
        {"rsvp",
         {{"enabled", cfg.rsvp.enabled},
          {"canvas_size", r.canvas_size},
          {"background_gray", r.background_gray},
          {"dot_radius", r.dot_radius},
          {"dot_color", r.dot_color},
          {"image_area_fraction", r.image_area_fraction}}},
        {"split",
         {{"train_fraction", cfg.split.train_fraction},
          {"seed", cfg.split.seed},
          {"strategy", to_string(cfg.split.strategy)}}},
        {"train", train_to_json(cfg.train)},
        {"encoder", encoder_to_json(cfg.encoder)},
        {"protocols", protocols},
        {"diagnostic_best_test", cfg.diagnostic_best_test},
        {"save_checkpoints", cfg.save_checkpoints},
        {"workers", cfg.workers},
        {"output_dir", cfg.output_dir.string()},
    };
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("schema_version")) throw ConfigError("config lacks schema_version");
    ExperimentConfig cfg;
    try {
        cfg.schema_version = j.at("schema_version").get<int>();
        if (cfg.schema_version != kConfigSchemaVersion)
            throw ConfigError("unsupported config schema_version " + std::to_string(cfg.schema_version));
        read_opt(j, "name", cfg.name);
        if (j.contains("data")) {
            const json& d = j.at("data");
            if (d.contains("source")) cfg.data.source = parse_data_source(d.at("source").get<std::string>());
            if (d.contains("synthetic")) cfg.data.synthetic = synthetic_from_json(d.at("synthetic"));
            read_path(d, "train", cfg.data.train);
            read_path(d, "test", cfg.data.test);
            read_path(d, "val", cfg.data.val);
        }
        if (j.contains("features")) {
            const json& f = j.at("features");
            if (f.contains("provider")) cfg.features.provider = parse_provider_kind(f.at("provider").get<std::string>());
            read_path(f, "source", cfg.features.source);
            read_path(f, "latents", cfg.features.latents);
            read_opt(f, "seed", cfg.features.seed);
            read_opt(f, "stream_perturbation", cfg.features.stream_perturbation);
            read_opt(f, "image_jitter", cfg.features.image_jitter);
        }
        if (j.contains("streams")) cfg.streams = parse_stream_set(j.at("streams").get<std::string>());
        if (j.contains("blur")) read_opt(j.at("blur"), "kernel_sizes", cfg.blur.kernel_sizes);
        if (j.contains("rsvp")) {
            const json& r = j.at("rsvp");
            read_opt(r, "enabled", cfg.rsvp.enabled);
            read_opt(r, "canvas_size", cfg.rsvp.spec.canvas_size);
            read_opt(r, "background_gray", cfg.rsvp.spec.background_gray);
            read_opt(r, "dot_radius", cfg.rsvp.spec.dot_radius);
            read_opt(r, "dot_color", cfg.rsvp.spec.dot_color);
            read_opt(r, "image_area_fraction", cfg.rsvp.spec.image_area_fraction);
        }
        if (j.contains("split")) {
            const json& s = j.at("split");
            read_opt(s, "train_fraction", cfg.split.train_fraction);
            read_opt(s, "seed", cfg.split.seed);
            if (s.contains("strategy")) cfg.split.strategy = parse_split_strategy(s.at("strategy").get<std::string>());
        }
        if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
        if (j.contains("encoder")) cfg.encoder = encoder_from_json(j.at("encoder"));
        if (j.contains("protocols")) {
            cfg.protocols.clear();
            for (const auto& p : j.at("protocols")) cfg.protocols.push_back(parse_protocol(p.get<std::string>()));
        }
        read_opt(j, "diagnostic_best_test", cfg.diagnostic_best_test);
        read_opt(j, "save_checkpoints", cfg.save_checkpoints);
        read_opt(j, "workers", cfg.workers);
        read_path(j, "output_dir", cfg.output_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config field: ") + e.what());
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
    detail::write_file_atomic(path, config_to_json(cfg));
}

std::vector<std::string> experiment_stream_names(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    for (int k : cfg.blur.kernel_sizes) out.push_back((cfg.rsvp.enabled ? "rsvp_" : "") + blur_stream_name(k));
    out.emplace_back(kEvnetStream);
    return out;
}

StreamConfig stream_config_for(const ExperimentConfig& cfg) {
    auto names = experiment_stream_names(cfg);
    names.pop_back();
    StreamConfig sc;
    const bool all_blur = cfg.streams == StreamSet::blur_only || cfg.streams == StreamSet::both;
    sc.blur_streams = all_blur ? names : std::vector<std::string>{names.front()};
    sc.use_evnet = cfg.streams == StreamSet::evnet_only || cfg.streams == StreamSet::both;
    sc.evnet_stream = kEvnetStream;
    return sc;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
    cfg.validate();
    cfg.check_paths();
    PreparedData out;
    const auto streams = experiment_stream_names(cfg);
    EegDataset train_full;
    if (cfg.data.source == DataSource::synthetic) {
        SyntheticSpec spec = cfg.data.synthetic;
        spec.streams = streams;
        spec.stream_perturbation = cfg.features.stream_perturbation;
        spec.image_jitter = cfg.features.image_jitter;
        SyntheticData gen = generate_synthetic(spec);
        train_full = std::move(gen.train);
        out.test = std::move(gen.test);
        out.bank = std::move(gen.bank);
    } else {
        train_full = load_dataset(cfg.data.train);
        out.test = load_dataset(cfg.data.test);
        if (!cfg.data.val.empty()) out.val = load_dataset(cfg.data.val);
        if (cfg.features.provider == ProviderKind::precomputed) {
            out.bank = select_streams(load_feature_bank(cfg.features.source), streams);
        } else {
            const LatentTable latents = load_latents(cfg.features.latents);
            ProviderSpec ps;
            ps.kind = ProviderKind::synthetic;
            ps.seed = cfg.features.seed;
            ps.streams = streams;
            ps.feature_dim = cfg.data.synthetic.feature_dim;
            ps.stream_perturbation = cfg.features.stream_perturbation;
            ps.image_jitter = cfg.features.image_jitter;
            out.bank = provide_features(ps, latents.ids, &latents);
        }
    }
    if (out.val || cfg.split.train_fraction >= 1.0) {
        out.train = std::move(train_full);
    } else {
        auto [tr, va] = split_train_val(train_full, cfg.split);
        out.train = std::move(tr);
        out.val = std::move(va);
    }
    return out;
}

const ReportRow* AggregateReport::find(const std::string& key) const {
    for (const auto& r : rows)
        if (r.key == key) return &r;
    return nullptr;
}

namespace {

struct RowSpec {
    std::string key;
    std::string label;
    SelectionPolicy policy;
    std::function<double(const EpochMetrics&)> get;
};

std::string policy_label(SelectionPolicy p) {
    switch (p) {
        case SelectionPolicy::final_epoch: return "final epoch";
        case SelectionPolicy::val_selected: return "val-selected epoch";
        case SelectionPolicy::best_test_diagnostic: return "best test epoch";
    }
    return "";
}

std::vector<RowSpec> row_specs(const ExperimentConfig& cfg, bool has_val, std::size_t n_candidates) {
    std::vector<SelectionPolicy> policies{SelectionPolicy::final_epoch};
    if (has_val) policies.push_back(SelectionPolicy::val_selected);
    if (cfg.diagnostic_best_test) policies.push_back(SelectionPolicy::best_test_diagnostic);
    std::vector<RowSpec> out;
    const std::string way = std::to_string(n_candidates) + "-way";
    for (SelectionPolicy pol : policies) {
        const std::string pname = to_string(pol);
        const std::string marker =
            pol == SelectionPolicy::best_test_diagnostic ? " [diagnostic: selected on test, not a headline]" : "";
        for (Protocol proto : cfg.protocols) {
            const bool hung = proto == Protocol::hungarian;
            const std::string pmark = hung ? " [prior-knowledge-assisted: one-to-one assignment]" : "";
            const std::string base = pname + "/" + to_string(proto) + "/";
            const std::string what = hung ? "Hungarian " + way : "standard " + way;
            out.push_back({base + "top1", "Top-1 (" + what + ", " + policy_label(pol) + ")" + pmark + marker, pol,
                           [hung](const EpochMetrics& m) { return hung ? m.hungarian_top1 : m.top1; }});
            out.push_back({base + "top5", "Top-5 (" + what + ", " + policy_label(pol) + ")" + pmark + marker, pol,
                           [hung](const EpochMetrics& m) { return hung ? m.hungarian_top5 : m.top5; }});
        }
        if (has_val)
            out.push_back({pname + "/val_acc", "Val Top-1 (" + policy_label(pol) + ")" + marker, pol,
                           [](const EpochMetrics& m) { return m.val_acc.value_or(0.0); }});
        out.push_back({pname + "/train_loss", "Train loss (" + policy_label(pol) + ")" + marker, pol,
                       [](const EpochMetrics& m) { return m.train_loss; }});
    }
    return out;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

AggregateReport aggregate_outcomes(const ExperimentConfig& cfg, std::vector<SeedOutcome> outcomes,
                                   std::size_t n_candidates) {
    std::sort(outcomes.begin(), outcomes.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
    AggregateReport rep;
    rep.name = cfg.name;
    rep.n_candidates = n_candidates;
    std::vector<const SeedOutcome*> done;
    for (const auto& o : outcomes) {
        rep.seeds.push_back(o.seed);
        if (o.complete) {
            rep.completed.push_back(o.seed);
            done.push_back(&o);
            if (rep.config_hash.empty()) rep.config_hash = o.record.config_hash;
        } else {
            rep.incomplete.emplace_back(o.seed, o.failure);
        }
    }
    rep.metadata = {
        {"streams", to_string(cfg.streams)},
        {"rsvp", cfg.rsvp.enabled ? "on" : "off"},
        {"split", to_string(cfg.split.strategy) + " train_fraction=" + num(cfg.split.train_fraction) +
                      " seed=" + std::to_string(cfg.split.seed)},
        {"blur_sigma_rule", "sigma(k) = 0.3*((k-1)*0.5-1)+0.8, reflect-101 borders"},
        {"standard_top_k_rule", "true candidate among the k highest cosine scores, ties to the lower index"},
        {"hungarian_top_k_rule", "true candidate matched in any of k disjoint successive optimal assignments"},
        {"selection", to_string(cfg.train.selection)},
        {"val_candidates", "distinct val images"},
    };
    const bool has_val = !done.empty() && std::all_of(done.begin(), done.end(), [](const SeedOutcome* o) {
        return !o->record.epochs.empty() && o->record.epochs.front().val_acc.has_value();
    });
    for (const auto& spec : row_specs(cfg, has_val, n_candidates)) {
        ReportRow row{spec.key, spec.label, {}, {}};
        for (const SeedOutcome* o : done) {
            const int idx = select_checkpoint(o->record, spec.policy);
            row.per_seed.push_back(spec.get(o->record.epochs[static_cast<std::size_t>(idx)]));
        }
        row.value = aggregate(row.per_seed);
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

std::string AggregateReport::to_json() const {
    json j;
    j["name"] = name;
    j["config_hash"] = config_hash;
    j["n_candidates"] = n_candidates;
    j["seeds"] = seeds;
    j["completed"] = completed;
    j["n"] = completed.size();
    auto& meta = j["metadata"] = json::object();
    for (const auto& [k, v] : metadata) meta[k] = v;
    auto& inc = j["incomplete"] = json::array();
    for (const auto& [seed, why] : incomplete) inc.push_back({{"seed", seed}, {"reason", why}});
    auto& rs = j["metrics"] = json::array();
    for (const auto& r : rows) {
        json m = {{"key", r.key}, {"label", r.label}, {"mean", r.value.mean}, {"per_seed", r.per_seed}};
        m["std"] = r.value.std_defined() ? json(r.value.std) : json(nullptr);
        rs.push_back(std::move(m));
    }
    return j.dump(2) + "\n";
}

std::string AggregateReport::to_text() const {
    std::ostringstream os;
    os << name << ": " << completed.size() << " of " << seeds.size() << " seeds complete\n";
    for (const auto& [seed, why] : incomplete) os << "  INCOMPLETE seed " << seed << ": " << why << "\n";
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.label.size());
    for (const auto& r : rows) {
        os << r.label << std::string(width - r.label.size() + 2, ' ');
        const bool loss = r.key.ends_with("train_loss");
        os << (loss ? format_plain(r.value, 4) : format_percent(r.value)) << "\n";
    }
    return os.str();
}

std::string AggregateReport::per_seed_csv() const {
    std::string out = "seed";
    for (const auto& r : rows) out += "," + r.key;
    out += "\n";
    for (std::size_t s = 0; s < completed.size(); ++s) {
        out += std::to_string(completed[s]);
        for (const auto& r : rows) out += "," + num(r.per_seed[s]);
        out += "\n";
    }
    return out;
}

namespace {

std::size_t distinct_labels(const EegDataset& d) {
    return std::set<int>(d.labels.begin(), d.labels.end()).size();
}

std::string seed_metrics_json(const SeedOutcome& o, const ExperimentConfig& cfg) {
    json j;
    j["seed"] = o.seed;
    j["config_hash"] = o.record.config_hash;
    j["selected_checkpoint"] = o.record.selected_checkpoint;
    j["selection"] = to_string(cfg.train.selection);
    auto& sel = j["policies"] = json::object();
    std::vector<SelectionPolicy> pols{SelectionPolicy::final_epoch};
    if (!o.record.epochs.empty() && o.record.epochs.front().val_acc) pols.push_back(SelectionPolicy::val_selected);
    if (cfg.diagnostic_best_test) pols.push_back(SelectionPolicy::best_test_diagnostic);
    for (SelectionPolicy p : pols) {
        const auto& m = o.record.epochs[static_cast<std::size_t>(select_checkpoint(o.record, p))];
        json e = {{"epoch", m.epoch},
                  {"standard", {{"top1", m.top1}, {"top5", m.top5}}},
                  {"hungarian_prior_knowledge_assisted", {{"top1", m.hungarian_top1}, {"top5", m.hungarian_top5}}},
                  {"train_loss", m.train_loss}};
        if (m.val_acc) e["val_acc"] = *m.val_acc;
        sel[to_string(p)] = std::move(e);
    }
    return j.dump(2) + "\n";
}

SeedOutcome run_seed(const ExperimentConfig& cfg, const PreparedData& data, const StreamConfig& streams,
                     const EncoderDims& dims, std::uint64_t seed, const ProgressFn& progress) {
    SeedOutcome o;
    o.seed = seed;
    const auto dir = cfg.output_dir / ("seed_" + std::to_string(seed));
    std::string stage = "train";
    try {
        std::filesystem::create_directories(dir);
        TrainingInputs in{&data.train, data.val ? &*data.val : nullptr, &data.test, &data.bank, streams};
        TrainResult res = train(in, cfg.train, seed, dims, [&](const EpochMetrics& m) {
            if (progress) progress(seed, m);
        });
        o.record = std::move(res.record);
        stage = "persist";
        detail::write_file_atomic(dir / "record.csv", o.record.to_csv());
        if (cfg.save_checkpoints) {
            save_checkpoint(dir / "final_epoch.ckpt", res.final_epoch);
            if (res.val_selected) save_checkpoint(dir / "val_selected.ckpt", *res.val_selected);
            if (cfg.diagnostic_best_test) save_checkpoint(dir / "best_test_diagnostic.ckpt", res.best_test);
        }
        detail::write_file_atomic(dir / "metrics.json", seed_metrics_json(o, cfg));
        o.complete = true;
    } catch (const std::exception& e) {
        o.complete = false;
        o.failure = stage + ": " + e.what();
    }
    return o;
}

}  // namespace

AggregateReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    const PreparedData data = prepare_data(cfg);
    const StreamConfig streams = stream_config_for(cfg);
    const EncoderDims dims = dims_for(data.train, data.bank, streams, cfg.encoder);
    std::filesystem::create_directories(cfg.output_dir);
    save_config(cfg.output_dir / "config.json", cfg);

    const auto& seeds = cfg.train.seeds;
    std::vector<SeedOutcome> outcomes(seeds.size());
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    ProgressFn locked;
    if (progress)
        locked = [&](std::uint64_t s, const EpochMetrics& m) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            progress(s, m);
        };
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();)
            outcomes[i] = run_seed(cfg, data, streams, dims, seeds[i], locked);
    };
    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), seeds.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    AggregateReport rep = aggregate_outcomes(cfg, outcomes, distinct_labels(data.test));
    detail::write_file_atomic(cfg.output_dir / "report.json", rep.to_json());
    detail::write_file_atomic(cfg.output_dir / "report.txt", rep.to_text());
    detail::write_file_atomic(cfg.output_dir / "seeds.csv", rep.per_seed_csv());
    std::vector<CurveSeries> curves;
    std::sort(outcomes.begin(), outcomes.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
    for (const auto& o : outcomes) {
        if (!o.complete) continue;
        CurveSeries c{o.seed, {}, {}};
        for (const auto& m : o.record.epochs) {
            c.top1.push_back(m.top1);
            c.loss.push_back(m.train_loss);
        }
        curves.push_back(std::move(c));
    }
    if (!curves.empty()) emit_curves(curves, cfg.output_dir / "curves.svg");
    return rep;
}

bool AblationReport::all_complete() const {
    return std::all_of(variants.begin(), variants.end(), [](const auto& v) { return v.second.all_complete(); });
}

std::string AblationReport::to_text() const {
    std::ostringstream os;
    os << "stream set    seeds  Top-1 (final epoch, standard)  Top-5 (final epoch, standard)\n";
    std::vector<std::pair<double, std::string>> order;
    for (const auto& [set, rep] : variants) {
        const ReportRow* t1 = rep.find("final_epoch/standard/top1");
        const ReportRow* t5 = rep.find("final_epoch/standard/top5");
        std::string name = to_string(set);
        os << name << std::string(14 - std::min<std::size_t>(13, name.size()), ' ');
        std::string n = std::to_string(rep.completed.size()) + "/" + std::to_string(rep.seeds.size());
        os << n << std::string(7 - std::min<std::size_t>(6, n.size()), ' ');
        std::string a = t1 && !rep.completed.empty() ? format_percent(t1->value) : "n/a";
        os << a << std::string(31 - std::min<std::size_t>(30, a.size()), ' ');
        os << (t5 && !rep.completed.empty() ? format_percent(t5->value) : "n/a") << "\n";
        if (t1 && !rep.completed.empty()) order.emplace_back(t1->value.mean, name);
    }
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    os << "ordering by mean Top-1:";
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0) os << (order[i].first == order[i - 1].first ? " =" : " >");
        os << " " << order[i].second;
    }
    os << "\n";
    return os.str();
}

std::string AblationReport::to_json() const {
    json j = json::array();
    for (const auto& [set, rep] : variants) {
        json v = {{"streams", to_string(set)}, {"n", rep.completed.size()}, {"seeds", rep.seeds}};
        for (const char* key : {"final_epoch/standard/top1", "final_epoch/standard/top5"}) {
            const ReportRow* r = rep.find(key);
            if (!r) continue;
            json m = {{"mean", r->value.mean}, {"per_seed", r->per_seed}};
            m["std"] = r->value.std_defined() ? json(r->value.std) : json(nullptr);
            v[key] = std::move(m);
        }
        j.push_back(std::move(v));
    }
    return json({{"ablation", j}}).dump(2) + "\n";
}

AblationReport run_ablation(const ExperimentConfig& cfg, std::span<const StreamSet> sets, const ProgressFn& progress) {
    if (sets.empty()) throw ConfigError("ablation needs at least one stream set");
    AblationReport out;
    for (StreamSet s : sets) {
        ExperimentConfig v = cfg;
        v.streams = s;
        v.name = cfg.name + "/" + to_string(s);
        v.output_dir = cfg.output_dir / to_string(s);
        out.variants.emplace_back(s, run_experiment(v, progress));
    }
    detail::write_file_atomic(cfg.output_dir / "ablation.txt", out.to_text());
    detail::write_file_atomic(cfg.output_dir / "ablation.json", out.to_json());
    return out;
}

}  // namespace eegret
