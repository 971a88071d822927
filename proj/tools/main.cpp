#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "eegret/array.hpp"
#include "eegret/blur.hpp"
#include "eegret/curves.hpp"
#include "eegret/errors.hpp"
#include "eegret/experiment.hpp"
#include "eegret/npy.hpp"
#include "eegret/png_io.hpp"
#include "eegret/recon_metrics.hpp"
#include "eegret/rsvp.hpp"

namespace fs = std::filesystem;
using namespace eegret;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');)
        if (!tok.empty()) out.push_back(tok);
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

void print_progress(std::uint64_t seed, const EpochMetrics& m) {
    std::fprintf(stderr, "seed %llu epoch %d loss %.4f top1 %.4f top5 %.4f\n", static_cast<unsigned long long>(seed),
                 m.epoch, m.train_loss, m.top1, m.top5);
}

ExperimentConfig config_with_overrides(const std::string& path, const std::vector<std::uint64_t>& seeds,
                                       const std::string& out, int workers) {
    ExperimentConfig cfg = load_config(path);
    if (!seeds.empty()) cfg.train.seeds = seeds;
    if (!out.empty()) cfg.output_dir = out;
    if (workers > 0) cfg.workers = workers;
    cfg.validate();
    return cfg;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(line);
    return out;
}

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

int run_metrics(const std::string& gen_dir, const std::string& gt_dir, const std::vector<std::string>& feats,
                const std::string& out) {
    ReconInputs in;
    if (!gt_dir.empty()) {
        const auto gt = sorted_pngs(gt_dir);
        if (gt.empty()) throw ConfigError("no PNG images in " + gt_dir);
        for (const auto& p : gt) in.ground_truth.push_back(read_png(p));
        std::vector<fs::path> seed_dirs;
        for (const auto& e : fs::directory_iterator(gen_dir))
            if (e.is_directory()) seed_dirs.push_back(e.path());
        std::sort(seed_dirs.begin(), seed_dirs.end());
        if (seed_dirs.empty()) seed_dirs.push_back(gen_dir);
        for (const auto& d : seed_dirs) {
            std::vector<Image> imgs;
            for (const auto& p : gt) {
                const fs::path g = d / p.filename();
                if (!fs::exists(g)) throw ConfigError("missing generated image " + g.string());
                imgs.push_back(read_png(g));
            }
            in.generated.push_back(std::move(imgs));
        }
    }
    for (const auto& spec : feats) {
        const auto eq = spec.find('=');
        const std::string name = eq == std::string::npos ? fs::path(spec).filename().string() : spec.substr(0, eq);
        const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        in.feature_banks.emplace_back(name, load_feature_bank(path));
    }
    const MetricReport rep = score_reconstructions(in);
    fs::create_directories(out);
    write_text(fs::path(out) / "metrics.json", rep.to_json());
    write_text(fs::path(out) / "metrics.csv", rep.to_csv());
    std::cout << rep.to_csv();
    return 0;
}

nlohmann::json eval_record(const RetrievalMetrics& m, std::uint64_t seed, const std::string& checkpoint) {
    return {{"protocol", to_string(m.protocol)},
            {"label", m.protocol == Protocol::hungarian ? "prior-knowledge-assisted" : "standard"},
            {"top_k_rule", m.protocol == Protocol::hungarian ? "k disjoint successive optimal assignments" : "k highest cosine scores, ties to the lower index"},
            {"top1", m.top1},
            {"top5", m.top5},
            {"n", m.n},
            {"seed", seed},
            {"checkpoint", checkpoint}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EEG-to-image contrastive retrieval experiments"};
    app.require_subcommand(1);

    // data
    auto* data = app.add_subcommand("data", "Create or import EEG datasets")->require_subcommand(1);
    auto* data_synth = data->add_subcommand("synth", "Generate the synthetic benchmark (train, test, features)");
    std::string ds_config, ds_out;
    SyntheticSpec ds_spec;
    data_synth->add_option("--config", ds_config, "Experiment config supplying data.synthetic");
    data_synth->add_option("--out", ds_out, "Output directory")->required();
    data_synth->add_option("--seed", ds_spec.seed, "Data seed");
    data_synth->add_option("--classes", ds_spec.class_count);
    data_synth->add_option("--samples-per-class", ds_spec.samples_per_class);
    data_synth->add_option("--latent-dim", ds_spec.latent_dim);
    data_synth->add_option("--noise", ds_spec.noise_sigma);

    auto* data_import = data->add_subcommand("import", "Convert an NPY EEG tensor into a dataset container");
    std::string di_npy, di_labels, di_split = "train", di_out;
    data_import->add_option("--npy", di_npy, "[n, reps, channels, time] or [n, channels, time]")->required();
    data_import->add_option("--labels", di_labels, "NPY vector of class labels (default: one class per sample)");
    data_import->add_option("--split", di_split)->check(CLI::IsMember({"train", "val", "test"}));
    data_import->add_option("--out", di_out)->required();

    // features
    auto* features = app.add_subcommand("features", "Create or import feature banks")->require_subcommand(1);
    auto* feat_synth = features->add_subcommand("synth", "Synthetic provider over a latent table");
    std::string fs_latents, fs_out, fs_streams;
    ProviderSpec fs_spec;
    feat_synth->add_option("--latents", fs_latents)->required();
    feat_synth->add_option("--out", fs_out)->required();
    feat_synth->add_option("--seed", fs_spec.seed);
    feat_synth->add_option("--dim", fs_spec.feature_dim);
    feat_synth->add_option("--streams", fs_streams, "Comma-separated stream names");
    feat_synth->add_option("--perturbation", fs_spec.stream_perturbation);
    feat_synth->add_option("--jitter", fs_spec.image_jitter);

    auto* feat_import = features->add_subcommand("import", "Convert an NPY feature tensor into a bank container");
    std::string fi_npy, fi_streams, fi_ids, fi_tag = "npy-import", fi_out;
    feat_import->add_option("--npy", fi_npy, "[n, streams, dim] or [n, dim]")->required();
    feat_import->add_option("--streams", fi_streams, "Comma-separated stream names")->required();
    feat_import->add_option("--ids", fi_ids, "Text file with one image id per line");
    feat_import->add_option("--provider", fi_tag);
    feat_import->add_option("--out", fi_out)->required();

    // images
    auto* images = app.add_subcommand("images", "Image preprocessing")->require_subcommand(1);
    auto* pyramid = images->add_subcommand("pyramid", "Write the blur pyramid of a PNG");
    std::string py_in, py_out;
    bool py_rsvp = false;
    std::vector<int> py_kernels = BlurSpec{}.kernel_sizes;
    pyramid->add_option("--in", py_in)->required();
    pyramid->add_option("--out", py_out)->required();
    pyramid->add_option("--kernels", py_kernels);
    pyramid->add_flag("--rsvp", py_rsvp, "Composite onto the RSVP canvas first");

    // train / ablate
    std::string cfg_path, out_dir;
    std::vector<std::uint64_t> seeds;
    int workers = 0;
    auto* train_cmd = app.add_subcommand("train", "Train every configured seed and aggregate");
    train_cmd->add_option("--config", cfg_path)->required();
    train_cmd->add_option("--seed", seeds, "Restrict to these seeds");
    train_cmd->add_option("--out", out_dir, "Override output_dir");
    train_cmd->add_option("--workers", workers);

    auto* ablate = app.add_subcommand("ablate", "Run the stream-configuration ablation matrix");
    std::vector<std::string> ab_sets{"none", "evnet_only", "blur_only", "both"};
    ablate->add_option("--config", cfg_path)->required();
    ablate->add_option("--seed", seeds);
    ablate->add_option("--out", out_dir);
    ablate->add_option("--workers", workers);
    ablate->add_option("--sets", ab_sets, "Subset of none, evnet_only, blur_only, both");

    // eval
    auto* eval = app.add_subcommand("eval", "Score a checkpoint on the test set");
    std::string ev_ckpt, ev_test, ev_features, ev_dump, ev_out, ev_policy = "final_epoch";
    std::vector<std::string> ev_protocols{"standard", "hungarian"};
    eval->add_option("--config", cfg_path, "Locate data and checkpoints through an experiment config");
    eval->add_option("--seed", seeds);
    eval->add_option("--run", out_dir, "Experiment output directory (overrides output_dir)");
    eval->add_option("--policy", ev_policy)->check(CLI::IsMember({"final_epoch", "val_selected", "best_test_diagnostic"}));
    eval->add_option("--checkpoint", ev_ckpt);
    eval->add_option("--test", ev_test, "Test dataset container");
    eval->add_option("--features", ev_features, "Feature bank container");
    eval->add_option("--protocol", ev_protocols)->check(CLI::IsMember({"standard", "hungarian"}));
    eval->add_option("--dump-similarity", ev_dump, "Write the similarity matrix as an array container");
    eval->add_option("--out", ev_out, "JSON output file");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Reconstruction metrics")->require_subcommand(1);
    auto* score = metrics->add_subcommand("score", "SSIM, PixCorr, two-way identification, correlation distance");
    std::string ms_gen, ms_gt, ms_out = ".";
    std::vector<std::string> ms_feats;
    score->add_option("--gen", ms_gen, "Generated PNGs, or one subdirectory of PNGs per seed");
    score->add_option("--gt", ms_gt, "Ground-truth PNGs (matched by file name)");
    score->add_option("--feats", ms_feats, "[name=]BANK with a 'gt' stream and one stream per seed");
    score->add_option("--out", ms_out);

    // curves
    auto* curves = app.add_subcommand("curves", "Emit the Top-1 / loss SVG from run records");
    std::string cv_run, cv_out;
    std::vector<std::string> cv_records;
    curves->add_option("--run", cv_run, "Experiment output directory (reads seed_*/record.csv)");
    curves->add_option("--records", cv_records, "Explicit record.csv files");
    curves->add_option("--out", cv_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (data_synth->parsed()) {
            SyntheticSpec spec = ds_spec;
            if (!ds_config.empty()) {
                const ExperimentConfig cfg = load_config(ds_config);
                spec = cfg.data.synthetic;
                spec.streams = experiment_stream_names(cfg);
                spec.stream_perturbation = cfg.features.stream_perturbation;
                spec.image_jitter = cfg.features.image_jitter;
            }
            const SyntheticData d = generate_synthetic(spec);
            const fs::path out(ds_out);
            write_dataset(out / "train", d.train);
            write_dataset(out / "test", d.test);
            write_feature_bank(out / "features", d.bank);
            write_latents(out / "latents", d.latents);
            std::cout << "wrote " << d.train.n_samples << " train / " << d.test.n_samples << " test samples to "
                      << out.string() << "\n";
        } else if (data_import->parsed()) {
            std::optional<std::vector<int>> labels;
            if (!di_labels.empty()) {
                const NpyArray a = read_npy(di_labels);
                labels.emplace();
                for (double v : a.values) labels->push_back(static_cast<int>(v));
            }
            write_dataset(di_out, import_npy_dataset(di_npy, labels, parse_split_tag(di_split)));
        } else if (feat_synth->parsed()) {
            const LatentTable latents = load_latents(fs_latents);
            fs_spec.kind = ProviderKind::synthetic;
            fs_spec.streams = fs_streams.empty() ? default_stream_names() : split_list(fs_streams);
            cache_features(provide_features(fs_spec, latents.ids, &latents), fs_out);
        } else if (feat_import->parsed()) {
            std::vector<std::string> ids;
            if (!fi_ids.empty()) ids = read_lines(fi_ids);
            cache_features(import_npy_bank(fi_npy, split_list(fi_streams), ids, fi_tag), fi_out);
        } else if (pyramid->parsed()) {
            Image img = read_png(py_in);
            if (py_rsvp) img = compose_rsvp(img, RsvpSpec{});
            const auto levels = build_blur_pyramid(img, BlurSpec{py_kernels});
            fs::create_directories(py_out);
            for (std::size_t i = 0; i < levels.size(); ++i)
                write_png(fs::path(py_out) / (blur_stream_name(py_kernels[i]) + ".png"), levels[i]);
        } else if (train_cmd->parsed()) {
            const ExperimentConfig cfg = config_with_overrides(cfg_path, seeds, out_dir, workers);
            const AggregateReport rep = run_experiment(cfg, print_progress);
            std::cout << rep.to_text();
            return rep.all_complete() ? 0 : 1;
        } else if (ablate->parsed()) {
            const ExperimentConfig cfg = config_with_overrides(cfg_path, seeds, out_dir, workers);
            std::vector<StreamSet> sets;
            for (const auto& s : ab_sets) sets.push_back(parse_stream_set(s));
            const AblationReport rep = run_ablation(cfg, sets, print_progress);
            std::cout << rep.to_text();
            return rep.all_complete() ? 0 : 1;
        } else if (eval->parsed()) {
            std::vector<Protocol> protocols;
            for (const auto& p : ev_protocols) protocols.push_back(parse_protocol(p));
            nlohmann::json records = nlohmann::json::array();
            auto score_one = [&](const Checkpoint& ck, const EegDataset& test, const FeatureBank& bank,
                                 const std::string& ck_name, const fs::path& dump) {
                const SimilarityMatrix sim = retrieval_similarity(ck.params, test, bank, ck.streams);
                for (Protocol p : protocols) records.push_back(eval_record(score_similarity(sim, p), ck.seed, ck_name));
                if (!dump.empty()) {
                    FloatArray arr;
                    arr.shape = {static_cast<std::size_t>(sim.scores.rows()), static_cast<std::size_t>(sim.scores.cols())};
                    for (Eigen::Index i = 0; i < sim.scores.size(); ++i)
                        arr.values.push_back(static_cast<float>(sim.scores.data()[i]));
                    write_array(dump, arr);
                }
            };
            if (!ev_ckpt.empty()) {
                if (ev_test.empty() || ev_features.empty())
                    throw ConfigError("--checkpoint needs --test and --features");
                score_one(load_checkpoint(ev_ckpt), load_dataset(ev_test), load_feature_bank(ev_features), ev_ckpt,
                          ev_dump);
            } else {
                if (cfg_path.empty()) throw ConfigError("eval needs --checkpoint or --config");
                const ExperimentConfig cfg = config_with_overrides(cfg_path, seeds, out_dir, 0);
                const PreparedData d = prepare_data(cfg);
                const auto pol = parse_selection_policy(ev_policy);
                if (pol == SelectionPolicy::best_test_diagnostic && !cfg.diagnostic_best_test)
                    throw ConfigError("best_test_diagnostic needs diagnostic_best_test in the config");
                for (std::uint64_t s : cfg.train.seeds) {
                    const fs::path ck = cfg.output_dir / ("seed_" + std::to_string(s)) / (ev_policy + ".ckpt");
                    score_one(load_checkpoint(ck), d.test, d.bank, ck.string(),
                              ev_dump.empty() ? fs::path{} : fs::path(ev_dump) / ("seed_" + std::to_string(s)));
                }
            }
            const std::string text = records.dump(2) + "\n";
            if (!ev_out.empty()) write_text(ev_out, text);
            std::cout << text;
        } else if (score->parsed()) {
            if (ms_gt.empty() && ms_feats.empty()) throw ConfigError("metrics score needs --gt/--gen or --feats");
            if (ms_gt.empty() != ms_gen.empty()) throw ConfigError("--gen and --gt must be given together");
            return run_metrics(ms_gen, ms_gt, ms_feats, ms_out);
        } else if (curves->parsed()) {
            std::vector<std::pair<std::uint64_t, fs::path>> files;
            const std::regex seed_dir("seed_([0-9]+)");
            if (!cv_run.empty())
                for (const auto& e : fs::directory_iterator(cv_run)) {
                    std::smatch m;
                    const std::string name = e.path().filename().string();
                    if (e.is_directory() && std::regex_match(name, m, seed_dir) &&
                        fs::exists(e.path() / "record.csv"))
                        files.emplace_back(std::stoull(m[1].str()), e.path() / "record.csv");
                }
            for (std::size_t i = 0; i < cv_records.size(); ++i) {
                std::smatch m;
                const std::string parent = fs::path(cv_records[i]).parent_path().filename().string();
                files.emplace_back(std::regex_match(parent, m, seed_dir) ? std::stoull(m[1].str()) : i, cv_records[i]);
            }
            if (files.empty()) throw ConfigError("no run records found");
            std::sort(files.begin(), files.end());
            std::vector<CurveSeries> series;
            for (const auto& [seed, path] : files) {
                const RunRecord r = read_run_record_csv(path, seed);
                CurveSeries c{seed, {}, {}};
                for (const auto& m : r.epochs) {
                    c.top1.push_back(m.top1);
                    c.loss.push_back(m.train_loss);
                }
                series.push_back(std::move(c));
            }
            if (fs::path(cv_out).has_parent_path()) fs::create_directories(fs::path(cv_out).parent_path());
            emit_curves(series, cv_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
