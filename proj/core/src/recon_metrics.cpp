#include "eegret/recon_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "eegret/aggregate.hpp"
#include "eegret/errors.hpp"

namespace eegret {

namespace {

std::vector<double> gaussian_window_1d(int size, double sigma) {
    std::vector<double> w(static_cast<std::size_t>(size));
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        w[static_cast<std::size_t>(i)] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Valid-mode separable filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int oh = h - n + 1, ow = w - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow), out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < n; ++t) acc += k[static_cast<std::size_t>(t)] * plane[static_cast<std::size_t>(y) * w + x + t];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < n; ++t) acc += k[static_cast<std::size_t>(t)] * tmp[static_cast<std::size_t>(y + t) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

std::span<const double> row_span(const RowMatrix<double>& m, Eigen::Index i) {
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

void check_banks(const RowMatrix<double>& gen, const RowMatrix<double>& gt) {
    if (gen.rows() != gt.rows() || gen.cols() != gt.cols()) throw ShapeError("feature banks must be aligned");
    if (gen.rows() < 1) throw ParameterError("feature banks are empty");
    if (gen.cols() < 2) throw ParameterError("features need at least two dimensions");
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimConfig& cfg) {
    if (a.height != b.height || a.width != b.width) throw ParameterError("SSIM needs images of equal size");
    if (a.height < cfg.window || a.width < cfg.window)
        throw ParameterError("SSIM images must be at least as large as the window");
    const auto x = luminance(a);
    const auto y = luminance(b);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto k = gaussian_window_1d(cfg.window, cfg.sigma);
    const int h = a.height, w = a.width;
    const auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
    const auto exx = filter_valid(xx, h, w, k), eyy = filter_valid(yy, h, w, k), exy = filter_valid(xy, h, w, k);
    const double c1 = (cfg.k1 * cfg.data_range) * (cfg.k1 * cfg.data_range);
    const double c2 = (cfg.k2 * cfg.data_range) * (cfg.k2 * cfg.data_range);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = exx[i] - mx[i] * mx[i];
        const double vy = eyy[i] - my[i] * my[i];
        const double cxy = exy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(mx.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ShapeError("correlation needs two equally long vectors");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("correlation of a constant vector is undefined");
    return sxy / std::sqrt(sxx * syy);
}

double pixcorr(const Image& a, const Image& b, int side) {
    for (const Image* img : {&a, &b})
        if (std::all_of(img->pixels.begin(), img->pixels.end(), [&](double v) { return v == img->pixels.front(); }))
            throw DataError("pixcorr of a constant image is undefined");
    const Image ra = resize_bilinear(a, side, side);
    const Image rb = resize_bilinear(b, side, side);
    return pearson(ra.pixels, rb.pixels);
}

double two_way_identification(const RowMatrix<double>& gen, const RowMatrix<double>& gt) {
    check_banks(gen, gt);
    const Eigen::Index n = gen.rows();
    if (n < 2) throw ParameterError("two-way identification needs at least two items");
    RowMatrix<double> corr(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) corr(i, j) = pearson(row_span(gen, i), row_span(gt, j));
    double score = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            score += corr(i, i) > corr(i, j) ? 1.0 : (corr(i, i) == corr(i, j) ? 0.5 : 0.0);
        }
    return score / static_cast<double>(n * (n - 1));
}

double correlation_distance(const RowMatrix<double>& gen, const RowMatrix<double>& gt) {
    check_banks(gen, gt);
    double total = 0.0;
    for (Eigen::Index i = 0; i < gen.rows(); ++i) total += 1.0 - pearson(row_span(gen, i), row_span(gt, i));
    return total / static_cast<double>(gen.rows());
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["ssim"] = {{"window", ssim_config.window},
                 {"sigma", ssim_config.sigma},
                 {"k1", ssim_config.k1},
                 {"k2", ssim_config.k2},
                 {"data_range", ssim_config.data_range},
                 {"grayscale", "rec601"}};
    j["pixcorr_side"] = pixcorr_side;
    j["two_way_pairs"] = "ordered, ties 0.5";
    auto& arr = j["metrics"] = nlohmann::json::array();
    for (const auto& m : metrics)
        arr.push_back({{"name", m.name},
                       {"direction", m.higher_is_better ? "higher" : "lower"},
                       {"mean", m.mean},
                       {"std", m.per_seed.size() > 1 ? nlohmann::json(m.std) : nlohmann::json(nullptr)},
                       {"per_seed", m.per_seed},
                       {"per_pair", m.per_pair}});
    return j.dump(2) + "\n";
}

std::string MetricReport::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "metric,direction,mean,std,n_seeds\n";
    for (const auto& m : metrics) {
        os << m.name << ',' << (m.higher_is_better ? "higher" : "lower") << ',' << m.mean << ',';
        if (m.per_seed.size() > 1) os << m.std;
        os << ',' << m.per_seed.size() << '\n';
    }
    return os.str();
}

namespace {

MetricSummary summarize(std::string name, bool higher, std::vector<double> per_seed, std::vector<double> per_pair) {
    MetricSummary m;
    m.name = std::move(name);
    m.higher_is_better = higher;
    const Aggregate a = aggregate(per_seed);
    m.mean = a.mean;
    m.std = a.std;
    m.per_seed = std::move(per_seed);
    m.per_pair = std::move(per_pair);
    return m;
}

RowMatrix<double> stream_matrix(const FeatureBank& bank, std::size_t stream) {
    RowMatrix<double> out(static_cast<Eigen::Index>(bank.n_images), static_cast<Eigen::Index>(bank.feature_dim));
    for (std::size_t i = 0; i < bank.n_images; ++i) {
        auto row = bank.row(i, stream);
        for (std::size_t k = 0; k < bank.feature_dim; ++k)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
    }
    return out;
}

}  // namespace

MetricReport score_reconstructions(const ReconInputs& in, const SsimConfig& cfg, int side) {
    MetricReport report;
    report.ssim_config = cfg;
    report.pixcorr_side = side;
    if (!in.generated.empty()) {
        std::vector<double> ssim_seed, pix_seed, ssim_pairs, pix_pairs;
        for (std::size_t s = 0; s < in.generated.size(); ++s) {
            const auto& gen = in.generated[s];
            if (gen.size() != in.ground_truth.size() || gen.empty())
                throw ParameterError("generated image set " + std::to_string(s) + " does not match ground truth");
            double ss = 0.0, pc = 0.0;
            for (std::size_t i = 0; i < gen.size(); ++i) {
                const double a = ssim(gen[i], in.ground_truth[i], cfg);
                const double b = pixcorr(gen[i], in.ground_truth[i], side);
                ss += a;
                pc += b;
                if (s == 0) {
                    ssim_pairs.push_back(a);
                    pix_pairs.push_back(b);
                }
            }
            ssim_seed.push_back(ss / static_cast<double>(gen.size()));
            pix_seed.push_back(pc / static_cast<double>(gen.size()));
        }
        report.metrics.push_back(summarize("pixcorr", true, std::move(pix_seed), std::move(pix_pairs)));
        report.metrics.push_back(summarize("ssim", true, std::move(ssim_seed), std::move(ssim_pairs)));
    }
    for (const auto& [name, bank] : in.feature_banks) {
        const std::size_t gt_col = bank.stream_index(kGroundTruthStream);
        const RowMatrix<double> gt = stream_matrix(bank, gt_col);
        std::vector<double> two_way, dist, two_way_pairs, dist_pairs;
        for (std::size_t s = 0; s < bank.n_streams; ++s) {
            if (s == gt_col) continue;
            const RowMatrix<double> gen = stream_matrix(bank, s);
            two_way.push_back(two_way_identification(gen, gt));
            dist.push_back(correlation_distance(gen, gt));
            if (two_way_pairs.empty()) {
                for (Eigen::Index i = 0; i < gen.rows(); ++i) {
                    const double own = pearson(row_span(gen, i), row_span(gt, i));
                    dist_pairs.push_back(1.0 - own);
                    double hits = 0.0;
                    for (Eigen::Index j = 0; j < gen.rows(); ++j) {
                        if (j == i) continue;
                        const double other = pearson(row_span(gen, i), row_span(gt, j));
                        hits += own > other ? 1.0 : (own == other ? 0.5 : 0.0);
                    }
                    two_way_pairs.push_back(hits / static_cast<double>(gen.rows() - 1));
                }
            }
        }
        if (two_way.empty()) throw ConfigError("feature bank '" + name + "' has no generated streams");
        report.metrics.push_back(summarize(name + "_2way", true, std::move(two_way), std::move(two_way_pairs)));
        report.metrics.push_back(summarize(name + "_corr_dist", false, std::move(dist), std::move(dist_pairs)));
    }
    return report;
}

}  // namespace eegret
