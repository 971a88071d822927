#pragma once

#include <span>
#include <string>
#include <vector>

#include "eegret/dataset.hpp"
#include "eegret/image.hpp"
#include "eegret/params.hpp"

namespace eegret {

struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

// Mean SSIM over all valid (fully inside) Gaussian-weighted windows of the
// Rec. 601 luminance. ParameterError on size mismatch or images smaller than
// the window.
double ssim(const Image& a, const Image& b, const SsimConfig& cfg = {});

// Pearson correlation of two equally long vectors; DataError when either is
// constant.
double pearson(std::span<const double> x, std::span<const double> y);

inline constexpr int kPixCorrSize = 256;

// Pearson correlation of the flattened RGB pixels after bilinear resizing of
// both images to side x side.
double pixcorr(const Image& a, const Image& b, int side = kPixCorrSize);

// Mean over ordered pairs (i, j != i) of [corr(gen_i, gt_i) > corr(gen_i, gt_j)],
// ties counting one half. Rows are aligned; d >= 2.
double two_way_identification(const RowMatrix<double>& gen, const RowMatrix<double>& gt);

// Mean over rows of 1 - corr(gen_i, gt_i).
double correlation_distance(const RowMatrix<double>& gen, const RowMatrix<double>& gt);

struct MetricSummary {
    std::string name;
    bool higher_is_better = true;
    double mean = 0.0;
    double std = 0.0;              // sample std across seeds; 0 here, null/empty in reports, for one seed
    std::vector<double> per_seed;  // one aggregate per seed
    std::vector<double> per_pair;  // raw per-item values of the first seed
};

struct MetricReport {
    SsimConfig ssim_config;
    int pixcorr_side = kPixCorrSize;
    std::vector<MetricSummary> metrics;

    std::string to_json() const;
    std::string to_csv() const;
};

// Generated images per seed, each aligned with gt. ParameterError when a seed
// has a different image count.
struct ReconInputs {
    std::vector<std::vector<Image>> generated;
    std::vector<Image> ground_truth;
    // Named extractor banks: stream "gt" holds ground-truth features, every
    // other stream is one seed's generations, rows aligned with gt.
    std::vector<std::pair<std::string, FeatureBank>> feature_banks;
};

inline constexpr const char* kGroundTruthStream = "gt";

// SSIM and PixCorr over the image sets, then "<bank>_2way" and
// "<bank>_corr_dist" for every feature bank.
MetricReport score_reconstructions(const ReconInputs& in, const SsimConfig& cfg = {}, int side = kPixCorrSize);

}  // namespace eegret
