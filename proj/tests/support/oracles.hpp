#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "eegret/image.hpp"
#include "eegret/params.hpp"

namespace oracle {

using Mat = eegret::RowMatrix<double>;

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("eegret_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline Mat random_matrix(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
    return m;
}

inline eegret::Image random_image(std::mt19937_64& gen, int h, int w) {
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    eegret::Image img(h, w);
    for (auto& p : img.pixels) p = ud(gen);
    return img;
}

// Smooth "natural" test image: a few random low-frequency sinusoids.
inline eegret::Image smooth_image(std::mt19937_64& gen, int h, int w) {
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    eegret::Image img(h, w);
    double fx[3], fy[3], ph[3];
    for (int k = 0; k < 3; ++k) {
        fx[k] = 0.5 + 3.0 * ud(gen);
        fy[k] = 0.5 + 3.0 * ud(gen);
        ph[k] = 6.28 * ud(gen);
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = 0.5;
                for (int k = 0; k < 3; ++k)
                    v += 0.12 * std::sin(fx[k] * 6.28 * x / w + fy[k] * 6.28 * y / h + ph[k] + c);
                img.at(y, x, c) = std::clamp(v + 0.05 * (ud(gen) - 0.5), 0.0, 1.0);
            }
    return img;
}

// ---------------------------------------------------------------- assignment

struct BruteAssignment {
    std::vector<int> permutation;
    double total = -std::numeric_limits<double>::infinity();
};

// Maximum-score permutation by exhaustive enumeration in lexicographic order;
// the first strict maximum wins, so ties resolve to the lexicographically
// smallest permutation. Entries set to -inf are forbidden.
inline BruteAssignment brute_force_max(const Mat& s) {
    const int n = static_cast<int>(s.rows());
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    BruteAssignment best;
    do {
        double t = 0.0;
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
            const double v = s(i, p[static_cast<std::size_t>(i)]);
            if (std::isinf(v) && v < 0) ok = false;
            t += v;
        }
        if (ok && (best.permutation.empty() || t > best.total)) {
            best.total = t;
            best.permutation = p;
        }
    } while (std::next_permutation(p.begin(), p.end()));
    return best;
}

// Round-by-round disjoint assignments (each round maximised by enumeration,
// used pairs removed); fraction of queries whose label is matched in any round.
inline double brute_hungarian_top_k(Mat s, const std::vector<int>& ql, const std::vector<int>& cl, int k) {
    const auto n = s.rows();
    std::vector<bool> hit(static_cast<std::size_t>(n), false);
    for (int r = 0; r < k; ++r) {
        const auto best = brute_force_max(s);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int j = best.permutation[static_cast<std::size_t>(i)];
            if (cl[static_cast<std::size_t>(j)] == ql[static_cast<std::size_t>(i)]) hit[static_cast<std::size_t>(i)] = true;
            s(i, j) = -std::numeric_limits<double>::infinity();
        }
    }
    return static_cast<double>(std::count(hit.begin(), hit.end(), true)) / static_cast<double>(n);
}

// ---------------------------------------------------------------- statistics

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline std::vector<double> row(const Mat& m, Eigen::Index i) {
    std::vector<double> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) out[static_cast<std::size_t>(k)] = m(i, k);
    return out;
}

inline double two_way(const Mat& gen, const Mat& gt) {
    const auto n = gen.rows();
    double score = 0.0;
    int pairs = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double own = pearson(row(gen, i), row(gt, i));
            const double other = pearson(row(gen, i), row(gt, j));
            score += own > other ? 1.0 : own == other ? 0.5 : 0.0;
            ++pairs;
        }
    return score / pairs;
}

inline double correlation_distance(const Mat& gen, const Mat& gt) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < gen.rows(); ++i) s += 1.0 - pearson(row(gen, i), row(gt, i));
    return s / static_cast<double>(gen.rows());
}

// ---------------------------------------------------------------- images

inline std::vector<double> luma(const eegret::Image& img) {
    std::vector<double> out(static_cast<std::size_t>(img.height) * img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out[static_cast<std::size_t>(y) * img.width + x] =
                0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
    return out;
}

// SSIM from its definition: every valid 11x11 window position, 2-D Gaussian
// weights (sigma 1.5) normalised over the window, weighted moments computed
// directly.
inline double dense_ssim(const eegret::Image& a, const eegret::Image& b) {
    const int win = 11;
    const double sigma = 1.5, c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    std::vector<double> w(win * win);
    double wsum = 0.0;
    for (int dy = 0; dy < win; ++dy)
        for (int dx = 0; dx < win; ++dx) {
            const double ry = dy - 5, rx = dx - 5;
            w[dy * win + dx] = std::exp(-(rx * rx + ry * ry) / (2 * sigma * sigma));
            wsum += w[dy * win + dx];
        }
    for (double& x : w) x /= wsum;
    const auto la = luma(a), lb = luma(b);
    const int H = a.height, W = a.width;
    double total = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + win <= H; ++y0)
        for (int x0 = 0; x0 + win <= W; ++x0) {
            double ma = 0, mb = 0;
            for (int dy = 0; dy < win; ++dy)
                for (int dx = 0; dx < win; ++dx) {
                    const double ww = w[dy * win + dx];
                    ma += ww * la[(y0 + dy) * W + x0 + dx];
                    mb += ww * lb[(y0 + dy) * W + x0 + dx];
                }
            double va = 0, vb = 0, cab = 0;
            for (int dy = 0; dy < win; ++dy)
                for (int dx = 0; dx < win; ++dx) {
                    const double ww = w[dy * win + dx];
                    const double da = la[(y0 + dy) * W + x0 + dx] - ma;
                    const double db = lb[(y0 + dy) * W + x0 + dx] - mb;
                    va += ww * da * da;
                    vb += ww * db * db;
                    cab += ww * da * db;
                }
            total += ((2 * ma * mb + c1) * (2 * cab + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return total / count;
}

inline int reflect101(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

inline std::vector<double> gaussian_1d(int k) {
    const double sigma = 0.3 * ((k - 1) * 0.5 - 1) + 0.8;
    std::vector<double> g(static_cast<std::size_t>(k));
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
        const double x = i - (k - 1) / 2.0;
        g[static_cast<std::size_t>(i)] = std::exp(-x * x / (2 * sigma * sigma));
        s += g[static_cast<std::size_t>(i)];
    }
    for (double& v : g) v /= s;
    return g;
}

// Direct 2-D convolution with the full k x k outer-product kernel and
// reflect-101 borders, no clamping.
inline eegret::Image dense_blur(const eegret::Image& img, int k) {
    if (k == 1) return img;
    const auto g = gaussian_1d(k);
    const int r = k / 2;
    eegret::Image out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double s = 0.0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx)
                        s += g[static_cast<std::size_t>(dy + r)] * g[static_cast<std::size_t>(dx + r)] *
                             img.at(reflect101(y + dy, img.height), reflect101(x + dx, img.width), c);
                out.at(y, x, c) = s;
            }
    return out;
}

// Bilinear resize with half-pixel centres and edge clamping.
inline eegret::Image bilinear(const eegret::Image& img, int h, int w) {
    eegret::Image out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double sy = std::clamp((y + 0.5) * img.height / h - 0.5, 0.0, img.height - 1.0);
            const double sx = std::clamp((x + 0.5) * img.width / w - 0.5, 0.0, img.width - 1.0);
            const int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
            const int y1 = std::min(y0 + 1, img.height - 1), x1 = std::min(x0 + 1, img.width - 1);
            const double fy = sy - y0, fx = sx - x0;
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) = (1 - fy) * ((1 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c)) +
                                  fy * ((1 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c));
        }
    return out;
}

inline double pixel_variance(const eegret::Image& img) {
    return sample_std(img.pixels) * sample_std(img.pixels);
}

// ---------------------------------------------------------------- InfoNCE

// Symmetric InfoNCE written directly from its definition (no max shift).
inline double infonce(const Mat& z, const Mat& v, double scale = 1.0) {
    const auto n = z.rows();
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double row_den = 0.0, col_den = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            row_den += std::exp(scale * z.row(i).dot(v.row(j)));
            col_den += std::exp(scale * v.row(i).dot(z.row(j)));
        }
        const double pos = scale * z.row(i).dot(v.row(i));
        loss -= (pos - std::log(row_den)) + (pos - std::log(col_den));
    }
    return loss / (2.0 * n);
}

}  // namespace oracle
