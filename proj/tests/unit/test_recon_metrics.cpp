#include <doctest.h>

#include <json.hpp>
#include <random>

#include "eegret/aggregate.hpp"
#include "eegret/errors.hpp"
#include "eegret/recon_metrics.hpp"
#include "oracles.hpp"

using namespace eegret;
using Mat = RowMatrix<double>;

namespace {

std::vector<Image> corpus(std::uint64_t seed, int n, int h = 24, int w = 20) {
    std::mt19937_64 gen(seed);
    std::vector<Image> out;
    for (int i = 0; i < n; ++i) out.push_back(i % 2 ? oracle::random_image(gen, h, w) : oracle::smooth_image(gen, h, w));
    return out;
}

Image flip_both(const Image& img) {
    Image out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(img.height - 1 - y, img.width - 1 - x, c);
    return out;
}

std::vector<double> flat_resized(const Image& img, int side) { return oracle::bilinear(img, side, side).pixels; }

Mat permute_rows(const Mat& m, const std::vector<int>& p) {
    Mat out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(p[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace

TEST_CASE("ssim") {
    const auto imgs = corpus(1, 20);
    SUBCASE("self-similarity is exactly one") {
        for (const auto& a : imgs) CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("symmetric and agrees with the dense definition over a 20-image corpus") {
        for (std::size_t i = 0; i < imgs.size(); ++i) {
            const auto& a = imgs[i];
            const auto& b = imgs[(i + 1) % imgs.size()];
            const double s = ssim(a, b);
            CHECK(s == ssim(b, a));
            CHECK(std::abs(s - oracle::dense_ssim(a, b)) < 1e-10);
            CHECK(s >= -1.0);
            CHECK(s <= 1.0);
        }
    }
    SUBCASE("16 x 16 gradient against its contrast-halved version") {
        Image a(16, 16), b(16, 16);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                for (int c = 0; c < 3; ++c) {
                    a.at(y, x, c) = (x + y) / 30.0;
                    b.at(y, x, c) = 0.5 + (a.at(y, x, c) - 0.5) / 2.0;
                }
        const double s = ssim(a, b);
        CHECK(std::abs(s - oracle::dense_ssim(a, b)) < 1e-10);
        CHECK(s < 1.0);
    }
    SUBCASE("invariant under simultaneous flips") {
        for (std::size_t i = 0; i + 1 < imgs.size(); i += 2)
            CHECK(ssim(flip_both(imgs[i]), flip_both(imgs[i + 1])) == doctest::Approx(ssim(imgs[i], imgs[i + 1])).epsilon(1e-12));
    }
    SUBCASE("size mismatch or too-small images are parameter errors") {
        CHECK_THROWS_AS(ssim(Image(16, 16, 0.5), Image(16, 17, 0.5)), ParameterError);
        CHECK_THROWS_AS(ssim(Image(8, 8, 0.5), Image(8, 8, 0.5)), ParameterError);
    }
}

TEST_CASE("pixcorr") {
    std::mt19937_64 gen(2);
    const Image a = oracle::smooth_image(gen, 30, 40);
    SUBCASE("self and inverted") {
        CHECK(pixcorr(a, a) == doctest::Approx(1.0).epsilon(1e-14));
        Image inv = a;
        for (double& v : inv.pixels) v = 1.0 - v;
        CHECK(pixcorr(a, inv) == doctest::Approx(-1.0).epsilon(1e-14));
    }
    SUBCASE("matches direct covariance over 256 x 256 bilinear resamples") {
        for (int t = 0; t < 3; ++t) {
            const Image x = oracle::random_image(gen, 20 + t, 33), y = oracle::random_image(gen, 41, 17 + t);
            CHECK(std::abs(pixcorr(x, y) - oracle::pearson(flat_resized(x, 256), flat_resized(y, 256))) < 1e-12);
        }
    }
    SUBCASE("constant image is a data error") {
        CHECK_THROWS_AS(pixcorr(a, Image(30, 40, 0.2)), DataError);
    }
}

TEST_CASE("two_way_identification") {
    SUBCASE("gen == gt with distinct rows scores 1") {
        std::mt19937_64 gen(3);
        const Mat f = oracle::random_matrix(gen, 6, 9);
        CHECK(two_way_identification(f, f) == 1.0);
    }
    SUBCASE("n = 2 tie case gives 0.75") {
        Mat gt(2, 4), g(2, 4);
        gt << 1, -1, 0, 0, 0, 0, 1, -1;
        g << 1, -1, 1, -1, 0, 0, 1, -1;
        CHECK(two_way_identification(g, gt) == 0.75);
        CHECK(oracle::two_way(g, gt) == 0.75);
    }
    SUBCASE("seeded banks match exhaustive ordered-pair enumeration") {
        std::mt19937_64 gen(4);
        for (int n : {3, 3, 3, 5, 8}) {
            const Mat g = oracle::random_matrix(gen, n, 6), gt = oracle::random_matrix(gen, n, 6);
            CHECK(std::abs(two_way_identification(g, gt) - oracle::two_way(g, gt)) < 1e-12);
        }
    }
    SUBCASE("invariant under positive affine row transforms and common permutations") {
        std::mt19937_64 gen(5);
        std::uniform_real_distribution<double> ud(0.2, 5.0);
        for (int t = 0; t < 10; ++t) {
            const Mat g = oracle::random_matrix(gen, 7, 5), gt = oracle::random_matrix(gen, 7, 5);
            Mat g2 = g;
            for (Eigen::Index i = 0; i < 7; ++i) g2.row(i) = (g2.row(i).array() * ud(gen) + (ud(gen) - 2.0)).matrix();
            CHECK(two_way_identification(g2, gt) == doctest::Approx(two_way_identification(g, gt)).epsilon(1e-12));
            std::vector<int> p{3, 1, 6, 0, 2, 5, 4};
            CHECK(two_way_identification(permute_rows(g, p), permute_rows(gt, p)) ==
                  doctest::Approx(two_way_identification(g, gt)).epsilon(1e-12));
            const double v = two_way_identification(g, gt);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    SUBCASE("constant row is a data error") {
        Mat g = Mat::Ones(3, 4);
        CHECK_THROWS_AS(two_way_identification(g, Mat::Identity(3, 4)), DataError);
    }
}

TEST_CASE("correlation_distance") {
    std::mt19937_64 gen(6);
    const Mat gt = oracle::random_matrix(gen, 5, 8);
    CHECK(correlation_distance(gt, gt) == doctest::Approx(0.0).epsilon(1e-15));
    Mat centred = gt;
    for (Eigen::Index i = 0; i < 5; ++i) centred.row(i).array() -= centred.row(i).mean();
    CHECK(correlation_distance(Mat(-centred), centred) == doctest::Approx(2.0).epsilon(1e-14));
    const Mat g = oracle::random_matrix(gen, 5, 8);
    CHECK(std::abs(correlation_distance(g, gt) - oracle::correlation_distance(g, gt)) < 1e-12);
    std::vector<int> p{4, 2, 0, 1, 3};
    CHECK(correlation_distance(permute_rows(g, p), permute_rows(gt, p)) == doctest::Approx(correlation_distance(g, gt)).epsilon(1e-12));
    CHECK_THROWS_AS(correlation_distance(Mat::Ones(2, 3), Mat::Identity(2, 3)), DataError);
}

TEST_CASE("aggregate is permutation invariant bit for bit") {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd;
    std::vector<double> v(10);
    for (double& x : v) x = nd(gen);
    const Aggregate a = aggregate(v);
    CHECK(a.mean == doctest::Approx(oracle::mean(v)).epsilon(1e-14));
    CHECK(a.std == doctest::Approx(oracle::sample_std(v)).epsilon(1e-12));
    for (int t = 0; t < 20; ++t) {
        std::shuffle(v.begin(), v.end(), gen);
        const Aggregate b = aggregate(v);
        CHECK(b.mean == a.mean);
        CHECK(b.std == a.std);
    }
    const std::vector<double> one{0.8660};
    CHECK(!aggregate(one).std_defined());
    CHECK(format_percent(aggregate(one)).find("n/a") != std::string::npos);
    const std::vector<double> two{0.85, 0.87};
    CHECK(format_percent(aggregate(two)) == "86.00% ± 1.41%");
    CHECK(format_plain(Aggregate{0.409, 0.005, 2}) == "0.409 ± 0.005");
}

TEST_CASE("score_reconstructions") {
    const auto gt = corpus(8, 4, 16, 16);
    std::vector<std::vector<Image>> gens{corpus(9, 4, 16, 16), corpus(10, 4, 16, 16)};
    FeatureBank bank;
    bank.n_images = 4;
    bank.n_streams = 3;
    bank.feature_dim = 5;
    bank.stream_names = {"seed0", "gt", "seed1"};
    bank.image_ids = {"a", "b", "c", "d"};
    std::mt19937_64 gen(11);
    std::normal_distribution<float> nd;
    bank.features.resize(4 * 3 * 5);
    for (auto& f : bank.features) f = nd(gen);
    ReconInputs in{gens, gt, {{"clip", bank}}};
    const MetricReport r = score_reconstructions(in, SsimConfig{}, 32);

    auto find = [&](const std::string& n) -> const MetricSummary& {
        for (const auto& m : r.metrics)
            if (m.name == n) return m;
        FAIL("missing metric " << n);
        return r.metrics.front();
    };
    const auto& ss = find("ssim");
    REQUIRE(ss.per_seed.size() == 2);
    for (std::size_t s = 0; s < 2; ++s) {
        double direct = 0.0;
        for (std::size_t i = 0; i < 4; ++i) direct += oracle::dense_ssim(gens[s][i], gt[i]);
        CHECK(std::abs(ss.per_seed[s] - direct / 4.0) < 1e-10);
    }
    CHECK(ss.per_pair.size() == 4);
    CHECK(ss.mean == doctest::Approx(oracle::mean(ss.per_seed)));
    CHECK(ss.std == doctest::Approx(oracle::sample_std(ss.per_seed)));

    const auto& pc = find("pixcorr");
    CHECK(std::abs(pc.per_pair[2] - oracle::pearson(flat_resized(gens[0][2], 32), flat_resized(gt[2], 32))) < 1e-12);

    auto stream = [&](std::size_t s) {
        Mat m(4, 5);
        for (Eigen::Index i = 0; i < 4; ++i)
            for (Eigen::Index k = 0; k < 5; ++k) m(i, k) = bank.row(static_cast<std::size_t>(i), s)[static_cast<std::size_t>(k)];
        return m;
    };
    const auto& tw = find("clip_2way");
    CHECK(tw.higher_is_better);
    REQUIRE(tw.per_seed.size() == 2);
    CHECK(std::abs(tw.per_seed[0] - oracle::two_way(stream(0), stream(1))) < 1e-12);
    CHECK(std::abs(tw.per_seed[1] - oracle::two_way(stream(2), stream(1))) < 1e-12);
    const auto& cd = find("clip_corr_dist");
    CHECK(!cd.higher_is_better);
    CHECK(std::abs(cd.per_seed[1] - oracle::correlation_distance(stream(2), stream(1))) < 1e-12);

    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["pixcorr_side"] == 32);
    CHECK(j["ssim"]["window"] == 11);
    CHECK(r.to_csv().find("clip_corr_dist") != std::string::npos);

    in.generated[1].pop_back();
    CHECK_THROWS_AS(score_reconstructions(in), ParameterError);
}

TEST_CASE("single-seed metric reports leave the spread undefined") {
    const auto gt = corpus(12, 3, 16, 16);
    const std::vector<std::vector<Image>> gens{corpus(13, 3, 16, 16)};
    const MetricReport r = score_reconstructions(ReconInputs{gens, gt, {}});
    const auto j = nlohmann::json::parse(r.to_json());
    for (const auto& m : j["metrics"]) CHECK(m["std"].is_null());
    CHECK(r.to_csv().find(",,1\n") != std::string::npos);
}
