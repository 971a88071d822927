#include <doctest.h>

#include <random>

#include "eegret/blur.hpp"
#include "eegret/errors.hpp"
#include "eegret/png_io.hpp"
#include "eegret/rsvp.hpp"
#include "oracles.hpp"

using namespace eegret;

namespace {

double max_abs_diff(const Image& a, const Image& b) {
    REQUIRE(a.pixels.size() == b.pixels.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) m = std::max(m, std::abs(a.pixels[i] - b.pixels[i]));
    return m;
}

double pixel_sum(const Image& img) {
    double s = 0.0;
    for (double v : img.pixels) s += v;
    return s;
}

Image impulse(int size, int y, int x, double value = 1.0) {
    Image img(size, size, 0.0);
    for (int c = 0; c < 3; ++c) img.at(y, x, c) = value;
    return img;
}

}  // namespace

TEST_CASE("blur_sigma follows the kernel-size rule") {
    CHECK(blur_sigma(3) == doctest::Approx(0.8));
    CHECK(blur_sigma(15) == doctest::Approx(0.3 * 6 + 0.8));
    CHECK(blur_sigma(63) == doctest::Approx(0.3 * 30 + 0.8));
    const auto g = gaussian_kernel_1d(15);
    const auto o = oracle::gaussian_1d(15);
    REQUIRE(g.size() == 15);
    for (std::size_t i = 0; i < 15; ++i) CHECK(g[i] == doctest::Approx(o[i]).epsilon(1e-14));
}

TEST_CASE("gaussian_blur: k = 1 is the identity") {
    std::mt19937_64 gen(1);
    const Image img = oracle::random_image(gen, 9, 13);
    CHECK(gaussian_blur(img, 1).pixels == img.pixels);
}

TEST_CASE("gaussian_blur: constant images are fixed points for every default k") {
    const Image img(20, 17, 0.37);
    for (int k : BlurSpec{}.kernel_sizes) CHECK(max_abs_diff(gaussian_blur(img, k), img) < 1e-12);
}

TEST_CASE("gaussian_blur: centred impulse at k = 15 reproduces the outer-product kernel") {
    const Image img = impulse(31, 15, 15);
    const Image out = gaussian_blur(img, 15);
    const auto g = oracle::gaussian_1d(15);
    for (int y = 0; y < 31; ++y)
        for (int x = 0; x < 31; ++x) {
            const int dy = y - 15, dx = x - 15;
            const double expected = (std::abs(dy) <= 7 && std::abs(dx) <= 7)
                                        ? g[static_cast<std::size_t>(dy + 7)] * g[static_cast<std::size_t>(dx + 7)]
                                        : 0.0;
            for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == doctest::Approx(expected).epsilon(1e-12));
        }
}

TEST_CASE("gaussian_blur agrees with a dense 2-D reflect-padded convolution") {
    std::mt19937_64 gen(2);
    const Image img = oracle::random_image(gen, 12, 19);
    for (int k : {3, 15, 21, 33}) {
        const Image fast = gaussian_blur_unclamped(img, k);
        const Image dense = oracle::dense_blur(img, k);
        CHECK(max_abs_diff(fast, dense) < 1e-12);
    }
}

TEST_CASE("gaussian_blur: even or non-positive kernel sizes are parameter errors") {
    const Image img(4, 4, 0.5);
    for (int k : {0, 2, 4, -1, 64}) CHECK_THROWS_AS(gaussian_blur(img, k), ParameterError);
    BlurSpec s;
    s.kernel_sizes = {1, 4};
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s.kernel_sizes.clear();
    CHECK_THROWS_AS(s.validate(), ParameterError);
}

TEST_CASE("reflect_index mirrors without repeating the edge sample") {
    for (int n : {1, 2, 5, 8})
        for (int i = -40; i < 40; ++i) CHECK(reflect_index(i, n) == oracle::reflect101(i, n));
    CHECK(reflect_index(-1, 4) == 1);
    CHECK(reflect_index(4, 4) == 2);
}

TEST_CASE("gaussian_blur is linear before clamping") {
    std::mt19937_64 gen(3);
    const Image x = oracle::random_image(gen, 16, 16);
    const Image y = oracle::random_image(gen, 16, 16);
    const double a = 0.7, b = -1.3;
    Image mix(16, 16);
    for (std::size_t i = 0; i < mix.pixels.size(); ++i) mix.pixels[i] = a * x.pixels[i] + b * y.pixels[i];
    for (int k : BlurSpec{}.kernel_sizes) {
        const Image lhs = gaussian_blur_unclamped(mix, k);
        const Image bx = gaussian_blur_unclamped(x, k), by = gaussian_blur_unclamped(y, k);
        Image rhs(16, 16);
        for (std::size_t i = 0; i < rhs.pixels.size(); ++i) rhs.pixels[i] = a * bx.pixels[i] + b * by.pixels[i];
        CHECK(max_abs_diff(lhs, rhs) < 1e-6);
    }
}

TEST_CASE("gaussian_blur output stays in [0, 1]") {
    std::mt19937_64 gen(4);
    const Image img = oracle::random_image(gen, 10, 10);
    for (int k : BlurSpec{}.kernel_sizes) CHECK_NOTHROW(gaussian_blur(img, k).validate());
}

TEST_CASE("build_blur_pyramid") {
    std::mt19937_64 gen(5);
    const Image img = oracle::random_image(gen, 24, 24);
    SUBCASE("default spec: eight levels, first equals input, each blurred independently") {
        const auto levels = build_blur_pyramid(img, BlurSpec{});
        REQUIRE(levels.size() == 8);
        CHECK(levels[0].pixels == img.pixels);
        const auto sizes = BlurSpec{}.kernel_sizes;
        for (std::size_t i = 0; i < 8; ++i) CHECK(levels[i].pixels == gaussian_blur(img, sizes[i]).pixels);
        CHECK(max_abs_diff(levels[2], gaussian_blur(levels[1], 15)) > 1e-6);
    }
    SUBCASE("single k = 1 gives a singleton equal to the input") {
        const auto levels = build_blur_pyramid(img, BlurSpec{{1}});
        REQUIRE(levels.size() == 1);
        CHECK(levels[0].pixels == img.pixels);
    }
    SUBCASE("interior-supported impulses conserve energy at every level") {
        std::mt19937_64 pick(6);
        std::uniform_int_distribution<int> pos(32, 47);
        for (int trial = 0; trial < 4; ++trial) {
            const Image imp = impulse(80, pos(pick), pos(pick), 0.9);
            const double ref = pixel_sum(imp);
            for (const auto& level : build_blur_pyramid(imp, BlurSpec{}))
                CHECK(std::abs(pixel_sum(level) - ref) / ref < 1e-6);
        }
    }
    SUBCASE("pixel variance is non-increasing in k on natural test images") {
        for (std::uint64_t seed = 10; seed < 16; ++seed) {
            std::mt19937_64 g(seed);
            const Image nat = oracle::smooth_image(g, 64, 64);
            const auto levels = build_blur_pyramid(nat, BlurSpec{});
            for (std::size_t i = 1; i < levels.size(); ++i)
                CHECK(oracle::pixel_variance(levels[i]) <= oracle::pixel_variance(levels[i - 1]) + 1e-12);
        }
    }
}

TEST_CASE("resize_bilinear matches the half-pixel oracle") {
    std::mt19937_64 gen(7);
    const Image img = oracle::random_image(gen, 13, 21);
    for (auto [h, w] : {std::pair{7, 9}, std::pair{26, 42}, std::pair{13, 5}, std::pair{1, 1}})
        CHECK(max_abs_diff(resize_bilinear(img, h, w), oracle::bilinear(img, h, w)) < 1e-12);
}

TEST_CASE("compose_rsvp") {
    std::mt19937_64 gen(8);
    const Image img = oracle::random_image(gen, 50, 50);
    RsvpSpec spec;
    SUBCASE("quarter-area square stimulus is 112 x 112 on a 224 canvas") {
        spec.dot_radius = 0;
        const Image out = compose_rsvp(img, spec);
        REQUIRE(out.height == 224);
        REQUIRE(out.width == 224);
        const Image inner = oracle::bilinear(img, 112, 112);
        double worst = 0.0;
        for (int y = 0; y < 112; ++y)
            for (int x = 0; x < 112; ++x)
                for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(out.at(56 + y, 56 + x, c) - inner.at(y, x, c)));
        CHECK(worst < 1e-12);
        CHECK(out.at(55, 100, 0) == 0.5);
        CHECK(out.at(168, 100, 0) == 0.5);
        CHECK(out.at(100, 55, 0) == 0.5);
        CHECK(out.at(100, 168, 0) == 0.5);
    }
    SUBCASE("dot_radius 0 draws no dot and leaves the corner grey") {
        spec.dot_radius = 0;
        spec.background_gray = 0.3;
        const Image out = compose_rsvp(Image(8, 8, 0.9), spec);
        for (int c = 0; c < 3; ++c) {
            CHECK(out.at(0, 0, c) == 0.3);
            CHECK(out.at(112, 112, c) == doctest::Approx(0.9));
        }
    }
    SUBCASE("centre pixel carries the dot colour exactly") {
        for (int r : {1, 4, 9}) {
            spec.dot_radius = r;
            const Image out = compose_rsvp(img, spec);
            for (int c = 0; c < 3; ++c) {
                CHECK(out.at(112, 112, c) == spec.dot_color[static_cast<std::size_t>(c)]);
                CHECK(out.at(111, 111, c) == spec.dot_color[static_cast<std::size_t>(c)]);
            }
        }
    }
    SUBCASE("the dot is centred") {
        spec.dot_radius = 6;
        spec.dot_color = {1.0, 0.0, 0.0};
        const Image out = compose_rsvp(Image(10, 10, 0.0), spec);
        int ymin = 224, ymax = -1, xmin = 224, xmax = -1;
        for (int y = 0; y < 224; ++y)
            for (int x = 0; x < 224; ++x)
                if (out.at(y, x, 0) == 1.0) {
                    ymin = std::min(ymin, y), ymax = std::max(ymax, y);
                    xmin = std::min(xmin, x), xmax = std::max(xmax, x);
                }
        CHECK(ymin + ymax == 223);
        CHECK(xmin + xmax == 223);
    }
    SUBCASE("pure function of image and spec") {
        CHECK(compose_rsvp(img, spec).pixels == compose_rsvp(img, spec).pixels);
    }
    SUBCASE("scaled image larger than the canvas is a parameter error") {
        spec.image_area_fraction = 1.5;
        CHECK_THROWS_AS(compose_rsvp(img, spec), ParameterError);
        spec.image_area_fraction = 1.0;
        CHECK_THROWS_AS(compose_rsvp(Image(10, 40, 0.5), spec), ParameterError);
    }
}

TEST_CASE("Image validation") {
    Image img(3, 3, 0.5);
    CHECK_NOTHROW(img.validate());
    img.pixels[4] = 1.5;
    CHECK_THROWS_AS(img.validate(), DataError);
    img.pixels[4] = std::nan("");
    CHECK_THROWS_AS(img.validate(), DataError);
    CHECK_THROWS_AS(Image(0, 3), ParameterError);
}

TEST_CASE("PNG round trip quantises to /255") {
    oracle::TempDir tmp("png");
    std::mt19937_64 gen(9);
    Image img = oracle::random_image(gen, 11, 7);
    for (double& v : img.pixels) v = std::round(v * 255.0) / 255.0;
    write_png(tmp / "a.png", img);
    const Image back = read_png(tmp / "a.png");
    REQUIRE(back.height == 11);
    REQUIRE(back.width == 7);
    CHECK(max_abs_diff(back, img) < 1e-12);
    CHECK_THROWS(read_png(tmp / "missing.png"));
}
