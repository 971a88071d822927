#include <doctest.h>

#include <cstring>
#include <random>

#include "eegret/errors.hpp"
#include "eegret/feature_provider.hpp"
#include "eegret/synthetic.hpp"
#include "oracles.hpp"

using namespace eegret;

namespace {

LatentTable make_latents(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    LatentTable t;
    t.latent_dim = dim;
    for (std::size_t i = 0; i < n; ++i) {
        t.ids.push_back("img" + std::to_string(i));
        double norm = 0.0;
        std::vector<double> v(dim);
        for (double& x : v) norm += (x = nd(gen)) * x;
        for (double x : v) t.values.push_back(x / std::sqrt(norm));
    }
    return t;
}

ProviderSpec synth_spec(std::vector<std::string> streams, std::size_t dim = 32, std::uint64_t seed = 4) {
    ProviderSpec s;
    s.kind = ProviderKind::synthetic;
    s.seed = seed;
    s.streams = std::move(streams);
    s.feature_dim = dim;
    return s;
}

FeatureBank random_bank(std::uint64_t seed, std::size_t n, std::vector<std::string> streams, std::size_t dim) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<float> nd;
    FeatureBank b;
    b.n_images = n;
    b.n_streams = streams.size();
    b.feature_dim = dim;
    b.stream_names = std::move(streams);
    for (std::size_t i = 0; i < n; ++i) b.image_ids.push_back("id" + std::to_string(i));
    b.provider_tag = "random";
    b.features.resize(n * b.n_streams * dim);
    for (auto& v : b.features) v = nd(gen);
    return b;
}

bool rows_equal(const FeatureBank& a, std::size_t ia, std::size_t sa, const FeatureBank& b, std::size_t ib,
                std::size_t sb) {
    const auto x = a.row(ia, sa), y = b.row(ib, sb);
    return std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("synthetic provider is deterministic") {
    const LatentTable L = make_latents(10, 8, 1);
    const auto spec = synth_spec(default_stream_names(std::vector<int>{1, 3, 15}));
    const FeatureBank a = provide_features(spec, L.ids, &L);
    const FeatureBank b = provide_features(spec, L.ids, &L);
    CHECK(a.features == b.features);
    CHECK(a.n_images == 10);
    CHECK(a.n_streams == 4);
    CHECK(a.stream_names.back() == kEvnetStream);
    CHECK(provide_features(synth_spec(spec.streams, 32, 5), L.ids, &L).features != a.features);
}

TEST_CASE("synthetic rows are a function of (seed, id, stream) alone") {
    const LatentTable L = make_latents(12, 8, 2);
    const FeatureBank full = provide_features(synth_spec({"blur_k1", "blur_k3", "evnet"}), L.ids, &L);
    const std::vector<std::string> query{"img7", "img2", "img7", "img11"};
    const FeatureBank part = provide_features(synth_spec({"evnet", "blur_k1"}), query, &L);
    CHECK(part.image_ids == query);
    const std::size_t src[] = {7, 2, 7, 11};
    for (std::size_t i = 0; i < query.size(); ++i) {
        CHECK(rows_equal(part, i, 0, full, src[i], 2));
        CHECK(rows_equal(part, i, 1, full, src[i], 0));
    }
}

TEST_CASE("synthetic features track the class latent through a unit-norm projection") {
    const LatentTable L = make_latents(6, 8, 3);
    auto spec = synth_spec({"blur_k1"}, 256);
    spec.image_jitter = 0.0;
    const FeatureBank b = provide_features(spec, L.ids, &L);
    // Projection columns are unit norm, so ||P l||^2 = l' P'P l with diag(P'P) = 1;
    // for a tall Gaussian P the off-diagonals are small, giving norms near 1.
    for (std::size_t i = 0; i < 6; ++i) {
        double n2 = 0.0;
        for (float v : b.row(i, 0)) n2 += static_cast<double>(v) * v;
        CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(0.25));
    }
    // Linearity in the latent: a latent and its negation map to negated features.
    LatentTable neg = L;
    for (double& v : neg.values) v = -v;
    const FeatureBank nb = provide_features(spec, neg.ids, &neg);
    for (std::size_t k = 0; k < b.features.size(); ++k) CHECK(nb.features[k] == doctest::Approx(-b.features[k]).epsilon(1e-6));
}

TEST_CASE("synthetic streams are correlated but distinct") {
    const LatentTable L = make_latents(20, 16, 4);
    const FeatureBank b = provide_features(synth_spec({"blur_k1", "blur_k63"}, 128), L.ids, &L);
    for (std::size_t i = 0; i < 20; ++i) {
        std::vector<double> x(b.row(i, 0).begin(), b.row(i, 0).end()), y(b.row(i, 1).begin(), b.row(i, 1).end());
        const double r = oracle::pearson(x, y);
        CHECK(r > 0.5);
        CHECK(r < 0.9999);
    }
}

TEST_CASE("provider outputs are finite and never all-zero") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const LatentTable L = make_latents(15, 4, seed);
        const FeatureBank b = provide_features(synth_spec(default_stream_names(), 64, seed), L.ids, &L);
        CHECK_NOTHROW(b.validate());
    }
}

TEST_CASE("precomputed provider") {
    oracle::TempDir tmp("prov");
    const FeatureBank bank = random_bank(5, 9, {"blur_k1", "blur_k3", "blur_k15"}, 12);
    cache_features(bank, tmp / "cache");
    ProviderSpec spec;
    spec.kind = ProviderKind::precomputed;
    spec.source = tmp / "cache";
    spec.streams = bank.stream_names;
    spec.feature_dim = 12;

    SUBCASE("round-trips a cached bank bit-exactly") {
        const FeatureBank back = provide_features(spec, bank.image_ids);
        CHECK(std::memcmp(back.features.data(), bank.features.data(), bank.features.size() * 4) == 0);
        CHECK(back.stream_names == bank.stream_names);
    }
    SUBCASE("row order follows the query order") {
        const std::vector<std::string> q{"id8", "id0", "id4", "id0"};
        spec.streams = {"blur_k15", "blur_k1"};
        const FeatureBank back = provide_features(spec, q);
        CHECK(back.image_ids == q);
        const std::size_t src[] = {8, 0, 4, 0};
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(rows_equal(back, i, 0, bank, src[i], 2));
            CHECK(rows_equal(back, i, 1, bank, src[i], 0));
        }
    }
    SUBCASE("absent stream is a configuration error") {
        spec.streams = {"evnet"};
        CHECK_THROWS_AS(provide_features(spec, bank.image_ids), ConfigError);
    }
    SUBCASE("missing id is a lookup error") {
        const std::vector<std::string> q{"id1", "nope"};
        CHECK_THROWS_AS(provide_features(spec, q), LookupError);
    }
    SUBCASE("empty stream request is a configuration error") {
        spec.streams.clear();
        CHECK_THROWS_AS(provide_features(spec, bank.image_ids), ConfigError);
    }
}

TEST_CASE("cache_features") {
    oracle::TempDir tmp("cache");
    SUBCASE("write then read equality on seeded random banks") {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const FeatureBank b = random_bank(seed, 5 + seed, {"blur_k1", "evnet"}, 7);
            cache_features(b, tmp / "c");
            const FeatureBank back = load_feature_bank(tmp / "c");
            CHECK(back.features == b.features);
            CHECK(back.image_ids == b.image_ids);
            CHECK(back.provider_tag == b.provider_tag);
        }
    }
    SUBCASE("empty stream list is a configuration error") {
        FeatureBank b;
        b.n_images = 1;
        b.feature_dim = 3;
        b.image_ids = {"x"};
        CHECK_THROWS_AS(cache_features(b, tmp / "empty"), ConfigError);
        CHECK(!std::filesystem::exists(tmp / "empty"));
    }
    SUBCASE("overwrite replaces the whole cache and leaves no temporaries") {
        cache_features(random_bank(1, 6, {"blur_k1", "blur_k3"}, 5), tmp / "c");
        const FeatureBank second = random_bank(2, 3, {"evnet"}, 4);
        cache_features(second, tmp / "c");
        const FeatureBank back = load_feature_bank(tmp / "c");
        CHECK(back.features == second.features);
        CHECK(back.stream_names == second.stream_names);
        std::size_t entries = 0;
        for (const auto& e : std::filesystem::directory_iterator(tmp.path())) {
            (void)e;
            ++entries;
        }
        CHECK(entries == 1);
    }
}

TEST_CASE("select_streams reorders and restricts") {
    const FeatureBank b = random_bank(3, 4, {"a", "b", "c"}, 3);
    const std::vector<std::string> want{"c", "a"};
    const FeatureBank s = select_streams(b, want);
    CHECK(s.stream_names == want);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(rows_equal(s, i, 0, b, i, 2));
        CHECK(rows_equal(s, i, 1, b, i, 0));
    }
    const std::vector<std::string> bad{"z"};
    CHECK_THROWS_AS(select_streams(b, bad), ConfigError);
}

TEST_CASE("generate_synthetic bank equals the synthetic provider over its latents") {
    SyntheticSpec s;
    s.class_count = 8;
    s.samples_per_class = 1;
    s.n_channels = 2;
    s.n_timepoints = 3;
    s.feature_dim = 16;
    s.streams = {"blur_k1", "evnet"};
    const auto d = generate_synthetic(s);
    const FeatureBank again = provide_features(synthetic_provider_spec(s), d.bank.image_ids, &d.latents);
    CHECK(again.features == d.bank.features);
}

TEST_CASE("latent table round trip and lookup") {
    oracle::TempDir tmp("lat");
    const LatentTable L = make_latents(5, 3, 9);
    write_latents(tmp / "l", L);
    const LatentTable back = load_latents(tmp / "l");
    CHECK(back.ids == L.ids);
    for (std::size_t i = 0; i < L.values.size(); ++i) CHECK(back.values[i] == doctest::Approx(L.values[i]).epsilon(1e-7));
    CHECK(back.index_of("img3") == 3);
    CHECK_THROWS_AS(back.index_of("zzz"), LookupError);
    CHECK(parse_provider_kind(to_string(ProviderKind::precomputed)) == ProviderKind::precomputed);
    CHECK_THROWS_AS(parse_provider_kind("clip"), ConfigError);
}
