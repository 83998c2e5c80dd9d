// Light-enhancement contracts: range preservation, monotonicity, brightening,
// identity settings, frozen hand values, and the call counter.
#include <catch2/catch_amalgamated.hpp>

#include <dlkd/enhance.hpp>
#include <dlkd/rng.hpp>
#include <dlkd/video.hpp>

#include <cmath>

using namespace dlkd;

namespace {

VideoClip make_clip(const std::vector<float>& values) {
    VideoClip clip;
    clip.dims = ClipDims{1, 1, 1, values.size()};
    clip.data = values;
    clip.label = 3;
    clip.id = "probe";
    return clip;
}

float enhance_one(float x, const EnhanceParams& p) {
    return enhance(make_clip({x}), p).data[0];
}

} // namespace

TEST_CASE("gamma enhancement frozen hand values", "[enhance]") {
    EnhanceParams p;
    p.method = EnhanceMethod::Gamma;
    p.gamma = 2.0;
    // 0.25^(1/2) = 0.5 exactly.
    REQUIRE(enhance_one(0.25f, p) == Catch::Approx(0.5).margin(1e-9));
    p.gamma = 2.2;
    REQUIRE(enhance_one(0.0f, p) == 0.0f);
    REQUIRE(enhance_one(1.0f, p) == 1.0f);
}

TEST_CASE("curve enhancement frozen hand values", "[enhance]") {
    // One iteration with alpha=1: 0.5 -> 0.5 + 0.5*0.5 = 0.75.
    // Two iterations: 0.75 + 0.75*0.25 = 0.9375.
    EnhanceParams p;
    p.method = EnhanceMethod::Curve;
    p.alpha = 1.0;
    p.iterations = 1;
    REQUIRE(enhance_one(0.5f, p) == Catch::Approx(0.75).margin(1e-9));
    p.iterations = 2;
    REQUIRE(enhance_one(0.5f, p) == Catch::Approx(0.9375).margin(1e-9));
}

TEST_CASE("enhancement preserves the unit range on 1000 random values", "[enhance]") {
    Rng rng(81);
    for (int trial = 0; trial < 1000; ++trial) {
        float x = static_cast<float>(rng.uniform());
        EnhanceParams g;
        g.method = EnhanceMethod::Gamma;
        g.gamma = rng.uniform(0.2, 6.0);
        float yg = enhance_one(x, g);
        REQUIRE(yg >= 0.0f);
        REQUIRE(yg <= 1.0f);

        EnhanceParams c;
        c.method = EnhanceMethod::Curve;
        c.alpha = rng.uniform(-1.0, 1.0);
        c.iterations = 1 + rng.uniform_index(5);
        float yc = enhance_one(x, c);
        REQUIRE(yc >= 0.0f);
        REQUIRE(yc <= 1.0f);
    }
}

TEST_CASE("both maps are monotone nondecreasing on 1000 random pairs", "[enhance]") {
    Rng rng(91);
    for (int trial = 0; trial < 1000; ++trial) {
        float a = static_cast<float>(rng.uniform());
        float b = static_cast<float>(rng.uniform());
        if (a > b) std::swap(a, b);

        EnhanceParams g;
        g.method = EnhanceMethod::Gamma;
        g.gamma = rng.uniform(0.2, 6.0);
        REQUIRE(enhance_one(a, g) <= enhance_one(b, g));

        EnhanceParams c;
        c.method = EnhanceMethod::Curve;
        c.alpha = rng.uniform(0.0, 1.0); // monotone regime
        c.iterations = 1 + rng.uniform_index(5);
        REQUIRE(enhance_one(a, c) <= enhance_one(b, c));
    }
}

TEST_CASE("gamma > 1 and alpha > 0 brighten on 1000 random values", "[enhance]") {
    Rng rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        float x = static_cast<float>(rng.uniform());

        EnhanceParams g;
        g.method = EnhanceMethod::Gamma;
        g.gamma = rng.uniform(1.0, 6.0);
        REQUIRE(enhance_one(x, g) >= x - 1e-7f);

        EnhanceParams c;
        c.method = EnhanceMethod::Curve;
        c.alpha = rng.uniform(0.0, 1.0);
        c.iterations = 1;
        REQUIRE(enhance_one(x, c) >= x - 1e-7f);
    }
}

TEST_CASE("identity settings leave values unchanged", "[enhance]") {
    Rng rng(111);
    for (int trial = 0; trial < 1000; ++trial) {
        float x = static_cast<float>(rng.uniform());

        EnhanceParams g;
        g.method = EnhanceMethod::Gamma;
        g.gamma = 1.0;
        REQUIRE(enhance_one(x, g) == Catch::Approx(x).margin(1e-7));

        EnhanceParams c;
        c.method = EnhanceMethod::Curve;
        c.alpha = 0.0;
        c.iterations = 3;
        REQUIRE(enhance_one(x, c) == x); // x + 0*x*(1-x) is exact
    }
}

TEST_CASE("enhancement never changes shape, label, or id", "[enhance]") {
    VideoClip clip = make_clip({0.1f, 0.5f, 0.9f, 0.0f, 1.0f});
    EnhanceParams p;
    VideoClip out = enhance(clip, p);
    REQUIRE(out.dims == clip.dims);
    REQUIRE(out.label == clip.label);
    REQUIRE(out.id == clip.id);
    REQUIRE(out.data.size() == clip.data.size());
}

TEST_CASE("out-of-range input is rejected not clipped", "[enhance]") {
    EnhanceParams p;
    REQUIRE_THROWS_AS(enhance(make_clip({1.5f}), p), InputError);
    REQUIRE_THROWS_AS(enhance(make_clip({-0.1f}), p), InputError);
    p.method = EnhanceMethod::Curve;
    REQUIRE_THROWS_AS(enhance(make_clip({2.0f}), p), InputError);
}

TEST_CASE("invalid parameters are rejected", "[enhance]") {
    EnhanceParams p;
    p.gamma = 0.0;
    REQUIRE_THROWS_AS(enhance(make_clip({0.5f}), p), ParamError);
    p.gamma = 2.2;
    p.alpha = 1.5;
    REQUIRE_THROWS_AS(enhance(make_clip({0.5f}), p), ParamError);
    p.alpha = 0.6;
    p.iterations = 0;
    REQUIRE_THROWS_AS(enhance(make_clip({0.5f}), p), ParamError);
}

TEST_CASE("the call counter counts each public call exactly once", "[enhance]") {
    VideoClip clip = make_clip({0.2f, 0.4f});
    EnhanceParams p;
    reset_enhance_call_count();
    REQUIRE(enhance_call_count().load() == 0);
    (void)enhance(clip, p);
    REQUIRE(enhance_call_count().load() == 1);
    (void)gic_enhance(clip, p);
    (void)dce_curve_enhance(clip, p);
    REQUIRE(enhance_call_count().load() == 3);
    reset_enhance_call_count();
    REQUIRE(enhance_call_count().load() == 0);
}

TEST_CASE("dispatch selects the configured method", "[enhance]") {
    VideoClip clip = make_clip({0.25f});
    EnhanceParams p;
    p.method = EnhanceMethod::Gamma;
    p.gamma = 2.0;
    REQUIRE(enhance(clip, p).data[0] == gic_enhance(clip, p).data[0]);
    p.method = EnhanceMethod::Curve;
    REQUIRE(enhance(clip, p).data[0] == dce_curve_enhance(clip, p).data[0]);
    REQUIRE(parse_enhance_method("gamma") == EnhanceMethod::Gamma);
    REQUIRE(parse_enhance_method("curve") == EnhanceMethod::Curve);
    REQUIRE_THROWS_AS(parse_enhance_method("zap"), ConfigError);
}
