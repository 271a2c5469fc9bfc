#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adaseg/spatial.hpp"
#include "test_util.hpp"

using namespace adaseg;

namespace {

SpatialTransform rand_transform(Rng& rng) {
    return make_transform(rng.uniform(-180.0, 180.0), rng.uniform(-0.5, 0.5),
                          rng.uniform(-0.5, 0.5));
}

}  // namespace

TEST_CASE("identity transform is a fixed point for all apply ops") {
    Rng rng(3);
    Image img = testutil::random_image(4, 5, rng);
    auto [img_t, vi] = apply_to_image(img, SpatialTransform::identity());
    CHECK(img_t.data == img.data);
    CHECK(vi.count() == 20);

    LabelMask mask = testutil::random_mask(3, 4, 5, rng);
    auto [mask_t, vm] = apply_to_mask(mask, SpatialTransform::identity());
    CHECK(mask_t.data == mask.data);
    CHECK(vm.count() == 20);

    ProbMap p = testutil::random_probmap(3, 4, 5, rng);
    auto [p_t, vp] = apply_to_probmap(p, SpatialTransform::identity());
    CHECK(p_t.data == p.data);
    CHECK(vp.count() == 20);
}

TEST_CASE("half-width right shift on 2x2 moves column 0 into column 1") {
    Image img(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int c = 0; c < 3; ++c) img.at(i, j, c) = static_cast<float>(i * 2 + j + c);
    // keep values in [0,1]
    for (float& v : img.data) v /= 8.0f;

    auto [out, valid] = apply_to_image(img, make_transform(0.0, 0.5, 0.0));
    for (int i = 0; i < 2; ++i) {
        CHECK_FALSE(valid.at(i, 0));
        for (int c = 0; c < 3; ++c) CHECK(out.at(i, 0, c) == 0.0f);
        CHECK(valid.at(i, 1));
        for (int c = 0; c < 3; ++c) CHECK(out.at(i, 1, c) == img.at(i, 0, c));
    }
}

TEST_CASE("90 degree rotation permutes a 2x2 grid by a quarter turn") {
    // Hand oracle: inverse-map each output center through the 90deg rotation
    // about (1,1) -> output [[src(0,1), src(1,1)], [src(0,0), src(1,0)]].
    LabelMask mask(2, 2);
    mask.at(0, 0) = 0;
    mask.at(0, 1) = 1;
    mask.at(1, 0) = 2;
    mask.at(1, 1) = 3;
    auto [out, valid] = apply_to_mask(mask, make_transform(90.0, 0.0, 0.0));
    CHECK(valid.count() == 4);
    CHECK(out.at(0, 0) == 1);
    CHECK(out.at(0, 1) == 3);
    CHECK(out.at(1, 0) == 0);
    CHECK(out.at(1, 1) == 2);

    Image img(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int c = 0; c < 3; ++c) img.at(i, j, c) = (i * 2 + j) / 4.0f;
    auto [img_t, vi] = apply_to_image(img, make_transform(90.0, 0.0, 0.0),
                                      InterpolationKind::nearest);
    CHECK(vi.count() == 4);
    CHECK(img_t.at(0, 0, 0) == img.at(0, 1, 0));
    CHECK(img_t.at(0, 1, 0) == img.at(1, 1, 0));
    CHECK(img_t.at(1, 0, 0) == img.at(0, 0, 0));
    CHECK(img_t.at(1, 1, 0) == img.at(1, 0, 0));
}

TEST_CASE("mask transforms propagate IGNORE and invalidate off-canvas pixels") {
    LabelMask mask(2, 2, 7);
    mask.at(0, 0) = kIgnoreLabel;
    auto [out, valid] = apply_to_mask(mask, make_transform(0.0, 0.5, 0.0));
    CHECK_FALSE(valid.at(0, 0));
    CHECK(out.at(0, 0) == kIgnoreLabel);
    CHECK(out.at(0, 1) == kIgnoreLabel);  // source was IGNORE
    CHECK(valid.at(0, 1));                // but geometrically on canvas
    CHECK(out.at(1, 1) == 7);
}

TEST_CASE("probmap transform keeps exact simplex sums on valid pixels") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        ProbMap p = testutil::random_probmap(4, 6, 6, rng);
        SpatialTransform t = rand_transform(rng);
        auto [pt, valid] = apply_to_probmap(p, t);
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) {
                float s = 0.0f;
                for (int c = 0; c < 4; ++c) s += pt.at(c, i, j);
                if (valid.at(i, j)) {
                    CHECK(std::abs(s - 1.0f) <= 1e-5f);
                } else {
                    CHECK(s == 0.0f);
                }
            }
        }
    }
}

TEST_CASE("argmax commutes with the probmap/mask transforms") {
    Rng rng(12);
    for (int rep = 0; rep < 200; ++rep) {
        ProbMap p = testutil::random_probmap(3, 5, 7, rng);
        SpatialTransform t = rand_transform(rng);
        auto [pt, valid] = apply_to_probmap(p, t);
        auto [mt, valid2] = apply_to_mask(argmax(p), t);
        CHECK(valid.data == valid2.data);
        LabelMask am = argmax(pt);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 7; ++j)
                if (valid.at(i, j)) CHECK(am.at(i, j) == mt.at(i, j));
    }
}

TEST_CASE("all apply ops agree with validity_of") {
    Rng rng(13);
    for (int rep = 0; rep < 25; ++rep) {
        SpatialTransform t = rand_transform(rng);
        ValidityMask ref = validity_of(t, 6, 4);
        Image img = testutil::random_image(6, 4, rng);
        CHECK(apply_to_image(img, t).second.data == ref.data);
        LabelMask mask = testutil::random_mask(3, 6, 4, rng);
        CHECK(apply_to_mask(mask, t).second.data == ref.data);
        ProbMap p = testutil::random_probmap(3, 6, 4, rng);
        CHECK(apply_to_probmap(p, t).second.data == ref.data);
    }
}

TEST_CASE("validity_of known cases") {
    CHECK(validity_of(SpatialTransform::identity(), 3, 3).count() == 9);
    CHECK(validity_of(make_transform(0.0, 1.0, 0.0), 3, 3).count() == 0);

    ValidityMask v = validity_of(make_transform(0.0, 0.5, 0.0), 4, 4);
    for (int i = 0; i < 4; ++i) {
        CHECK_FALSE(v.at(i, 0));
        CHECK_FALSE(v.at(i, 1));
        CHECK(v.at(i, 2));
        CHECK(v.at(i, 3));
    }
}

TEST_CASE("invert on simple transforms") {
    SpatialTransform id = invert(SpatialTransform::identity());
    CHECK(id.rotation_deg == 0.0);
    CHECK(id.translate_dx == 0.0);
    CHECK(id.translate_dy == 0.0);

    SpatialTransform inv = invert(make_transform(0.0, 0.25, 0.0));
    CHECK(inv.rotation_deg == 0.0);
    CHECK(inv.translate_dx == doctest::Approx(-0.25));
    CHECK(inv.translate_dy == doctest::Approx(0.0));
}

TEST_CASE("invert composes to the identity coordinate map") {
    // CoordMap(t) realizes the inverse map of t, so CoordMap(invert(t)) is
    // the forward map; chaining the two must return every point unchanged.
    Rng rng(21);
    for (int rep = 0; rep < 100; ++rep) {
        SpatialTransform t = rand_transform(rng);
        const int n = 8;
        CoordMap fwd(invert(t), n, n);
        CoordMap bwd(t, n, n);
        for (int k = 0; k < 16; ++k) {
            double xo = rng.uniform(0.0, n), yo = rng.uniform(0.0, n);
            double x1, y1, x2, y2;
            fwd.source_point(xo, yo, x1, y1);
            bwd.source_point(x1, y1, x2, y2);
            CHECK(std::abs(x2 - xo) < 1e-9);
            CHECK(std::abs(y2 - yo) < 1e-9);
        }
    }
}

TEST_CASE("integer translations round-trip exactly on the valid intersection") {
    Rng rng(31);
    const int H = 8, W = 8;
    ProbMap p = testutil::random_probmap(3, H, W, rng);
    for (int k : {1, 2, 3}) {
        SpatialTransform t = make_transform(0.0, static_cast<double>(k) / W, 0.0);
        SpatialTransform ti = invert(t);
        auto [fwd, v1] = apply_to_probmap(p, t);
        auto [back, v2] = apply_to_probmap(fwd, ti);
        for (int i = 0; i < H; ++i) {
            for (int j = 0; j < W; ++j) {
                if (v1.at(i, j) && v2.at(i, j)) {
                    for (int c = 0; c < 3; ++c) CHECK(back.at(c, i, j) == p.at(c, i, j));
                }
            }
        }
    }
}

TEST_CASE("photometric jitter") {
    Rng rng(41);
    Image img = testutil::random_image(3, 3, rng);
    Image same = photometric_jitter(img, 0.0, 1.0);
    CHECK(same.data == img.data);

    Image half(2, 2, 0.5f);
    Image brighter = photometric_jitter(half, 0.2, 1.0);
    for (float v : brighter.data) CHECK(v == doctest::Approx(0.7f));

    CHECK_THROWS_AS(photometric_jitter(img, 0.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(photometric_jitter(img, 0.9, 1.0), std::invalid_argument);
}

TEST_CASE("make_transform validates and normalizes") {
    CHECK_THROWS_AS(make_transform(0.0, 1.5, 0.0), std::invalid_argument);
    SpatialTransform t = make_transform(400.0, 0.0, 0.0);
    CHECK(t.rotation_deg == doctest::Approx(40.0));
    SpatialTransform tn = make_transform(-400.0, 0.0, 0.0);
    CHECK(tn.rotation_deg == doctest::Approx(-40.0));
}
