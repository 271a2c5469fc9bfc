#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "adaseg/metrics.hpp"
#include "test_util.hpp"

using namespace adaseg;
namespace fs = std::filesystem;

TEST_CASE("accumulate counts only valid ground truth") {
    ConfusionMatrix cm(3);
    LabelMask gt(2, 2, 1);
    LabelMask pred = gt;
    accumulate(cm, pred, gt);
    CHECK(cm.at(1, 1) == 4);
    CHECK(cm.total() == 4);

    ConfusionMatrix cm2(3);
    LabelMask ignored(2, 2, kIgnoreLabel);
    accumulate(cm2, pred, ignored);
    CHECK(cm2.total() == 0);

    ConfusionMatrix cm3(2);
    LabelMask gt3(2, 1);
    gt3.at(0, 0) = 0;
    gt3.at(1, 0) = 1;
    LabelMask pred3(2, 1, 1);
    accumulate(cm3, pred3, gt3);
    CHECK(cm3.at(0, 1) == 1);
    CHECK(cm3.at(1, 1) == 1);
}

TEST_CASE("accumulate rejects shape mismatches") {
    ConfusionMatrix cm(2);
    LabelMask a(2, 2, 0), b(2, 3, 0);
    CHECK_THROWS_AS(accumulate(cm, a, b), std::invalid_argument);
}

TEST_CASE("miou basics") {
    ConfusionMatrix perfect(3);
    perfect.at(0, 0) = 10;
    perfect.at(1, 1) = 5;
    perfect.at(2, 2) = 1;
    IouReport rep = miou(perfect);
    CHECK(rep.mean == doctest::Approx(1.0));
    for (int c = 0; c < 3; ++c) {
        CHECK(rep.present[c]);
        CHECK(rep.per_class[c] == doctest::Approx(1.0));
    }

    ConfusionMatrix complement(2);
    complement.at(0, 1) = 7;
    complement.at(1, 0) = 3;
    CHECK(miou(complement).mean == doctest::Approx(0.0));

    ConfusionMatrix hand(2);
    hand.at(0, 0) = 2;
    hand.at(0, 1) = 1;
    hand.at(1, 0) = 1;
    hand.at(1, 1) = 2;
    IouReport h = miou(hand);
    // row_0 = col_0 = 3, diag = 2 -> IoU = 2/4
    CHECK(h.per_class[0] == doctest::Approx(0.5));
    CHECK(h.per_class[1] == doctest::Approx(0.5));
    CHECK(h.mean == doctest::Approx(0.5));
}

TEST_CASE("absent classes are excluded from the mean") {
    ConfusionMatrix cm(4);
    cm.at(0, 0) = 4;
    cm.at(1, 0) = 4;  // class 1 never predicted, gt present -> IoU 0, still present
    IouReport rep = miou(cm);
    CHECK(rep.present[0]);
    CHECK(rep.present[1]);
    CHECK_FALSE(rep.present[2]);
    CHECK_FALSE(rep.present[3]);
    CHECK(rep.mean == doctest::Approx((0.5 + 0.0) / 2.0));

    ConfusionMatrix empty(2);
    CHECK_THROWS_AS(miou(empty), std::runtime_error);
}

TEST_CASE("miou is symmetric under swapping prediction and ground truth") {
    Rng rng(5);
    ConfusionMatrix cm(3), cmT(3);
    for (int g = 0; g < 3; ++g)
        for (int p = 0; p < 3; ++p) cm.at(g, p) = rng.below(20);
    for (int g = 0; g < 3; ++g)
        for (int p = 0; p < 3; ++p) cmT.at(p, g) = cm.at(g, p);
    IouReport a = miou(cm);
    IouReport b = miou(cmT);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-12));
    for (int c = 0; c < 3; ++c) CHECK(a.per_class[c] == doctest::Approx(b.per_class[c]));
}

TEST_CASE("accumulation order does not change the matrix") {
    Rng rng(7);
    LabelMask gt1 = testutil::random_mask(3, 4, 4, rng, 0.1);
    LabelMask pr1 = testutil::random_mask(3, 4, 4, rng);
    LabelMask gt2 = testutil::random_mask(3, 4, 4, rng, 0.1);
    LabelMask pr2 = testutil::random_mask(3, 4, 4, rng);
    ConfusionMatrix a(3), b(3);
    accumulate(a, pr1, gt1);
    accumulate(a, pr2, gt2);
    accumulate(b, pr2, gt2);
    accumulate(b, pr1, gt1);
    CHECK(a.counts == b.counts);
}

TEST_CASE("iou csv layout") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 2;
    cm.at(0, 1) = 2;
    cm.at(1, 1) = 1;
    fs::path path = fs::temp_directory_path() / "adaseg_test_iou.csv";
    write_iou_csv(path, miou(cm));
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    std::string text = ss.str();
    CHECK(text.find("class,iou\n") == 0);
    CHECK(text.find("2,absent") != std::string::npos);
    CHECK(text.find("miou,") != std::string::npos);
    fs::remove(path);
}
