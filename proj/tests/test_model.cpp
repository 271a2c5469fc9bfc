#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "adaseg/losses.hpp"
#include "adaseg/model.hpp"
#include "test_util.hpp"

using namespace adaseg;
namespace fs = std::filesystem;

TEST_CASE("extract_features layout and constants") {
    Image img(8, 10, 0.3f);
    FeatureMap f = extract_features(img);
    CHECK(f.features == 12);
    CHECK(f.height == 8);
    CHECK(f.width == 10);

    // constant image: blurred channels equal raw channels everywhere
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 10; ++j) {
            for (int c = 0; c < 3; ++c) {
                CHECK(f.at(3 + c, i, j) == doctest::Approx(f.at(c, i, j)).epsilon(1e-12));
                CHECK(f.at(6 + c, i, j) == doctest::Approx(f.at(c, i, j)).epsilon(1e-12));
            }
            CHECK(f.at(11, i, j) == 1.0);
        }
    }
    CHECK(f.at(9, 0, 0) == doctest::Approx(0.5 / 10.0));
    CHECK(f.at(10, 0, 0) == doctest::Approx(0.5 / 8.0));
    CHECK(f.at(9, 0, 9) < 1.0);
    CHECK(f.at(10, 7, 0) < 1.0);
}

TEST_CASE("forward is linear in theta, zero theta gives uniform softmax") {
    Rng rng(3);
    Image img = testutil::random_image(4, 4, rng);
    SegmentationModel m = SegmentationModel::zeros(3);
    LogitMap z = forward(m, img);
    for (double v : z.data) CHECK(v == 0.0);
    ProbMap p = softmax(z);
    for (float v : p.data) CHECK(v == doctest::Approx(1.0f / 3.0f));

    for (float& w : m.theta) w = static_cast<float>(rng.uniform(-1.0, 1.0));
    SegmentationModel m2 = m;
    for (float& w : m2.theta) w *= 2.0f;
    LogitMap z1 = forward(m, img);
    LogitMap z2 = forward(m2, img);
    for (size_t k = 0; k < z1.data.size(); ++k)
        CHECK(z2.data[k] == doctest::Approx(2.0 * z1.data[k]).epsilon(1e-12));
}

TEST_CASE("forward matches a hand matrix-vector product on one pixel") {
    Image img(1, 1);
    img.at(0, 0, 0) = 0.2f;
    img.at(0, 0, 1) = 0.5f;
    img.at(0, 0, 2) = 0.9f;
    FeatureMap f = extract_features(img);
    SegmentationModel m = SegmentationModel::zeros(2);
    Rng rng(5);
    for (float& w : m.theta) w = static_cast<float>(rng.uniform(-1.0, 1.0));
    LogitMap z = forward(m, f);
    for (int c = 0; c < 2; ++c) {
        double expect = 0.0;
        for (int k = 0; k < 12; ++k) expect += m.weight(c, k) * f.at(k, 0, 0);
        CHECK(z.at(c, 0, 0) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("param_grad is zero for zero upstream and linear in the upstream") {
    Rng rng(7);
    Image img = testutil::random_image(4, 4, rng);
    FeatureMap feat = extract_features(img);
    SegmentationModel m = SegmentationModel::zeros(3);
    LogitMap zero(3, 4, 4, 0.0);
    for (double g : param_grad(m, feat, zero)) CHECK(g == 0.0);

    LogitMap up = testutil::random_logits(3, 4, 4, rng);
    LogitMap up2 = up;
    for (double& v : up2.data) v *= 2.0;
    auto g1 = param_grad(m, feat, up);
    auto g2 = param_grad(m, feat, up2);
    for (size_t k = 0; k < g1.size(); ++k)
        CHECK(g2[k] == doctest::Approx(2.0 * g1[k]).epsilon(1e-12));
}

TEST_CASE("param_grad matches finite differences through supervised_ce") {
    Rng rng(9);
    Image img = testutil::random_image(4, 4, rng);
    FeatureMap feat = extract_features(img);
    LabelMask y = testutil::random_mask(3, 4, 4, rng);
    SegmentationModel m = SegmentationModel::zeros(3);
    for (float& w : m.theta) w = static_cast<float>(rng.uniform(-1.0, 1.0));

    LossValue lv = supervised_ce(forward(m, feat), y);
    auto analytic = param_grad(m, feat, lv.grad);
    auto fd = testutil::fd_param_grad(
        m, [&](const SegmentationModel& q) { return supervised_ce(forward(q, feat), y).value; });
    CHECK(testutil::rel_grad_error(analytic, fd) < 1e-3);
}

TEST_CASE("end-to-end gradient of the combined objective matches finite differences") {
    Rng rng(11);
    Image img_l = testutil::random_image(4, 4, rng);
    Image img_u = testutil::random_image(4, 4, rng);
    FeatureMap feat_l = extract_features(img_l);
    FeatureMap feat_u = extract_features(img_u);
    LabelMask y = testutil::random_mask(3, 4, 4, rng);
    ProbMap teacher = testutil::random_probmap(3, 4, 4, rng);
    ValidityMask valid(4, 4, true);
    valid.set(1, 2, false);
    const double lambda = 0.5;

    SegmentationModel m = SegmentationModel::zeros(3);
    for (float& w : m.theta) w = static_cast<float>(rng.uniform(-1.0, 1.0));

    auto objective = [&](const SegmentationModel& q) {
        LossValue sup = supervised_ce(forward(q, feat_l), y);
        LossValue unsup = spatial_mse(forward(q, feat_u), teacher, valid);
        return total_loss(sup, unsup, lambda).value;
    };

    LossValue sup = supervised_ce(forward(m, feat_l), y);
    LossValue unsup = spatial_mse(forward(m, feat_u), teacher, valid);
    auto g_sup = param_grad(m, feat_l, sup.grad);
    auto g_unsup = param_grad(m, feat_u, unsup.grad);
    std::vector<double> analytic(g_sup.size());
    for (size_t k = 0; k < analytic.size(); ++k) analytic[k] = g_sup[k] + lambda * g_unsup[k];

    auto fd = testutil::fd_param_grad(m, objective);
    CHECK(testutil::rel_grad_error(analytic, fd) < 1e-3);
}

TEST_CASE("sgd_step arithmetic") {
    SegmentationModel m = SegmentationModel::zeros(2);
    std::vector<double> zero(m.theta.size(), 0.0);
    SegmentationModel same = sgd_step(m, zero, 0.1, 0.0);
    CHECK(same.theta == m.theta);

    SegmentationModel ones = SegmentationModel::zeros(2);
    for (float& w : ones.theta) w = 1.0f;
    std::vector<double> grad1(ones.theta.size(), 1.0);
    SegmentationModel stepped = sgd_step(ones, grad1, 0.1, 0.0);
    for (float w : stepped.theta) CHECK(w == doctest::Approx(0.9f));

    SegmentationModel decayed = sgd_step(ones, zero, 0.1, 1e-4);
    for (float w : decayed.theta) CHECK(w == doctest::Approx(0.99999f));
}

TEST_CASE("ema_update blends parameters") {
    SegmentationModel t = SegmentationModel::zeros(2);
    SegmentationModel s = SegmentationModel::zeros(2);
    for (float& w : s.theta) w = 1.0f;

    SegmentationModel frozen = ema_update(t, s, 1.0);
    CHECK(frozen.theta == t.theta);

    SegmentationModel copy = ema_update(t, s, 0.0);
    CHECK(copy.theta == s.theta);

    SegmentationModel blend = ema_update(t, s, 0.99);
    for (float w : blend.theta) CHECK(w == doctest::Approx(0.01f));
}

TEST_CASE("ema_update contracts the teacher-student gap by alpha") {
    Rng rng(13);
    SegmentationModel t = SegmentationModel::zeros(3);
    SegmentationModel s = SegmentationModel::zeros(3);
    for (float& w : t.theta) w = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (float& w : s.theta) w = static_cast<float>(rng.uniform(-1.0, 1.0));
    const double alpha = 0.9;
    SegmentationModel t2 = ema_update(t, s, alpha);
    for (size_t k = 0; k < t.theta.size(); ++k) {
        double before = static_cast<double>(t.theta[k]) - s.theta[k];
        double after = static_cast<double>(t2.theta[k]) - s.theta[k];
        CHECK(after == doctest::Approx(alpha * before).epsilon(1e-6));
    }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    Rng rng(15);
    SegmentationModel m = SegmentationModel::zeros(4);
    for (float& w : m.theta) w = static_cast<float>(rng.uniform(-2.0, 2.0));

    auto bytes = checkpoint_bytes(m);
    CHECK(bytes.size() == 16 + 4 * m.theta.size());
    CHECK(bytes[0] == 'A');
    CHECK(bytes[1] == 'S');
    CHECK(bytes[2] == 'M');
    CHECK(bytes[3] == 'D');

    fs::path path = fs::temp_directory_path() / "adaseg_test_ckpt.asmd";
    save_checkpoint(path, m);
    SegmentationModel back = load_checkpoint(path);
    CHECK(back.classes == m.classes);
    CHECK(back.features == m.features);
    CHECK(back.theta == m.theta);
    fs::remove(path);
}

TEST_CASE("load_checkpoint rejects wrong magic") {
    fs::path path = fs::temp_directory_path() / "adaseg_test_bad.asmd";
    {
        std::ofstream f(path, std::ios::binary);
        f << "NOPExxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
    fs::remove(path);
}
