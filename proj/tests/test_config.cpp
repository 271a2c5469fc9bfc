#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adaseg/config.hpp"

using namespace adaseg;

TEST_CASE("defaults carry the published parameter set") {
    ExperimentConfig cfg;
    CHECK(cfg.train.lr_init == 0.001);
    CHECK(cfg.train.poly_power == 0.9);
    CHECK(cfg.train.weight_decay == 1e-4);
    CHECK(cfg.train.lambda == 0.5);
    CHECK(cfg.train.eaw.k_r == 11.0);
    CHECK(cfg.train.eaw.k_t == 7.0);
    CHECK(cfg.train.eaw.d_r == 1.0);
    CHECK(cfg.train.eaw.d_t == 1.0);
    CHECK(cfg.train.eaw.r_max == 180.0);
    CHECK(cfg.train.eaw.t_max == 0.5);
}

TEST_CASE("print/parse round-trip is exact") {
    ExperimentConfig cfg;
    std::string text = print_config(cfg);
    ExperimentConfig back = parse_config_text(text);
    CHECK(print_config(back) == text);

    // perturb every kind of field and round-trip again
    cfg.data.image_size = 48;
    cfg.data.noise_std = 0.07;
    cfg.count = 123;
    cfg.labeled_ratio = 1.0 / 3.0;
    cfg.train.mode = TrainMode::wscr_ce_baseline;
    cfg.train.teacher_targets = TeacherTargets::hard;
    cfg.train.eaw.strategy.kind = MappingStrategy::Kind::range_dyn;
    cfg.train.eaw.clamp_output = false;
    cfg.train.eaw.strategy.range_breaks[0] = 0.21;
    cfg.ablate_seeds = {4, 5};
    cfg.data.palette = {{0.0f, 0.0f, 0.0f},
                        {1.0f, 0.0f, 0.0f},
                        {0.0f, 1.0f, 0.0f},
                        {0.0f, 0.0f, 1.0f}};
    std::string text2 = print_config(cfg);
    ExperimentConfig back2 = parse_config_text(text2);
    CHECK(print_config(back2) == text2);
    CHECK(back2.labeled_ratio == cfg.labeled_ratio);
    CHECK(back2.train.eaw.strategy.range_breaks[0] == 0.21);
    CHECK(back2.data.palette.size() == 4);
    CHECK(back2.data.palette[1][0] == 1.0f);
}

TEST_CASE("unknown keys and sections are rejected by name") {
    CHECK_THROWS_WITH_AS(parse_config_text("[data]\nbogus = 3\n"),
                         doctest::Contains("data.bogus"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("[nope]\n"), doctest::Contains("unknown section"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("key = 1\n"), doctest::Contains("outside any section"),
                         std::invalid_argument);
}

TEST_CASE("field values are validated with their names") {
    CHECK_THROWS_WITH_AS(parse_config_text("[train]\nlr_init = banana\n"),
                         doctest::Contains("train.lr_init"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("[train]\nmode = alchemy\n"),
                         doctest::Contains("mode"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[data]\nnum_classes = 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[eaw]\nr_max = 0\n"), std::invalid_argument);
}

TEST_CASE("comments and blank lines are fine") {
    ExperimentConfig cfg = parse_config_text(
        "# experiment\n\n[data]\nimage_size = 32\n\n# more\n[train]\nepochs = 5\n");
    CHECK(cfg.data.image_size == 32);
    CHECK(cfg.train.epochs == 5);
}

TEST_CASE("config json mentions every section") {
    std::string j = config_json(ExperimentConfig{});
    CHECK(j.find("\"data\"") != std::string::npos);
    CHECK(j.find("\"train\"") != std::string::npos);
    CHECK(j.find("\"eaw\"") != std::string::npos);
    CHECK(j.find("\"ablate\"") != std::string::npos);
}
