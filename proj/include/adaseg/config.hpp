#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adaseg/data_io.hpp"
#include "adaseg/trainer.hpp"

namespace adaseg {

/// One experiment: dataset generation parameters, the labeled/unlabeled
/// split, training setup, and the ablation seed list. Parsed from a flat
/// `key = value` text file with [section] headers; unknown keys are rejected.
struct ExperimentConfig {
    ShapesWorldConfig data;
    int count = 200;      // training images to generate
    int val_count = 64;   // extra fully-labeled validation images
    double labeled_ratio = 0.125;

    TrainConfig train;  // includes the EAW block

    std::vector<uint64_t> ablate_seeds = {1, 2, 3};

    void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

std::string to_string(TrainMode m);
std::string to_string(TeacherTargets t);
std::string to_string(MappingStrategy::Kind k);
TrainMode parse_train_mode(const std::string& v);
TeacherTargets parse_teacher_targets(const std::string& v);
MappingStrategy::Kind parse_strategy(const std::string& v);

/// Canonical serialization: every field explicit, parse(print(c)) == c.
std::string print_config(const ExperimentConfig& cfg);

/// JSON rendering of the same fields (for the run's config echo).
std::string config_json(const ExperimentConfig& cfg);

}  // namespace adaseg
