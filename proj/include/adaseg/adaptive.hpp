#pragma once

#include <vector>

#include "adaseg/grids.hpp"
#include "adaseg/rng.hpp"
#include "adaseg/spatial.hpp"

namespace adaseg {

/// Per-pixel prediction entropy in nats.
struct EntropyMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    EntropyMap() = default;
    EntropyMap(int h, int w) : height(h), width(w), data(static_cast<size_t>(h) * w, 0.0) {}

    double& at(int i, int j) { return data[static_cast<size_t>(i) * width + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * width + j]; }
};

/// How a scalar entropy is mapped to transform magnitudes. `eaw` is the
/// sigmoid mapping; the rest are the ablation baselines it is compared to:
/// constants, a two-way split, and a three-level split on entropy.
struct MappingStrategy {
    enum class Kind { eaw, fixed, fixed_high, bipart, range_dyn };

    Kind kind = Kind::eaw;

    // fixed magnitude; also the low branch of bipart
    double fixed_angle_deg = 30.0;
    double fixed_ratio = 0.1;
    // fixed_high magnitude; also the high branch of bipart
    double high_angle_deg = 80.0;
    double high_ratio = 0.45;

    double bipart_threshold = 0.5;

    double range_breaks[2] = {1.0 / 3.0, 2.0 / 3.0};
    double range_angles[3] = {20.0, 45.0, 80.0};
    double range_ratios[3] = {0.1, 0.25, 0.45};
};

/// Hyperparameters of the entropy-adaptive magnitude mapping.
///
/// Defaults are the primary published parameter set; the alternate set
/// (k_r=5.5, k_t=3, d_r=d_t=0.5) is expressible through the same fields.
struct EawConfig {
    double k_r = 11.0;  // rotation scale
    double k_t = 7.0;   // translation scale
    double d_r = 1.0;   // rotation entropy offset
    double d_t = 1.0;   // translation entropy offset
    double r_max = 180.0;  // degrees
    double t_max = 0.5;    // fraction of canvas

    bool normalize_entropy = true;  // divide mean entropy by ln C
    bool clamp_output = true;       // cap magnitudes at r_max / t_max

    MappingStrategy strategy;

    void validate() const;
};

/// Eq-style per-pixel entropy: -sum_c p_c ln p_c, with 0 ln 0 = 0.
EntropyMap pixel_entropy(const ProbMap& p);

/// Mean entropy over valid pixels, optionally normalized by ln C so the
/// result lands in [0, 1]. Throws when no pixel is valid.
double mean_entropy(const EntropyMap& e, const ValidityMask& valid, bool normalize, int classes);

/// Sigmoid magnitude mappings: r_max * k_r * sigma(H - d_r), and the
/// translation analogue. With clamp_output the result is capped at the
/// respective maximum.
double eaw_rotation(double entropy, const EawConfig& cfg);
double eaw_translation(double entropy, const EawConfig& cfg);

/// Samples a concrete transform. The magnitude pair (angle, ratio) is a pure
/// function of (entropy, cfg); the rng only picks the rotation sign and the
/// direction the translation magnitude is split into (dx, dy).
SpatialTransform sample_transform(double entropy, const EawConfig& cfg, Rng& rng);

}  // namespace adaseg
