#include "adaseg/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace adaseg {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_level(double angle, double ratio, const EawConfig& cfg, const char* what) {
    if (angle < 0.0 || angle > cfg.r_max) throw std::invalid_argument(std::string(what) + ": angle out of [0, r_max]");
    if (ratio < 0.0 || ratio > cfg.t_max) throw std::invalid_argument(std::string(what) + ": ratio out of [0, t_max]");
}

}  // namespace

void EawConfig::validate() const {
    if (!(r_max > 0.0 && r_max <= 180.0)) throw std::invalid_argument("r_max out of (0, 180]");
    if (!(t_max > 0.0 && t_max <= 1.0)) throw std::invalid_argument("t_max out of (0, 1]");
    if (!(k_r > 0.0)) throw std::invalid_argument("k_r must be > 0");
    if (!(k_t > 0.0)) throw std::invalid_argument("k_t must be > 0");
    using Kind = MappingStrategy::Kind;
    switch (strategy.kind) {
        case Kind::eaw:
            break;
        case Kind::fixed:
            check_level(strategy.fixed_angle_deg, strategy.fixed_ratio, *this, "fixed");
            break;
        case Kind::fixed_high:
            check_level(strategy.high_angle_deg, strategy.high_ratio, *this, "fixed_high");
            break;
        case Kind::bipart:
            check_level(strategy.fixed_angle_deg, strategy.fixed_ratio, *this, "bipart low");
            check_level(strategy.high_angle_deg, strategy.high_ratio, *this, "bipart high");
            break;
        case Kind::range_dyn:
            if (!(strategy.range_breaks[0] < strategy.range_breaks[1]))
                throw std::invalid_argument("range_dyn breakpoints must be strictly increasing");
            for (int k = 0; k < 3; ++k)
                check_level(strategy.range_angles[k], strategy.range_ratios[k], *this, "range_dyn");
            break;
    }
}

EntropyMap pixel_entropy(const ProbMap& p) {
    EntropyMap e(p.height, p.width);
    for (int i = 0; i < p.height; ++i) {
        for (int j = 0; j < p.width; ++j) {
            double h = 0.0;
            for (int c = 0; c < p.classes; ++c) {
                double v = p.at(c, i, j);
                if (v > 0.0) h -= v * std::log(v);
            }
            e.at(i, j) = h;
        }
    }
    return e;
}

double mean_entropy(const EntropyMap& e, const ValidityMask& valid, bool normalize, int classes) {
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < e.height; ++i) {
        for (int j = 0; j < e.width; ++j) {
            if (!valid.at(i, j)) continue;
            sum += e.at(i, j);
            ++n;
        }
    }
    if (n == 0) throw std::runtime_error("empty entropy reduction");
    double mean = sum / n;
    return normalize ? mean / std::log(static_cast<double>(classes)) : mean;
}

double eaw_rotation(double entropy, const EawConfig& cfg) {
    double raw = cfg.r_max * cfg.k_r * logistic(entropy - cfg.d_r);
    return cfg.clamp_output ? std::min(raw, cfg.r_max) : raw;
}

double eaw_translation(double entropy, const EawConfig& cfg) {
    double raw = cfg.t_max * cfg.k_t * logistic(entropy - cfg.d_t);
    return cfg.clamp_output ? std::min(raw, cfg.t_max) : raw;
}

SpatialTransform sample_transform(double entropy, const EawConfig& cfg, Rng& rng) {
    double angle = 0.0, ratio = 0.0;
    const MappingStrategy& s = cfg.strategy;
    using Kind = MappingStrategy::Kind;
    switch (s.kind) {
        case Kind::eaw:
            angle = eaw_rotation(entropy, cfg);
            ratio = eaw_translation(entropy, cfg);
            break;
        case Kind::fixed:
            angle = s.fixed_angle_deg;
            ratio = s.fixed_ratio;
            break;
        case Kind::fixed_high:
            angle = s.high_angle_deg;
            ratio = s.high_ratio;
            break;
        case Kind::bipart:
            if (entropy < s.bipart_threshold) {
                angle = s.fixed_angle_deg;
                ratio = s.fixed_ratio;
            } else {
                angle = s.high_angle_deg;
                ratio = s.high_ratio;
            }
            break;
        case Kind::range_dyn: {
            int level = entropy < s.range_breaks[0] ? 0 : (entropy < s.range_breaks[1] ? 1 : 2);
            angle = s.range_angles[level];
            ratio = s.range_ratios[level];
            break;
        }
    }

    double sign = rng.coin() ? 1.0 : -1.0;
    double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    SpatialTransform t;
    t.rotation_deg = std::fmod(sign * angle, 360.0);
    // With clamp_output off the ratio can exceed 1; a unit-fraction shift
    // already moves everything off canvas, so capping keeps the field
    // invariant without changing which pixels survive.
    t.translate_dx = std::clamp(ratio * std::cos(phi), -1.0, 1.0);
    t.translate_dy = std::clamp(ratio * std::sin(phi), -1.0, 1.0);
    return t;
}

}  // namespace adaseg
