#pragma once

#include <filesystem>
#include <vector>

#include "adaseg/grids.hpp"

namespace adaseg {

/// Fixed (non-trainable) per-pixel features, feature-major (F x H x W).
struct FeatureMap {
    int features = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int f, int h, int w)
        : features(f), height(h), width(w), data(static_cast<size_t>(f) * h * w, 0.0) {}

    size_t idx(int f, int i, int j) const {
        return (static_cast<size_t>(f) * height + i) * width + j;
    }
    double& at(int f, int i, int j) { return data[idx(f, i, j)]; }
    double at(int f, int i, int j) const { return data[idx(f, i, j)]; }
};

/// Feature layout produced by extract_features:
/// raw RGB (3), Gaussian-blurred RGB at sigma 2 and sigma 5 (6),
/// normalized pixel-center coordinates x/W and y/H (2), constant bias (1).
inline constexpr int kFeatureCount = 12;

FeatureMap extract_features(const Image& img);

/// Linear per-pixel classifier over fixed features. theta is the flattened
/// C x F weight matrix (row-major by class), stored in f32 so checkpoints
/// round-trip bit-exactly.
struct SegmentationModel {
    int classes = 0;
    int features = kFeatureCount;
    std::vector<float> theta;

    static SegmentationModel zeros(int classes) {
        SegmentationModel m;
        m.classes = classes;
        m.theta.assign(static_cast<size_t>(classes) * kFeatureCount, 0.0f);
        return m;
    }

    float weight(int c, int f) const { return theta[static_cast<size_t>(c) * features + f]; }
};

LogitMap forward(const SegmentationModel& m, const FeatureMap& feat);
LogitMap forward(const SegmentationModel& m, const Image& img);

/// dL/dW[c,f] = sum_{i,j} dL_dlogits[c,i,j] * feat[f,i,j], flattened like theta.
std::vector<double> param_grad(const SegmentationModel& m, const FeatureMap& feat,
                               const LogitMap& dL_dlogits);
std::vector<double> param_grad(const SegmentationModel& m, const Image& img,
                               const LogitMap& dL_dlogits);

/// theta <- theta - lr * (grad + weight_decay * theta)
SegmentationModel sgd_step(const SegmentationModel& m, const std::vector<double>& grad,
                           double lr, double weight_decay);

/// theta_t <- alpha * theta_t + (1 - alpha) * theta_s
SegmentationModel ema_update(const SegmentationModel& teacher, const SegmentationModel& student,
                             double alpha);

/// Checkpoint file: magic "ASMD", u32 version, u32 C, u32 F, C*F f32, all
/// little-endian.
void save_checkpoint(const std::filesystem::path& path, const SegmentationModel& m);
SegmentationModel load_checkpoint(const std::filesystem::path& path);

/// The checkpoint byte image, for hashing without touching disk.
std::vector<unsigned char> checkpoint_bytes(const SegmentationModel& m);

}  // namespace adaseg
