#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace adaseg {

/// Reserved label id for pixels that do not participate in losses or metrics.
inline constexpr int32_t kIgnoreLabel = std::numeric_limits<int32_t>::max();

/// RGB image, values in [0,1], row-major, channel-interleaved (H x W x 3).
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, float fill = 0.0f)
        : height(h), width(w), data(static_cast<size_t>(h) * w * 3, fill) {}

    float& at(int i, int j, int c) { return data[(static_cast<size_t>(i) * width + j) * 3 + c]; }
    float at(int i, int j, int c) const { return data[(static_cast<size_t>(i) * width + j) * 3 + c]; }
};

/// Pre-softmax per-pixel class scores, class-major (C x H x W).
struct LogitMap {
    int classes = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    LogitMap() = default;
    LogitMap(int c, int h, int w, double fill = 0.0)
        : classes(c), height(h), width(w), data(static_cast<size_t>(c) * h * w, fill) {}

    size_t idx(int c, int i, int j) const {
        return (static_cast<size_t>(c) * height + i) * width + j;
    }
    double& at(int c, int i, int j) { return data[idx(c, i, j)]; }
    double at(int c, int i, int j) const { return data[idx(c, i, j)]; }
};

/// Per-pixel class distribution, class-major (C x H x W). Each pixel's column
/// sums to 1 (within 1e-5), except all-zero columns on invalidated pixels.
struct ProbMap {
    int classes = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    ProbMap() = default;
    ProbMap(int c, int h, int w, float fill = 0.0f)
        : classes(c), height(h), width(w), data(static_cast<size_t>(c) * h * w, fill) {}

    size_t idx(int c, int i, int j) const {
        return (static_cast<size_t>(c) * height + i) * width + j;
    }
    float& at(int c, int i, int j) { return data[idx(c, i, j)]; }
    float at(int c, int i, int j) const { return data[idx(c, i, j)]; }
};

/// Per-pixel class ids in [0, C), or kIgnoreLabel.
struct LabelMask {
    int height = 0;
    int width = 0;
    std::vector<int32_t> data;

    LabelMask() = default;
    LabelMask(int h, int w, int32_t fill = 0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    int32_t& at(int i, int j) { return data[static_cast<size_t>(i) * width + j]; }
    int32_t at(int i, int j) const { return data[static_cast<size_t>(i) * width + j]; }
};

/// Marks which pixels participate in losses and metrics (true = valid).
struct ValidityMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> data;

    ValidityMask() = default;
    ValidityMask(int h, int w, bool fill = true)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill ? 1 : 0) {}

    void set(int i, int j, bool v) { data[static_cast<size_t>(i) * width + j] = v ? 1 : 0; }
    bool at(int i, int j) const { return data[static_cast<size_t>(i) * width + j] != 0; }

    int count() const {
        int n = 0;
        for (uint8_t v : data) n += (v != 0);
        return n;
    }
};

/// Per-pixel softmax with max-subtraction. Throws on non-finite logits.
ProbMap softmax(const LogitMap& logits);

/// Per-pixel argmax; ties break to the lowest class index.
LabelMask argmax(const ProbMap& prob);

/// Expands a label mask into unit probability vectors. IGNORE pixels become
/// all-zero columns and are marked invalid in the returned mask.
std::pair<ProbMap, ValidityMask> one_hot(const LabelMask& mask, int classes);

}  // namespace adaseg
