#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "adaseg/grids.hpp"

namespace adaseg {

/// Pixel confusion counts; rows are ground truth, columns are prediction.
/// IGNORE ground-truth pixels are never counted.
struct ConfusionMatrix {
    int classes = 0;
    std::vector<uint64_t> counts;  // classes x classes, gt-major

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int c)
        : classes(c), counts(static_cast<size_t>(c) * c, 0) {}

    uint64_t& at(int gt, int pred) { return counts[static_cast<size_t>(gt) * classes + pred]; }
    uint64_t at(int gt, int pred) const { return counts[static_cast<size_t>(gt) * classes + pred]; }

    uint64_t total() const {
        uint64_t t = 0;
        for (uint64_t v : counts) t += v;
        return t;
    }
};

void accumulate(ConfusionMatrix& cm, const LabelMask& pred, const LabelMask& gt);

/// Per-class intersection-over-union. Classes absent from both prediction and
/// ground truth carry present=false and are excluded from the mean.
struct IouReport {
    std::vector<double> per_class;
    std::vector<bool> present;
    double mean = 0.0;
};

IouReport miou(const ConfusionMatrix& cm);

/// CSV: one `class,iou` row per class (absent classes print "absent"),
/// then a final `miou,<value>` row.
void write_iou_csv(const std::filesystem::path& path, const IouReport& report);

}  // namespace adaseg
