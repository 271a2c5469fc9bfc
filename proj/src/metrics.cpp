#include "adaseg/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace adaseg {

void accumulate(ConfusionMatrix& cm, const LabelMask& pred, const LabelMask& gt) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw std::invalid_argument("accumulate: prediction/ground-truth shape mismatch");
    for (int i = 0; i < gt.height; ++i) {
        for (int j = 0; j < gt.width; ++j) {
            int32_t g = gt.at(i, j);
            if (g == kIgnoreLabel) continue;
            int32_t p = pred.at(i, j);
            if (g < 0 || g >= cm.classes || p < 0 || p >= cm.classes)
                throw std::invalid_argument("accumulate: class id out of range");
            ++cm.at(g, p);
        }
    }
}

IouReport miou(const ConfusionMatrix& cm) {
    const int C = cm.classes;
    IouReport rep;
    rep.per_class.assign(C, 0.0);
    rep.present.assign(C, false);

    double sum = 0.0;
    int n_present = 0;
    for (int c = 0; c < C; ++c) {
        uint64_t row = 0, col = 0;
        for (int k = 0; k < C; ++k) {
            row += cm.at(c, k);
            col += cm.at(k, c);
        }
        uint64_t diag = cm.at(c, c);
        uint64_t uni = row + col - diag;
        if (uni == 0) continue;  // absent from both gt and prediction
        rep.present[c] = true;
        rep.per_class[c] = static_cast<double>(diag) / static_cast<double>(uni);
        sum += rep.per_class[c];
        ++n_present;
    }
    if (n_present == 0) throw std::runtime_error("miou: all classes absent");
    rep.mean = sum / n_present;
    return rep;
}

void write_iou_csv(const std::filesystem::path& path, const IouReport& report) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << "class,iou\n";
    char buf[64];
    for (size_t c = 0; c < report.per_class.size(); ++c) {
        if (report.present[c]) {
            std::snprintf(buf, sizeof(buf), "%zu,%.8g\n", c, report.per_class[c]);
            f << buf;
        } else {
            f << c << ",absent\n";
        }
    }
    std::snprintf(buf, sizeof(buf), "miou,%.8g\n", report.mean);
    f << buf;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace adaseg
