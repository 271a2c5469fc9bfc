#include "adaseg/grids.hpp"

#include <cmath>
#include <stdexcept>

namespace adaseg {

ProbMap softmax(const LogitMap& logits) {
    ProbMap out(logits.classes, logits.height, logits.width);
    const int C = logits.classes;
    for (int i = 0; i < logits.height; ++i) {
        for (int j = 0; j < logits.width; ++j) {
            double zmax = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < C; ++c) {
                double z = logits.at(c, i, j);
                if (!std::isfinite(z)) throw std::invalid_argument("invalid logits");
                zmax = std::max(zmax, z);
            }
            double sum = 0.0;
            for (int c = 0; c < C; ++c) sum += std::exp(logits.at(c, i, j) - zmax);
            for (int c = 0; c < C; ++c) {
                out.at(c, i, j) =
                    static_cast<float>(std::exp(logits.at(c, i, j) - zmax) / sum);
            }
        }
    }
    return out;
}

LabelMask argmax(const ProbMap& prob) {
    LabelMask out(prob.height, prob.width);
    for (int i = 0; i < prob.height; ++i) {
        for (int j = 0; j < prob.width; ++j) {
            int best = 0;
            float best_p = prob.at(0, i, j);
            for (int c = 1; c < prob.classes; ++c) {
                float p = prob.at(c, i, j);
                if (p > best_p) {
                    best_p = p;
                    best = c;
                }
            }
            out.at(i, j) = best;
        }
    }
    return out;
}

std::pair<ProbMap, ValidityMask> one_hot(const LabelMask& mask, int classes) {
    ProbMap prob(classes, mask.height, mask.width, 0.0f);
    ValidityMask valid(mask.height, mask.width, true);
    for (int i = 0; i < mask.height; ++i) {
        for (int j = 0; j < mask.width; ++j) {
            int32_t v = mask.at(i, j);
            if (v == kIgnoreLabel) {
                valid.set(i, j, false);
                continue;
            }
            if (v < 0 || v >= classes) throw std::invalid_argument("class out of range");
            prob.at(v, i, j) = 1.0f;
        }
    }
    return {std::move(prob), std::move(valid)};
}

}  // namespace adaseg
