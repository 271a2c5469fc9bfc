#include "adaseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace adaseg {

namespace {

void check_shape(const LogitMap& logits, int h, int w, const char* what) {
    if (logits.height != h || logits.width != w)
        throw std::invalid_argument(std::string("shape mismatch in ") + what);
}

// Per-pixel softmax of one logit column, max-subtracted.
void pixel_softmax(const LogitMap& z, int i, int j, std::vector<double>& p) {
    const int C = z.classes;
    double zmax = z.at(0, i, j);
    for (int c = 1; c < C; ++c) zmax = std::max(zmax, z.at(c, i, j));
    double sum = 0.0;
    for (int c = 0; c < C; ++c) {
        p[c] = std::exp(z.at(c, i, j) - zmax);
        sum += p[c];
    }
    for (int c = 0; c < C; ++c) p[c] /= sum;
}

}  // namespace

LossValue supervised_ce(const LogitMap& logits, const LabelMask& target) {
    check_shape(logits, target.height, target.width, "supervised_ce");
    const int C = logits.classes;
    LossValue out;
    out.grad = LogitMap(C, logits.height, logits.width, 0.0);

    int n = 0;
    for (int i = 0; i < logits.height; ++i)
        for (int j = 0; j < logits.width; ++j)
            if (target.at(i, j) != kIgnoreLabel) ++n;
    if (n == 0) throw std::runtime_error("supervised_ce: no labeled pixels");
    out.valid_count = n;

    std::vector<double> p(C);
    double total = 0.0;
    for (int i = 0; i < logits.height; ++i) {
        for (int j = 0; j < logits.width; ++j) {
            int32_t y = target.at(i, j);
            if (y == kIgnoreLabel) continue;
            if (y < 0 || y >= C) throw std::invalid_argument("class out of range");
            pixel_softmax(logits, i, j, p);
            total += -std::log(std::max(p[y], 1e-300));
            for (int c = 0; c < C; ++c)
                out.grad.at(c, i, j) = (p[c] - (c == y ? 1.0 : 0.0)) / n;
        }
    }
    out.value = total / n;
    return out;
}

LossValue consistency_ce(const LogitMap& student, const ProbMap& teacher,
                         const ValidityMask& valid) {
    check_shape(student, teacher.height, teacher.width, "consistency_ce");
    if (student.classes != teacher.classes)
        throw std::invalid_argument("shape mismatch in consistency_ce");
    const int C = student.classes;
    LossValue out;
    out.grad = LogitMap(C, student.height, student.width, 0.0);

    int n = valid.count();
    if (n == 0) throw std::runtime_error("consistency_ce: no valid pixels");
    out.valid_count = n;

    std::vector<double> p(C);
    double total = 0.0;
    for (int i = 0; i < student.height; ++i) {
        for (int j = 0; j < student.width; ++j) {
            if (!valid.at(i, j)) continue;
            pixel_softmax(student, i, j, p);
            double tsum = 0.0;
            for (int c = 0; c < C; ++c) {
                double t = teacher.at(c, i, j);
                tsum += t;
                if (t > 0.0) total += -t * std::log(std::max(p[c], 1e-300));
            }
            // d/dz_k of -sum_c t_c ln p_c  =  p_k * sum_c t_c - t_k
            for (int c = 0; c < C; ++c)
                out.grad.at(c, i, j) = (p[c] * tsum - teacher.at(c, i, j)) / n;
        }
    }
    out.value = total / n;
    return out;
}

LossValue spatial_mse(const LogitMap& student, const ProbMap& teacher_aligned,
                      const ValidityMask& valid) {
    check_shape(student, teacher_aligned.height, teacher_aligned.width, "spatial_mse");
    if (student.classes != teacher_aligned.classes)
        throw std::invalid_argument("shape mismatch in spatial_mse");
    const int C = student.classes;
    LossValue out;
    out.grad = LogitMap(C, student.height, student.width, 0.0);

    int n = valid.count();
    if (n == 0) throw std::runtime_error("spatial_mse: no valid pixels");
    out.valid_count = n;

    std::vector<double> p(C), diff(C);
    double total = 0.0;
    for (int i = 0; i < student.height; ++i) {
        for (int j = 0; j < student.width; ++j) {
            if (!valid.at(i, j)) continue;
            pixel_softmax(student, i, j, p);
            double inner = 0.0;  // sum_c (p_c - t_c) * p_c
            for (int c = 0; c < C; ++c) {
                diff[c] = p[c] - teacher_aligned.at(c, i, j);
                total += diff[c] * diff[c];
                inner += diff[c] * p[c];
            }
            // dL/dz_k = (2/n) * p_k * ((p_k - t_k) - sum_c (p_c - t_c) p_c)
            for (int c = 0; c < C; ++c)
                out.grad.at(c, i, j) = 2.0 * p[c] * (diff[c] - inner) / n;
        }
    }
    out.value = total / n;
    return out;
}

LossValue total_loss(const LossValue& l_sup, const LossValue& l_unsup, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    LossValue out;
    out.value = l_sup.value + lambda * l_unsup.value;
    out.valid_count = l_sup.valid_count + l_unsup.valid_count;

    const bool has_sup = !l_sup.grad.data.empty();
    const bool has_unsup = !l_unsup.grad.data.empty();
    if (has_sup && has_unsup) {
        if (l_sup.grad.data.size() != l_unsup.grad.data.size())
            throw std::invalid_argument("total_loss: branch gradient shapes differ");
        out.grad = l_sup.grad;
        for (size_t k = 0; k < out.grad.data.size(); ++k)
            out.grad.data[k] += lambda * l_unsup.grad.data[k];
    } else if (has_sup) {
        out.grad = l_sup.grad;
    } else if (has_unsup) {
        out.grad = l_unsup.grad;
        for (double& g : out.grad.data) g *= lambda;
    }
    return out;
}

}  // namespace adaseg
