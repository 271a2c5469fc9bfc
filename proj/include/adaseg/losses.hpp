#pragma once

#include "adaseg/grids.hpp"

namespace adaseg {

/// A scalar objective together with its gradient with respect to the student
/// logits it was computed from. Invalid pixels contribute neither to the
/// value nor to the gradient.
struct LossValue {
    double value = 0.0;
    LogitMap grad;        // dL / d(student logits); empty when no logits were involved
    int valid_count = 0;  // pixels that contributed
};

/// Mean cross-entropy against hard labels; IGNORE pixels are skipped.
/// Gradient per pixel is (softmax - one_hot) / valid_count.
LossValue supervised_ce(const LogitMap& logits, const LabelMask& target);

/// Weak-to-strong cross-entropy: mean over valid pixels of
/// -sum_c teacher_c * ln softmax(student)_c. The teacher is a constant.
LossValue consistency_ce(const LogitMap& student, const ProbMap& teacher,
                         const ValidityMask& valid);

/// Spatially aligned pixel MSE: mean over valid pixels of
/// sum_c (softmax(student)_c - teacher_aligned_c)^2, differentiated through
/// the softmax. The aligned teacher map is a constant.
LossValue spatial_mse(const LogitMap& student, const ProbMap& teacher_aligned,
                      const ValidityMask& valid);

/// Total objective: sup.value + lambda * unsup.value. Branch gradients are
/// combined linearly when both are present and shaped alike; the trainer
/// combines parameter-space gradients per branch, which is equivalent.
LossValue total_loss(const LossValue& l_sup, const LossValue& l_unsup, double lambda);

}  // namespace adaseg
