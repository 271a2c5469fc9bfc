#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "adaseg/adaptive.hpp"
#include "adaseg/data_io.hpp"
#include "adaseg/grids.hpp"
#include "adaseg/losses.hpp"
#include "adaseg/model.hpp"
#include "adaseg/rng.hpp"
#include "adaseg/spatial.hpp"

namespace adaseg {

enum class TrainMode { supervised_only, asaug, wscr_ce_baseline };
enum class TeacherTargets { soft, hard };

struct TrainConfig {
    double lr_init = 0.001;     // published starting rate
    double poly_power = 0.9;
    double weight_decay = 1e-4;
    double lambda = 0.5;        // unsupervised loss weight
    int epochs = 20;
    int batch_size = 8;
    double ema_alpha = 0.99;
    uint64_t seed = 0;
    int num_classes = 4;
    EawConfig eaw;
    TrainMode mode = TrainMode::asaug;
    TeacherTargets teacher_targets = TeacherTargets::soft;
    double weak_flip_prob = 0.5;

    void validate() const;
};

struct FlipRecord {
    bool flipped = false;
};

/// One unlabeled consistency step, for the run trace.
struct StepTrace {
    long iter = 0;
    double entropy = 0.0;       // scalar H driving the transform
    double rotation_deg = 0.0;  // signed, as applied
    double dx = 0.0;
    double dy = 0.0;
    int valid_count = 0;
    bool skipped = false;  // transform left no valid pixels
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;  // rate used by the epoch's last iteration
    double loss_sup = 0.0;
    double loss_unsup = 0.0;
    double mean_entropy = 0.0;
    double mean_abs_rot_deg = 0.0;
    double mean_trans_ratio = 0.0;
    double val_miou = 0.0;
};

struct RunReport {
    std::vector<EpochStats> epochs;
    std::vector<StepTrace> traces;
    uint64_t final_checksum = 0;  // FNV-1a of the final teacher checkpoint bytes
    double final_miou = 0.0;
    uint64_t seed = 0;
};

/// lr_init * (1 - iter/total_iters)^power
double poly_lr(double lr_init, long iter, long total_iters, double power);

/// Exact column reversals (pure permutations, no resampling).
Image hflip(const Image& img);
LabelMask hflip(const LabelMask& mask);
ProbMap hflip(const ProbMap& p);

/// Horizontal flip with the given probability; consumes exactly one draw.
std::pair<Image, FlipRecord> weak_augment(const Image& img, double flip_prob, Rng& rng);

struct UnlabeledOutcome {
    LossValue loss;
    StepTrace trace;
    FeatureMap student_features;  // features of the student input, for param_grad
};

/// Optional supplier of precomputed teacher-input features, keyed by whether
/// the weak augmentation flipped the sample. Feature extraction is pure, so a
/// cache behind this hook cannot change results.
using TeacherFeatureFn = std::function<const FeatureMap&(bool flipped)>;

/// One unlabeled sample through the consistency branch: weak-augment, teacher
/// inference, entropy, transform sampling, frame alignment, loss.
UnlabeledOutcome unlabeled_step(const Image& x, const SegmentationModel& student,
                                const SegmentationModel& teacher, const TrainConfig& cfg,
                                Rng& rng, const TeacherFeatureFn& teacher_features = {});

/// In-memory dataset resolved from a manifest.
struct LoadedSample {
    Image image;
    LabelMask mask;  // empty for unlabeled entries
    bool labeled = false;
};

struct LoadedDataset {
    std::vector<LoadedSample> samples;
    std::vector<int> labeled_idx;
    std::vector<int> unlabeled_idx;
};

LoadedDataset load_dataset(const DatasetManifest& manifest);

/// Teacher-side evaluation: plain forward, argmax, mIoU over labeled samples.
double evaluate_miou(const SegmentationModel& m, const std::vector<LoadedSample>& samples);

/// Full deterministic training run. When out_dir is non-empty, writes
/// report.csv, trace.csv and checkpoint.asmd there. The final checkpoint
/// holds the EMA teacher.
RunReport train(const DatasetManifest& manifest, const TrainConfig& cfg,
                const DatasetManifest* val_manifest = nullptr,
                const std::filesystem::path& out_dir = {});

void write_report_csv(const std::filesystem::path& path, const RunReport& report);
void write_trace_csv(const std::filesystem::path& path, const RunReport& report);

}  // namespace adaseg
