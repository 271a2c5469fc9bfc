#include "adaseg/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "adaseg/metrics.hpp"

namespace adaseg {

void TrainConfig::validate() const {
    if (!(lr_init > 0.0)) throw std::invalid_argument("lr_init must be > 0");
    if (!(poly_power >= 0.0)) throw std::invalid_argument("poly_power must be >= 0");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(ema_alpha >= 0.0 && ema_alpha <= 1.0))
        throw std::invalid_argument("ema_alpha out of [0, 1]");
    if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
    if (!(weak_flip_prob >= 0.0 && weak_flip_prob <= 1.0))
        throw std::invalid_argument("weak_flip_prob out of [0, 1]");
    eaw.validate();
}

double poly_lr(double lr_init, long iter, long total_iters, double power) {
    if (total_iters < 1) throw std::invalid_argument("total_iters must be >= 1");
    if (iter < 0 || iter > total_iters) throw std::invalid_argument("iter out of [0, total_iters]");
    return lr_init * std::pow(1.0 - static_cast<double>(iter) / total_iters, power);
}

Image hflip(const Image& img) {
    Image out(img.height, img.width);
    for (int i = 0; i < img.height; ++i)
        for (int j = 0; j < img.width; ++j)
            for (int c = 0; c < 3; ++c) out.at(i, j, c) = img.at(i, img.width - 1 - j, c);
    return out;
}

LabelMask hflip(const LabelMask& mask) {
    LabelMask out(mask.height, mask.width);
    for (int i = 0; i < mask.height; ++i)
        for (int j = 0; j < mask.width; ++j) out.at(i, j) = mask.at(i, mask.width - 1 - j);
    return out;
}

ProbMap hflip(const ProbMap& p) {
    ProbMap out(p.classes, p.height, p.width);
    for (int c = 0; c < p.classes; ++c)
        for (int i = 0; i < p.height; ++i)
            for (int j = 0; j < p.width; ++j) out.at(c, i, j) = p.at(c, i, p.width - 1 - j);
    return out;
}

std::pair<Image, FlipRecord> weak_augment(const Image& img, double flip_prob, Rng& rng) {
    bool flip = rng.uniform() < flip_prob;
    if (flip) return {hflip(img), FlipRecord{true}};
    return {img, FlipRecord{false}};
}

UnlabeledOutcome unlabeled_step(const Image& x, const SegmentationModel& student,
                                const SegmentationModel& teacher, const TrainConfig& cfg,
                                Rng& rng, const TeacherFeatureFn& teacher_features) {
    if (student.classes != teacher.classes)
        throw std::invalid_argument("student/teacher class counts differ");
    UnlabeledOutcome out;

    // the weak augmentation draw (flip with probability weak_flip_prob)
    bool flipped = rng.uniform() < cfg.weak_flip_prob;
    ProbMap teacher_prob =
        teacher_features
            ? softmax(forward(teacher, teacher_features(flipped)))
            : softmax(forward(teacher, flipped ? hflip(x) : x));
    ValidityMask all_valid(x.height, x.width, true);
    double H = mean_entropy(pixel_entropy(teacher_prob), all_valid, cfg.eaw.normalize_entropy,
                            teacher.classes);
    out.trace.entropy = H;

    if (cfg.mode == TrainMode::wscr_ce_baseline) {
        // Intensity-only strong branch: no geometry to align.
        double brightness = rng.uniform(-0.3, 0.3);
        double contrast = rng.uniform(0.7, 1.3);
        Image x_s = photometric_jitter(x, brightness, contrast);

        ProbMap target = flipped ? hflip(teacher_prob) : teacher_prob;
        if (cfg.teacher_targets == TeacherTargets::hard)
            target = one_hot(argmax(target), teacher.classes).first;

        out.student_features = extract_features(x_s);
        LogitMap student_logits = forward(student, out.student_features);
        out.loss = consistency_ce(student_logits, target, all_valid);
        out.trace.valid_count = out.loss.valid_count;
        return out;
    }

    SpatialTransform t = sample_transform(H, cfg.eaw, rng);
    out.trace.rotation_deg = t.rotation_deg;
    out.trace.dx = t.translate_dx;
    out.trace.dy = t.translate_dy;

    // Teacher target expressed in x's frame, then moved with the same
    // transform the student input receives.
    ProbMap target = flipped ? hflip(teacher_prob) : teacher_prob;
    if (cfg.teacher_targets == TeacherTargets::hard)
        target = one_hot(argmax(target), teacher.classes).first;
    auto [target_aligned, valid] = apply_to_probmap(target, t);

    int n_valid = valid.count();
    out.trace.valid_count = n_valid;
    if (n_valid == 0) {
        out.trace.skipped = true;  // extreme transform blanked the canvas
        return out;
    }

    out.student_features = extract_features(apply_to_image(x, t).first);
    LogitMap student_logits = forward(student, out.student_features);
    out.loss = spatial_mse(student_logits, target_aligned, valid);
    return out;
}

LoadedDataset load_dataset(const DatasetManifest& manifest) {
    LoadedDataset ds;
    ds.samples.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        LoadedSample s;
        s.image = read_image(manifest.base_dir / e.image_path);
        if (!e.mask_path.empty()) {
            s.mask = read_mask(manifest.base_dir / e.mask_path);
            if (s.mask.height != s.image.height || s.mask.width != s.image.width)
                throw std::runtime_error("image/mask size mismatch for " + e.image_path);
            s.labeled = true;
        }
        if (s.labeled)
            ds.labeled_idx.push_back(static_cast<int>(ds.samples.size()));
        else
            ds.unlabeled_idx.push_back(static_cast<int>(ds.samples.size()));
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

double evaluate_miou(const SegmentationModel& m, const std::vector<LoadedSample>& samples) {
    ConfusionMatrix cm(m.classes);
    for (const auto& s : samples) {
        if (!s.labeled) continue;
        LabelMask pred = argmax(softmax(forward(m, s.image)));
        accumulate(cm, pred, s.mask);
    }
    return miou(cm).mean;
}

namespace {

// Lazy per-run cache of (sample, flipped) -> features. Feature extraction is
// pure, so caching cannot change results, only skip repeated blurs.
class FeatureCache {
public:
    explicit FeatureCache(const std::vector<LoadedSample>* samples) : samples_(samples) {
        slots_.resize(samples->size() * 2);
    }

    const FeatureMap& get(int idx, bool flipped) {
        auto& slot = slots_[static_cast<size_t>(idx) * 2 + (flipped ? 1 : 0)];
        if (!slot) {
            const Image& base = (*samples_)[idx].image;
            slot = extract_features(flipped ? hflip(base) : base);
        }
        return *slot;
    }

private:
    const std::vector<LoadedSample>* samples_;
    std::vector<std::optional<FeatureMap>> slots_;
};

void add_scaled(std::vector<double>& acc, const std::vector<double>& g, double scale) {
    for (size_t k = 0; k < acc.size(); ++k) acc[k] += scale * g[k];
}

double eval_miou_cached(const SegmentationModel& m, const std::vector<LoadedSample>& samples,
                        const std::vector<const FeatureMap*>& feats) {
    ConfusionMatrix cm(m.classes);
    for (size_t k = 0; k < samples.size(); ++k) {
        LabelMask pred = argmax(softmax(forward(m, *feats[k])));
        accumulate(cm, pred, samples[k].mask);
    }
    return miou(cm).mean;
}

}  // namespace

RunReport train(const DatasetManifest& manifest, const TrainConfig& cfg,
                const DatasetManifest* val_manifest, const std::filesystem::path& out_dir) {
    cfg.validate();
    LoadedDataset ds = load_dataset(manifest);
    const int M = static_cast<int>(ds.labeled_idx.size());
    const int N = static_cast<int>(ds.unlabeled_idx.size());
    if (M == 0) throw std::runtime_error("manifest has no labeled samples");
    if (cfg.mode != TrainMode::supervised_only && N == 0)
        throw std::runtime_error("selected mode needs unlabeled samples");
    for (const auto& s : ds.samples) {
        if (!s.labeled) continue;
        for (int32_t v : s.mask.data)
            if (v != kIgnoreLabel && v >= cfg.num_classes)
                throw std::runtime_error("mask label exceeds num_classes");
    }

    LoadedDataset val_ds;
    std::vector<LoadedSample> val_samples;
    if (val_manifest) {
        val_ds = load_dataset(*val_manifest);
        if (val_ds.labeled_idx.empty())
            throw std::runtime_error("validation manifest has no labeled samples");
        for (int idx : val_ds.labeled_idx) val_samples.push_back(val_ds.samples[idx]);
    } else {
        for (int idx : ds.labeled_idx) val_samples.push_back(ds.samples[idx]);
    }
    std::vector<FeatureMap> val_feature_store;
    std::vector<const FeatureMap*> val_features;
    val_feature_store.reserve(val_samples.size());
    for (const auto& s : val_samples) {
        val_feature_store.push_back(extract_features(s.image));
        val_features.push_back(&val_feature_store.back());
    }

    // Unlabeled data drives the epoch length when present so that all modes
    // see identical iteration schedules on the same manifest.
    const int drive = N > 0 ? N : M;
    const long iters_per_epoch = (drive + cfg.batch_size - 1) / cfg.batch_size;
    const long total_iters = static_cast<long>(cfg.epochs) * iters_per_epoch;

    SegmentationModel student = SegmentationModel::zeros(cfg.num_classes);
    SegmentationModel teacher = student;  // begins as a copy

    Rng rng_labeled = Rng::derive(cfg.seed, "labeled-batch");
    Rng rng_unlabeled = Rng::derive(cfg.seed, "unlabeled-batch");
    FeatureCache cache(&ds.samples);

    RunReport report;
    report.seed = cfg.seed;
    const size_t theta_size = student.theta.size();

    long iter = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double ep_sup = 0.0, ep_unsup = 0.0, ep_lr = 0.0;
        double ep_entropy = 0.0, ep_rot = 0.0, ep_trans = 0.0;
        long unl_steps = 0;

        for (long k = 0; k < iters_per_epoch; ++k, ++iter) {
            double lr = poly_lr(cfg.lr_init, iter, total_iters, cfg.poly_power);
            ep_lr = lr;

            // supervised branch
            std::vector<double> g_sup(theta_size, 0.0);
            double sup_loss = 0.0;
            for (int b = 0; b < cfg.batch_size; ++b) {
                int idx = ds.labeled_idx[rng_labeled.below(M)];
                bool flip = rng_labeled.uniform() < cfg.weak_flip_prob;
                const FeatureMap& feat = cache.get(idx, flip);
                LabelMask target = flip ? hflip(ds.samples[idx].mask) : ds.samples[idx].mask;
                LossValue lv = supervised_ce(forward(student, feat), target);
                sup_loss += lv.value / cfg.batch_size;
                add_scaled(g_sup, param_grad(student, feat, lv.grad), 1.0 / cfg.batch_size);
            }

            // unsupervised branch
            std::vector<double> g_unsup(theta_size, 0.0);
            double unsup_loss = 0.0;
            if (cfg.mode != TrainMode::supervised_only) {
                for (int b = 0; b < cfg.batch_size; ++b) {
                    int idx = ds.unlabeled_idx[rng_unlabeled.below(N)];
                    TeacherFeatureFn teacher_feats = [&cache, idx](bool flipped) -> const FeatureMap& {
                        return cache.get(idx, flipped);
                    };
                    UnlabeledOutcome out = unlabeled_step(ds.samples[idx].image, student, teacher,
                                                          cfg, rng_unlabeled, teacher_feats);
                    out.trace.iter = iter;
                    ep_entropy += out.trace.entropy;
                    ep_rot += std::abs(out.trace.rotation_deg);
                    ep_trans += std::hypot(out.trace.dx, out.trace.dy);
                    ++unl_steps;
                    report.traces.push_back(out.trace);
                    if (!out.trace.skipped) {
                        unsup_loss += out.loss.value / cfg.batch_size;
                        add_scaled(g_unsup, param_grad(student, out.student_features, out.loss.grad),
                                   1.0 / cfg.batch_size);
                    }
                }
            }

            add_scaled(g_sup, g_unsup, cfg.lambda);
            student = sgd_step(student, g_sup, lr, cfg.weight_decay);
            teacher = ema_update(teacher, student, cfg.ema_alpha);

            ep_sup += sup_loss;
            ep_unsup += unsup_loss;
        }

        EpochStats st;
        st.epoch = epoch;
        st.lr = ep_lr;
        st.loss_sup = ep_sup / iters_per_epoch;
        st.loss_unsup = ep_unsup / iters_per_epoch;
        st.mean_entropy = unl_steps > 0 ? ep_entropy / unl_steps : 0.0;
        st.mean_abs_rot_deg = unl_steps > 0 ? ep_rot / unl_steps : 0.0;
        st.mean_trans_ratio = unl_steps > 0 ? ep_trans / unl_steps : 0.0;
        st.val_miou = eval_miou_cached(teacher, val_samples, val_features);
        report.epochs.push_back(st);

        if (!std::isfinite(st.loss_sup) || !std::isfinite(st.loss_unsup))
            throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch));
    }

    auto bytes = checkpoint_bytes(teacher);
    report.final_checksum = fnv1a64(bytes.data(), bytes.size());
    report.final_miou = report.epochs.back().val_miou;

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_report_csv(out_dir / "report.csv", report);
        write_trace_csv(out_dir / "trace.csv", report);
        save_checkpoint(out_dir / "checkpoint.asmd", teacher);
    }
    return report;
}

void write_report_csv(const std::filesystem::path& path, const RunReport& report) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << "epoch,lr,loss_sup,loss_unsup,mean_entropy,mean_abs_rot_deg,mean_trans_ratio,val_miou\n";
    char buf[256];
    for (const auto& e : report.epochs) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", e.epoch,
                      e.lr, e.loss_sup, e.loss_unsup, e.mean_entropy, e.mean_abs_rot_deg,
                      e.mean_trans_ratio, e.val_miou);
        f << buf;
    }
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

void write_trace_csv(const std::filesystem::path& path, const RunReport& report) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << "iter,entropy,rotation_deg,dx,dy,valid_count,skipped\n";
    char buf[256];
    for (const auto& t : report.traces) {
        std::snprintf(buf, sizeof(buf), "%ld,%.10g,%.10g,%.10g,%.10g,%d,%d\n", t.iter, t.entropy,
                      t.rotation_deg, t.dx, t.dy, t.valid_count, t.skipped ? 1 : 0);
        f << buf;
    }
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace adaseg
