#include "adaseg/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace adaseg {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const int half = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> w(2 * half + 1);
    double wsum = 0.0;
    for (int k = -half; k <= half; ++k) {
        w[k + half] = std::exp(-(static_cast<double>(k) * k) / (2.0 * sigma * sigma));
        wsum += w[k + half];
    }
    for (double& v : w) v /= wsum;
    return w;
}

// Separable Gaussian blur of one channel plane, kernel truncated at +-3
// sigma, borders clamped. Tap-outer loops keep the inner adds contiguous.
void blur_plane(const double* src, int H, int W, const std::vector<double>& w, double* tmp,
                double* dst) {
    const int half = (static_cast<int>(w.size()) - 1) / 2;
    std::fill(tmp, tmp + static_cast<size_t>(H) * W, 0.0);
    for (int k = -half; k <= half; ++k) {
        const double wk = w[k + half];
        for (int i = 0; i < H; ++i) {
            const double* row = src + static_cast<size_t>(i) * W;
            double* trow = tmp + static_cast<size_t>(i) * W;
            int j = 0;
            for (; j < std::min(std::max(-k, 0), W); ++j) trow[j] += wk * row[0];
            int hi = std::min(W, W - k);
            for (; j < hi; ++j) trow[j] += wk * row[j + k];
            for (; j < W; ++j) trow[j] += wk * row[W - 1];
        }
    }
    std::fill(dst, dst + static_cast<size_t>(H) * W, 0.0);
    for (int k = -half; k <= half; ++k) {
        const double wk = w[k + half];
        for (int i = 0; i < H; ++i) {
            int ii = std::min(std::max(i + k, 0), H - 1);
            const double* trow = tmp + static_cast<size_t>(ii) * W;
            double* drow = dst + static_cast<size_t>(i) * W;
            for (int j = 0; j < W; ++j) drow[j] += wk * trow[j];
        }
    }
}

void check_model(const SegmentationModel& m) {
    if (m.classes < 2) throw std::invalid_argument("model needs at least 2 classes");
    if (m.theta.size() != static_cast<size_t>(m.classes) * m.features)
        throw std::invalid_argument("theta size does not match C x F");
}

void put_u32(std::vector<unsigned char>& buf, uint32_t v) {
    unsigned char b[4];
    std::memcpy(b, &v, 4);
    buf.insert(buf.end(), b, b + 4);
}

}  // namespace

FeatureMap extract_features(const Image& img) {
    static const std::vector<double> kKernel2 = gaussian_kernel(2.0);
    static const std::vector<double> kKernel5 = gaussian_kernel(5.0);

    const int H = img.height, W = img.width;
    const size_t plane = static_cast<size_t>(H) * W;
    FeatureMap feat(kFeatureCount, H, W);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (int c = 0; c < 3; ++c) feat.at(c, i, j) = img.at(i, j, c);

    std::vector<double> tmp(plane);
    for (int c = 0; c < 3; ++c) {
        const double* raw = feat.data.data() + static_cast<size_t>(c) * plane;
        blur_plane(raw, H, W, kKernel2, tmp.data(), feat.data.data() + (3 + c) * plane);
        blur_plane(raw, H, W, kKernel5, tmp.data(), feat.data.data() + (6 + c) * plane);
    }

    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            feat.at(9, i, j) = (j + 0.5) / W;
            feat.at(10, i, j) = (i + 0.5) / H;
            feat.at(11, i, j) = 1.0;
        }
    }
    return feat;
}

LogitMap forward(const SegmentationModel& m, const FeatureMap& feat) {
    check_model(m);
    if (feat.features != m.features) throw std::invalid_argument("feature count mismatch");
    const int H = feat.height, W = feat.width, C = m.classes, F = m.features;
    LogitMap z(C, H, W);
    const size_t plane = static_cast<size_t>(H) * W;
    for (int c = 0; c < C; ++c) {
        for (int f = 0; f < F; ++f) {
            const double wcf = m.weight(c, f);
            if (wcf == 0.0) continue;
            const double* src = feat.data.data() + static_cast<size_t>(f) * plane;
            double* dst = z.data.data() + static_cast<size_t>(c) * plane;
            for (size_t k = 0; k < plane; ++k) dst[k] += wcf * src[k];
        }
    }
    return z;
}

LogitMap forward(const SegmentationModel& m, const Image& img) {
    return forward(m, extract_features(img));
}

std::vector<double> param_grad(const SegmentationModel& m, const FeatureMap& feat,
                               const LogitMap& dL_dlogits) {
    check_model(m);
    if (dL_dlogits.classes != m.classes || dL_dlogits.height != feat.height ||
        dL_dlogits.width != feat.width)
        throw std::invalid_argument("param_grad: shape mismatch");
    const int C = m.classes, F = m.features;
    const size_t plane = static_cast<size_t>(feat.height) * feat.width;
    std::vector<double> g(static_cast<size_t>(C) * F, 0.0);
    for (int c = 0; c < C; ++c) {
        const double* up = dL_dlogits.data.data() + static_cast<size_t>(c) * plane;
        for (int f = 0; f < F; ++f) {
            const double* src = feat.data.data() + static_cast<size_t>(f) * plane;
            double acc = 0.0;
            for (size_t k = 0; k < plane; ++k) acc += up[k] * src[k];
            g[static_cast<size_t>(c) * F + f] = acc;
        }
    }
    return g;
}

std::vector<double> param_grad(const SegmentationModel& m, const Image& img,
                               const LogitMap& dL_dlogits) {
    return param_grad(m, extract_features(img), dL_dlogits);
}

SegmentationModel sgd_step(const SegmentationModel& m, const std::vector<double>& grad,
                           double lr, double weight_decay) {
    check_model(m);
    if (grad.size() != m.theta.size()) throw std::invalid_argument("sgd_step: gradient shape mismatch");
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
    SegmentationModel out = m;
    for (size_t k = 0; k < out.theta.size(); ++k) {
        double th = out.theta[k];
        out.theta[k] = static_cast<float>(th - lr * (grad[k] + weight_decay * th));
    }
    return out;
}

SegmentationModel ema_update(const SegmentationModel& teacher, const SegmentationModel& student,
                             double alpha) {
    if (teacher.theta.size() != student.theta.size() || teacher.classes != student.classes)
        throw std::invalid_argument("ema_update: parameter shapes differ");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha out of [0, 1]");
    SegmentationModel out = teacher;
    for (size_t k = 0; k < out.theta.size(); ++k) {
        out.theta[k] = static_cast<float>(alpha * static_cast<double>(teacher.theta[k]) +
                                          (1.0 - alpha) * static_cast<double>(student.theta[k]));
    }
    return out;
}

std::vector<unsigned char> checkpoint_bytes(const SegmentationModel& m) {
    check_model(m);
    std::vector<unsigned char> buf;
    buf.reserve(16 + 4 * m.theta.size());
    const char magic[4] = {'A', 'S', 'M', 'D'};
    buf.insert(buf.end(), magic, magic + 4);
    put_u32(buf, 1u);
    put_u32(buf, static_cast<uint32_t>(m.classes));
    put_u32(buf, static_cast<uint32_t>(m.features));
    size_t off = buf.size();
    buf.resize(off + 4 * m.theta.size());
    std::memcpy(buf.data() + off, m.theta.data(), 4 * m.theta.size());
    return buf;
}

void save_checkpoint(const std::filesystem::path& path, const SegmentationModel& m) {
    auto bytes = checkpoint_bytes(m);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("checkpoint write failed: " + path.string());
}

SegmentationModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "ASMD")
        throw std::runtime_error("checkpoint magic mismatch (expected ASMD): " + path.string());
    uint32_t version = 0, c = 0, feat = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&c), 4);
    f.read(reinterpret_cast<char*>(&feat), 4);
    if (!f || version != 1) throw std::runtime_error("unsupported checkpoint version");
    if (c < 2 || c > 4096 || feat == 0 || feat > 4096)
        throw std::runtime_error("checkpoint header out of range");
    SegmentationModel m;
    m.classes = static_cast<int>(c);
    m.features = static_cast<int>(feat);
    m.theta.resize(static_cast<size_t>(c) * feat);
    f.read(reinterpret_cast<char*>(m.theta.data()), static_cast<std::streamsize>(4 * m.theta.size()));
    if (!f) throw std::runtime_error("checkpoint truncated: " + path.string());
    return m;
}

}  // namespace adaseg
