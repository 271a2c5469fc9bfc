#include "adaseg/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace adaseg {

namespace {

double normalize_angle(double deg) {
    double a = std::fmod(deg, 360.0);
    return a;  // fmod already yields (-360, 360)
}

// Nearest pixel index for a coordinate known to be inside [0, extent].
int nearest_index(double coord, int extent) {
    int k = static_cast<int>(std::floor(coord));
    return std::min(std::max(k, 0), extent - 1);
}

}  // namespace

SpatialTransform make_transform(double rotation_deg, double dx, double dy) {
    if (!std::isfinite(rotation_deg) || !std::isfinite(dx) || !std::isfinite(dy))
        throw std::invalid_argument("non-finite transform parameter");
    if (std::abs(dx) > 1.0 || std::abs(dy) > 1.0)
        throw std::invalid_argument("translation fraction out of [-1, 1]");
    return {normalize_angle(rotation_deg), dx, dy};
}

CoordMap::CoordMap(const SpatialTransform& t, int height, int width)
    : cx_(width / 2.0),
      cy_(height / 2.0),
      tx_(t.translate_dx * width),
      ty_(t.translate_dy * height),
      height_(height),
      width_(width) {
    double rad = t.rotation_deg * std::numbers::pi / 180.0;
    cos_ = std::cos(rad);
    sin_ = std::sin(rad);
}

void CoordMap::source(int i, int j, double& xs, double& ys) const {
    source_point(j + 0.5, i + 0.5, xs, ys);
}

void CoordMap::source_point(double xo, double yo, double& xs, double& ys) const {
    // Output point, pulled back through translation then rotation.
    double u = xo - cx_ - tx_;
    double v = yo - cy_ - ty_;
    xs = cos_ * u - sin_ * v + cx_;
    ys = sin_ * u + cos_ * v + cy_;
}

bool CoordMap::inside(double xs, double ys) const {
    return xs >= 0.0 && xs <= static_cast<double>(width_) && ys >= 0.0 &&
           ys <= static_cast<double>(height_);
}

std::pair<Image, ValidityMask> apply_to_image(const Image& img, const SpatialTransform& t,
                                              InterpolationKind interp) {
    const int H = img.height, W = img.width;
    Image out(H, W, 0.0f);
    ValidityMask valid(H, W, false);
    CoordMap map(t, H, W);

    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            double xs, ys;
            map.source(i, j, xs, ys);
            if (!map.inside(xs, ys)) continue;
            valid.set(i, j, true);
            if (interp == InterpolationKind::nearest) {
                int si = nearest_index(ys, H);
                int sj = nearest_index(xs, W);
                for (int c = 0; c < 3; ++c) out.at(i, j, c) = img.at(si, sj, c);
            } else {
                double xf = xs - 0.5, yf = ys - 0.5;
                int j0 = static_cast<int>(std::floor(xf));
                int i0 = static_cast<int>(std::floor(yf));
                double fx = xf - j0, fy = yf - i0;
                int j0c = std::clamp(j0, 0, W - 1), j1c = std::clamp(j0 + 1, 0, W - 1);
                int i0c = std::clamp(i0, 0, H - 1), i1c = std::clamp(i0 + 1, 0, H - 1);
                for (int c = 0; c < 3; ++c) {
                    double top = (1.0 - fx) * img.at(i0c, j0c, c) + fx * img.at(i0c, j1c, c);
                    double bot = (1.0 - fx) * img.at(i1c, j0c, c) + fx * img.at(i1c, j1c, c);
                    out.at(i, j, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
                }
            }
        }
    }
    return {std::move(out), std::move(valid)};
}

std::pair<LabelMask, ValidityMask> apply_to_mask(const LabelMask& mask, const SpatialTransform& t) {
    const int H = mask.height, W = mask.width;
    LabelMask out(H, W, kIgnoreLabel);
    ValidityMask valid(H, W, false);
    CoordMap map(t, H, W);

    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            double xs, ys;
            map.source(i, j, xs, ys);
            if (!map.inside(xs, ys)) continue;
            valid.set(i, j, true);
            out.at(i, j) = mask.at(nearest_index(ys, H), nearest_index(xs, W));
        }
    }
    return {std::move(out), std::move(valid)};
}

std::pair<ProbMap, ValidityMask> apply_to_probmap(const ProbMap& p, const SpatialTransform& t) {
    const int H = p.height, W = p.width, C = p.classes;
    ProbMap out(C, H, W, 0.0f);
    ValidityMask valid(H, W, false);
    CoordMap map(t, H, W);

    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            double xs, ys;
            map.source(i, j, xs, ys);
            if (!map.inside(xs, ys)) continue;
            valid.set(i, j, true);
            int si = nearest_index(ys, H);
            int sj = nearest_index(xs, W);
            for (int c = 0; c < C; ++c) out.at(c, i, j) = p.at(c, si, sj);
        }
    }
    return {std::move(out), std::move(valid)};
}

SpatialTransform invert(const SpatialTransform& t) {
    double rad = t.rotation_deg * std::numbers::pi / 180.0;
    double c = std::cos(rad), s = std::sin(rad);
    // Undo translation first, then rotation; folded back into
    // rotate-then-translate form the translation becomes -R(-theta) * t.
    SpatialTransform inv;
    inv.rotation_deg = normalize_angle(-t.rotation_deg);
    inv.translate_dx = -(c * t.translate_dx - s * t.translate_dy);
    inv.translate_dy = -(s * t.translate_dx + c * t.translate_dy);
    return inv;
}

ValidityMask validity_of(const SpatialTransform& t, int height, int width) {
    ValidityMask valid(height, width, false);
    CoordMap map(t, height, width);
    for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
            double xs, ys;
            map.source(i, j, xs, ys);
            if (map.inside(xs, ys)) valid.set(i, j, true);
        }
    }
    return valid;
}

Image photometric_jitter(const Image& img, double brightness, double contrast) {
    if (!(brightness >= -0.5 && brightness <= 0.5))
        throw std::invalid_argument("brightness out of [-0.5, 0.5]");
    if (!(contrast >= 0.5 && contrast <= 1.5))
        throw std::invalid_argument("contrast out of [0.5, 1.5]");
    Image out(img.height, img.width);
    for (size_t k = 0; k < img.data.size(); ++k) {
        double v = contrast * (img.data[k] - 0.5) + 0.5 + brightness;
        out.data[k] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

}  // namespace adaseg
