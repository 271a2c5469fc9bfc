#pragma once

#include <utility>

#include "adaseg/grids.hpp"

namespace adaseg {

/// Rigid spatial augmentation: rotation about the image center (degrees,
/// counterclockwise as displayed), followed by a translation given as
/// fractions of the canvas size.
struct SpatialTransform {
    double rotation_deg = 0.0;
    double translate_dx = 0.0;  // fraction of width, positive moves content right
    double translate_dy = 0.0;  // fraction of height, positive moves content down

    static SpatialTransform identity() { return {}; }
};

/// Validates ranges and normalizes the angle into (-360, 360).
SpatialTransform make_transform(double rotation_deg, double dx, double dy);

enum class InterpolationKind { bilinear, nearest };

/// Inverse coordinate map of the rotate-then-translate transform. All apply_*
/// operations and validity_of sample through this one map so their geometry
/// (and in particular their validity predicate) is bit-identical.
class CoordMap {
public:
    CoordMap(const SpatialTransform& t, int height, int width);

    /// Source coordinate sampled for output pixel (row i, col j). x is the
    /// column axis, y the row axis; pixel (i,j) has center (j+0.5, i+0.5).
    void source(int i, int j, double& xs, double& ys) const;

    /// Same map for an arbitrary output-space point.
    void source_point(double xo, double yo, double& xs, double& ys) const;

    /// True when the source coordinate lies on the canvas.
    bool inside(double xs, double ys) const;

private:
    double cos_, sin_;
    double cx_, cy_;  // canvas center
    double tx_, ty_;  // translation in pixels
    int height_, width_;
};

/// Rotation then translation, bilinear by default (inverse-mapped sampling).
/// Out-of-canvas pixels are zero-filled and marked invalid.
std::pair<Image, ValidityMask> apply_to_image(const Image& img, const SpatialTransform& t,
                                              InterpolationKind interp = InterpolationKind::bilinear);

/// Nearest-neighbor only; out-of-canvas pixels become IGNORE and invalid.
std::pair<LabelMask, ValidityMask> apply_to_mask(const LabelMask& mask, const SpatialTransform& t);

/// Nearest-neighbor; the whole class vector moves as a unit so valid pixels
/// keep their exact per-pixel normalization. Out-of-canvas pixels become
/// all-zero columns and invalid.
std::pair<ProbMap, ValidityMask> apply_to_probmap(const ProbMap& p, const SpatialTransform& t);

/// Inverse transform, expressed back in rotate-then-translate form. Exact for
/// square canvases (translation fractions are treated isotropically).
SpatialTransform invert(const SpatialTransform& t);

/// The set of output pixels whose inverse-mapped source stays on canvas.
ValidityMask validity_of(const SpatialTransform& t, int height, int width);

/// out = clamp(contrast * (v - 0.5) + 0.5 + brightness, 0, 1). Geometry is
/// untouched. brightness must be in [-0.5, 0.5], contrast in [0.5, 1.5].
Image photometric_jitter(const Image& img, double brightness, double contrast);

}  // namespace adaseg
