#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "adaseg/grids.hpp"

namespace adaseg {

/// Synthetic segmentation world: noisy background plus opaque geometric
/// shapes, one shape kind per class. Masks follow the drawn geometry exactly
/// (integer rasterization, no anti-aliasing).
struct ShapesWorldConfig {
    int image_size = 64;   // square canvas
    int num_classes = 4;   // background + circle + square + triangle
    int shapes_min = 1;
    int shapes_max = 3;
    double noise_std = 0.05;
    double color_jitter = 0.12;   // per-image, per-class color wobble
    double illumination = 0.2;    // per-image global brightness shift range
    std::vector<std::array<float, 3>> palette;  // per-class base color; defaulted when empty
    uint64_t seed = 0;

    void validate() const;
    /// Palette with defaults filled in for the configured class count.
    std::vector<std::array<float, 3>> effective_palette() const;
};

/// Hash of every generation-relevant field; stamped into manifests.
uint64_t config_hash(const ShapesWorldConfig& cfg);

/// Deterministic sample: a pure function of (cfg, index).
std::pair<Image, LabelMask> generate_sample(const ShapesWorldConfig& cfg, uint64_t index);

std::vector<std::pair<Image, LabelMask>> generate(const ShapesWorldConfig& cfg, int count);

struct ManifestEntry {
    std::string image_path;
    std::string mask_path;  // empty = unlabeled
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    int labeled_count = 0;
    int unlabeled_count = 0;
    uint64_t config_hash = 0;
    std::filesystem::path base_dir;  // directory paths are resolved against; not serialized
};

/// Deterministic labeled/unlabeled partition of n samples: shuffle by seed,
/// first ceil(ratio*n) keep their masks. Paths follow the img_/mask_ naming
/// convention used by the generator, optionally offset into the index space.
DatasetManifest split(int n, double labeled_ratio, uint64_t seed, uint64_t index_offset = 0);

std::string image_filename(uint64_t index);
std::string mask_filename(uint64_t index);

/// Line-oriented manifest: header
///   ASMANIFEST v1 labeled=<M> unlabeled=<N> confighash=<hex>
/// followed by one `IMG <path> MASK <path|->` line per entry.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Binary PPM (P6), maxval 255; v -> round(v*255) per channel.
void write_image(const std::filesystem::path& path, const Image& img);
Image read_image(const std::filesystem::path& path);

/// Binary PGM (P5), maxval 255; class id = gray value, IGNORE stored as 255.
void write_mask(const std::filesystem::path& path, const LabelMask& mask);
LabelMask read_mask(const std::filesystem::path& path);

/// "ASPM" container: magic, u32 version=1, u32 C,H,W, C*H*W f32, little-endian.
void write_probmap(const std::filesystem::path& path, const ProbMap& p);
ProbMap read_probmap(const std::filesystem::path& path);

}  // namespace adaseg
