#include "adaseg/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "adaseg/rng.hpp"

namespace adaseg {

namespace {

const std::array<float, 3> kDefaultPalette[] = {
    {0.16f, 0.17f, 0.20f},  // background: dark slate
    {0.80f, 0.27f, 0.21f},  // circle: red
    {0.24f, 0.41f, 0.80f},  // square: blue
    {0.85f, 0.76f, 0.29f},  // triangle: yellow
    {0.30f, 0.70f, 0.40f},
    {0.70f, 0.35f, 0.75f},
    {0.90f, 0.55f, 0.20f},
    {0.35f, 0.75f, 0.75f},
};

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

struct Shape {
    int kind;  // 0 circle, 1 square, 2 triangle
    int cls;
    double cx, cy, radius, angle;

    bool contains(double px, double py) const {
        double u = px - cx, v = py - cy;
        switch (kind) {
            case 0:
                return u * u + v * v <= radius * radius;
            case 1: {
                double c = std::cos(angle), s = std::sin(angle);
                double ru = c * u + s * v, rv = -s * u + c * v;
                double half = 0.9 * radius;
                return std::abs(ru) <= half && std::abs(rv) <= half;
            }
            default: {
                // equilateral triangle, circumradius = radius
                double xs[3], ys[3];
                for (int k = 0; k < 3; ++k) {
                    double a = angle + k * 2.0 * std::numbers::pi / 3.0;
                    xs[k] = cx + radius * std::cos(a);
                    ys[k] = cy + radius * std::sin(a);
                }
                double sign = 0.0;
                for (int k = 0; k < 3; ++k) {
                    int k2 = (k + 1) % 3;
                    double cr = (xs[k2] - xs[k]) * (py - ys[k]) - (ys[k2] - ys[k]) * (px - xs[k]);
                    if (cr == 0.0) continue;
                    if (sign == 0.0)
                        sign = cr;
                    else if ((sign > 0.0) != (cr > 0.0))
                        return false;
                }
                return true;
            }
        }
    }
};

// --- low-level PNM plumbing ---------------------------------------------

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::filesystem::path& path, const void* data, size_t n) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

[[noreturn]] void pnm_error(const std::filesystem::path& path, size_t offset, const std::string& msg) {
    throw std::runtime_error(path.string() + ": format error at byte " + std::to_string(offset) +
                             ": " + msg);
}

struct PnmCursor {
    const std::vector<unsigned char>& bytes;
    const std::filesystem::path& path;
    size_t pos = 0;

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            unsigned char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(c)) {
                ++pos;
            } else {
                break;
            }
        }
    }

    int read_int() {
        skip_space_and_comments();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            pnm_error(path, pos, "expected integer");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 24) pnm_error(path, pos, "integer out of range");
            ++pos;
        }
        return static_cast<int>(v);
    }
};

// Parses a P5/P6 header and returns (width, height, payload offset).
std::pair<int, int> parse_pnm_header(const std::vector<unsigned char>& bytes,
                                     const std::filesystem::path& path, const char* magic,
                                     size_t& payload) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != magic[1]) {
        std::string found = bytes.size() >= 2
                                ? std::string(reinterpret_cast<const char*>(bytes.data()), 2)
                                : std::string("<empty>");
        pnm_error(path, 0, std::string("expected ") + magic + ", found " + found);
    }
    PnmCursor cur{bytes, path, 2};
    int w = cur.read_int();
    int h = cur.read_int();
    int maxval = cur.read_int();
    if (w < 1 || h < 1) pnm_error(path, cur.pos, "bad dimensions");
    if (maxval != 255) pnm_error(path, cur.pos, "maxval must be 255");
    if (cur.pos >= bytes.size() || !std::isspace(bytes[cur.pos]))
        pnm_error(path, cur.pos, "expected single whitespace before payload");
    payload = cur.pos + 1;
    return {w, h};
}

void put_u32(std::vector<unsigned char>& buf, uint32_t v) {
    unsigned char b[4];
    std::memcpy(b, &v, 4);
    buf.insert(buf.end(), b, b + 4);
}

uint32_t get_u32(const std::vector<unsigned char>& bytes, size_t off) {
    uint32_t v;
    std::memcpy(&v, bytes.data() + off, 4);
    return v;
}

}  // namespace

// --- ShapesWorld ----------------------------------------------------------

void ShapesWorldConfig::validate() const {
    if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
    if (image_size < 16) throw std::invalid_argument("image_size must be >= 16");
    if (!(noise_std >= 0.0 && noise_std <= 0.2))
        throw std::invalid_argument("noise_std out of [0, 0.2]");
    if (!(illumination >= 0.0 && illumination <= 0.5))
        throw std::invalid_argument("illumination out of [0, 0.5]");
    if (shapes_min < 0 || shapes_max < shapes_min)
        throw std::invalid_argument("bad shapes_per_image range");
    if (!palette.empty() && palette.size() != static_cast<size_t>(num_classes))
        throw std::invalid_argument("palette size must equal num_classes");
}

std::vector<std::array<float, 3>> ShapesWorldConfig::effective_palette() const {
    if (!palette.empty()) return palette;
    std::vector<std::array<float, 3>> p(num_classes);
    for (int c = 0; c < num_classes; ++c)
        p[c] = kDefaultPalette[c % (sizeof(kDefaultPalette) / sizeof(kDefaultPalette[0]))];
    return p;
}

uint64_t config_hash(const ShapesWorldConfig& cfg) {
    std::ostringstream ss;
    ss << "size=" << cfg.image_size << ";classes=" << cfg.num_classes
       << ";shapes=" << cfg.shapes_min << ".." << cfg.shapes_max << ";noise=" << cfg.noise_std
       << ";jitter=" << cfg.color_jitter << ";illum=" << cfg.illumination << ";seed=" << cfg.seed
       << ";palette=";
    for (const auto& col : cfg.effective_palette())
        ss << col[0] << "," << col[1] << "," << col[2] << ";";
    return fnv1a64(ss.str());
}

std::pair<Image, LabelMask> generate_sample(const ShapesWorldConfig& cfg, uint64_t index) {
    cfg.validate();
    const int S = cfg.image_size;
    Rng rng = Rng::derive(cfg.seed, "shapesworld-sample", index);
    auto palette = cfg.effective_palette();

    // Per-image color wobble, drawn for every class up front so the stream
    // layout does not depend on which classes end up used. A global
    // illumination shift then moves every class together: within one image
    // the classes stay separable, across images the clusters wander.
    std::vector<std::array<double, 3>> colors(cfg.num_classes);
    for (int c = 0; c < cfg.num_classes; ++c)
        for (int ch = 0; ch < 3; ++ch)
            colors[c][ch] = palette[c][ch] + rng.uniform(-cfg.color_jitter, cfg.color_jitter);
    double illum = rng.uniform(-cfg.illumination, cfg.illumination);
    for (auto& col : colors)
        for (double& v : col) v += illum;

    int n_shapes = cfg.shapes_min +
                   static_cast<int>(rng.below(static_cast<uint64_t>(cfg.shapes_max - cfg.shapes_min) + 1));
    std::vector<Shape> shapes(n_shapes);
    for (Shape& sh : shapes) {
        sh.cls = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(cfg.num_classes) - 1));
        sh.kind = (sh.cls - 1) % 3;
        sh.cx = rng.uniform(0.15 * S, 0.85 * S);
        sh.cy = rng.uniform(0.15 * S, 0.85 * S);
        sh.radius = rng.uniform(S / 8.0, S / 4.0);
        sh.angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }

    Image img(S, S);
    LabelMask mask(S, S, 0);
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < S; ++j) {
            double px = j + 0.5, py = i + 0.5;
            int cls = 0;
            for (const Shape& sh : shapes)  // later shapes draw on top
                if (sh.contains(px, py)) cls = sh.cls;
            mask.at(i, j) = cls;
            for (int ch = 0; ch < 3; ++ch) img.at(i, j, ch) = clamp01(colors[cls][ch]);
        }
    }
    if (cfg.noise_std > 0.0) {
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j)
                for (int ch = 0; ch < 3; ++ch)
                    img.at(i, j, ch) = clamp01(img.at(i, j, ch) + rng.normal(0.0, cfg.noise_std));
    }
    return {std::move(img), std::move(mask)};
}

std::vector<std::pair<Image, LabelMask>> generate(const ShapesWorldConfig& cfg, int count) {
    if (count < 1) throw std::invalid_argument("count must be >= 1");
    std::vector<std::pair<Image, LabelMask>> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) out.push_back(generate_sample(cfg, k));
    return out;
}

std::string image_filename(uint64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%05llu.ppm", static_cast<unsigned long long>(index));
    return buf;
}

std::string mask_filename(uint64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "mask_%05llu.pgm", static_cast<unsigned long long>(index));
    return buf;
}

DatasetManifest split(int n, double labeled_ratio, uint64_t seed, uint64_t index_offset) {
    if (n < 1) throw std::invalid_argument("split: need at least one sample");
    if (!(labeled_ratio > 0.0 && labeled_ratio <= 1.0))
        throw std::invalid_argument("labeled_ratio out of (0, 1]");

    std::vector<int> order(n);
    for (int k = 0; k < n; ++k) order[k] = k;
    Rng rng = Rng::derive(seed, "split-shuffle");
    for (int k = n - 1; k > 0; --k)
        std::swap(order[k], order[rng.below(static_cast<uint64_t>(k) + 1)]);

    int labeled = static_cast<int>(std::ceil(labeled_ratio * n));
    labeled = std::min(labeled, n);

    DatasetManifest m;
    m.labeled_count = labeled;
    m.unlabeled_count = n - labeled;
    m.entries.reserve(n);
    for (int k = 0; k < n; ++k) {
        uint64_t idx = index_offset + static_cast<uint64_t>(order[k]);
        ManifestEntry e;
        e.image_path = image_filename(idx);
        if (k < labeled) e.mask_path = mask_filename(idx);
        m.entries.push_back(std::move(e));
    }
    return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    char head[128];
    std::snprintf(head, sizeof(head), "ASMANIFEST v1 labeled=%d unlabeled=%d confighash=%016llx\n",
                  m.labeled_count, m.unlabeled_count,
                  static_cast<unsigned long long>(m.config_hash));
    f << head;
    for (const auto& e : m.entries)
        f << "IMG " << e.image_path << " MASK " << (e.mask_path.empty() ? "-" : e.mask_path)
          << "\n";
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open manifest: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty manifest: " + path.string());

    DatasetManifest m;
    m.base_dir = path.parent_path();
    unsigned long long hash = 0;
    int labeled = 0, unlabeled = 0;
    if (std::sscanf(line.c_str(), "ASMANIFEST v1 labeled=%d unlabeled=%d confighash=%llx",
                    &labeled, &unlabeled, &hash) != 3)
        throw std::runtime_error("bad manifest header: " + path.string());
    m.labeled_count = labeled;
    m.unlabeled_count = unlabeled;
    m.config_hash = hash;

    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string img_tag, img, mask_tag, mask;
        if (!(ss >> img_tag >> img >> mask_tag >> mask) || img_tag != "IMG" || mask_tag != "MASK")
            throw std::runtime_error("bad manifest entry: " + line);
        ManifestEntry e;
        e.image_path = img;
        if (mask != "-") e.mask_path = mask;
        m.entries.push_back(std::move(e));
    }
    int count_labeled = 0;
    for (const auto& e : m.entries) count_labeled += !e.mask_path.empty();
    if (count_labeled != m.labeled_count ||
        static_cast<int>(m.entries.size()) != m.labeled_count + m.unlabeled_count)
        throw std::runtime_error("manifest counts do not match entries: " + path.string());
    return m;
}

// --- pixel formats --------------------------------------------------------

void write_image(const std::filesystem::path& path, const Image& img) {
    char head[64];
    std::snprintf(head, sizeof(head), "P6\n%d %d\n255\n", img.width, img.height);
    std::vector<unsigned char> buf(head, head + std::strlen(head));
    buf.reserve(buf.size() + img.data.size());
    for (float v : img.data) {
        long b = std::lround(static_cast<double>(v) * 255.0);
        buf.push_back(static_cast<unsigned char>(std::clamp(b, 0l, 255l)));
    }
    write_file(path, buf.data(), buf.size());
}

Image read_image(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    size_t payload = 0;
    auto [w, h] = parse_pnm_header(bytes, path, "P6", payload);
    size_t need = static_cast<size_t>(w) * h * 3;
    if (bytes.size() - payload < need)
        pnm_error(path, bytes.size(),
                  "truncated payload: expected " + std::to_string(need) + " bytes, got " +
                      std::to_string(bytes.size() - payload));
    Image img(h, w);
    for (size_t k = 0; k < need; ++k)
        img.data[k] = static_cast<float>(bytes[payload + k]) / 255.0f;
    return img;
}

void write_mask(const std::filesystem::path& path, const LabelMask& mask) {
    char head[64];
    std::snprintf(head, sizeof(head), "P5\n%d %d\n255\n", mask.width, mask.height);
    std::vector<unsigned char> buf(head, head + std::strlen(head));
    buf.reserve(buf.size() + mask.data.size());
    for (int32_t v : mask.data) {
        if (v == kIgnoreLabel) {
            buf.push_back(255);
        } else if (v >= 0 && v <= 254) {
            buf.push_back(static_cast<unsigned char>(v));
        } else {
            throw std::invalid_argument("mask class " + std::to_string(v) +
                                        " not representable in PGM (0..254, 255 reserved)");
        }
    }
    write_file(path, buf.data(), buf.size());
}

LabelMask read_mask(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    size_t payload = 0;
    auto [w, h] = parse_pnm_header(bytes, path, "P5", payload);
    size_t need = static_cast<size_t>(w) * h;
    if (bytes.size() - payload < need)
        pnm_error(path, bytes.size(),
                  "truncated payload: expected " + std::to_string(need) + " bytes, got " +
                      std::to_string(bytes.size() - payload));
    LabelMask mask(h, w);
    for (size_t k = 0; k < need; ++k) {
        unsigned char b = bytes[payload + k];
        mask.data[k] = (b == 255) ? kIgnoreLabel : b;
    }
    return mask;
}

void write_probmap(const std::filesystem::path& path, const ProbMap& p) {
    std::vector<unsigned char> buf;
    buf.reserve(20 + 4 * p.data.size());
    buf.insert(buf.end(), {'A', 'S', 'P', 'M'});
    put_u32(buf, 1u);
    put_u32(buf, static_cast<uint32_t>(p.classes));
    put_u32(buf, static_cast<uint32_t>(p.height));
    put_u32(buf, static_cast<uint32_t>(p.width));
    size_t off = buf.size();
    buf.resize(off + 4 * p.data.size());
    std::memcpy(buf.data() + off, p.data.data(), 4 * p.data.size());
    write_file(path, buf.data(), buf.size());
}

ProbMap read_probmap(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    if (bytes.size() < 20) pnm_error(path, bytes.size(), "file shorter than ASPM header");
    if (std::memcmp(bytes.data(), "ASPM", 4) != 0) pnm_error(path, 0, "bad magic, expected ASPM");
    uint32_t version = get_u32(bytes, 4), C = get_u32(bytes, 8), H = get_u32(bytes, 12),
             W = get_u32(bytes, 16);
    if (version != 1) pnm_error(path, 4, "unsupported version " + std::to_string(version));
    if (C < 2 || C > 4096 || H < 1 || W < 1 || H > (1u << 20) || W > (1u << 20))
        pnm_error(path, 8, "header dimensions out of range");
    size_t need = static_cast<size_t>(C) * H * W * 4;
    if (bytes.size() - 20 != need)
        pnm_error(path, bytes.size(),
                  "payload size mismatch: expected " + std::to_string(need) + " bytes, got " +
                      std::to_string(bytes.size() - 20));
    ProbMap p(static_cast<int>(C), static_cast<int>(H), static_cast<int>(W));
    std::memcpy(p.data.data(), bytes.data() + 20, need);
    return p;
}

}  // namespace adaseg
