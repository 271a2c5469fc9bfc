#include "adaseg/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace adaseg {

namespace {

using Kind = MappingStrategy::Kind;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
    throw std::invalid_argument("config: " + key + ": " + why);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing junk");
        return d;
    } catch (const std::exception&) {
        bad_key(key, "expected number, got '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing junk");
        return static_cast<int>(d);
    } catch (const std::exception&) {
        bad_key(key, "expected integer, got '" + v + "'");
    }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing junk");
        return d;
    } catch (const std::exception&) {
        bad_key(key, "expected unsigned integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    bad_key(key, "expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(v);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

std::string palette_to_hex(const std::vector<std::array<float, 3>>& palette) {
    std::string out;
    char buf[8];
    for (size_t k = 0; k < palette.size(); ++k) {
        if (k) out += ",";
        int r = static_cast<int>(std::lround(palette[k][0] * 255.0));
        int g = static_cast<int>(std::lround(palette[k][1] * 255.0));
        int b = static_cast<int>(std::lround(palette[k][2] * 255.0));
        std::snprintf(buf, sizeof(buf), "%02x%02x%02x", r, g, b);
        out += buf;
    }
    return out;
}

std::vector<std::array<float, 3>> hex_to_palette(const std::string& key, const std::string& v) {
    std::vector<std::array<float, 3>> out;
    for (const std::string& item : split_list(v)) {
        if (item.size() != 6 || item.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
            bad_key(key, "expected rrggbb hex colors, got '" + item + "'");
        unsigned rgb = static_cast<unsigned>(std::stoul(item, nullptr, 16));
        out.push_back({static_cast<float>((rgb >> 16) & 0xff) / 255.0f,
                       static_cast<float>((rgb >> 8) & 0xff) / 255.0f,
                       static_cast<float>(rgb & 0xff) / 255.0f});
    }
    return out;
}

}  // namespace

std::string to_string(TrainMode m) {
    switch (m) {
        case TrainMode::supervised_only: return "supervised_only";
        case TrainMode::asaug: return "asaug";
        case TrainMode::wscr_ce_baseline: return "wscr_ce_baseline";
    }
    return "?";
}

TrainMode parse_train_mode(const std::string& v) {
    if (v == "supervised_only") return TrainMode::supervised_only;
    if (v == "asaug") return TrainMode::asaug;
    if (v == "wscr_ce_baseline") return TrainMode::wscr_ce_baseline;
    throw std::invalid_argument("config: train.mode: unknown mode '" + v + "'");
}

std::string to_string(TeacherTargets t) {
    return t == TeacherTargets::soft ? "soft" : "hard";
}

TeacherTargets parse_teacher_targets(const std::string& v) {
    if (v == "soft") return TeacherTargets::soft;
    if (v == "hard") return TeacherTargets::hard;
    throw std::invalid_argument("config: train.teacher_targets: unknown value '" + v + "'");
}

std::string to_string(Kind k) {
    switch (k) {
        case Kind::eaw: return "eaw";
        case Kind::fixed: return "fixed";
        case Kind::fixed_high: return "fixed_high";
        case Kind::bipart: return "bipart";
        case Kind::range_dyn: return "range_dyn";
    }
    return "?";
}

Kind parse_strategy(const std::string& v) {
    if (v == "eaw") return Kind::eaw;
    if (v == "fixed") return Kind::fixed;
    if (v == "fixed_high") return Kind::fixed_high;
    if (v == "bipart") return Kind::bipart;
    if (v == "range_dyn") return Kind::range_dyn;
    throw std::invalid_argument("config: eaw.strategy: unknown strategy '" + v + "'");
}

void ExperimentConfig::validate() const {
    data.validate();
    train.validate();
    if (count < 1) throw std::invalid_argument("config: data.count must be >= 1");
    if (val_count < 0) throw std::invalid_argument("config: data.val_count must be >= 0");
    if (!(labeled_ratio > 0.0 && labeled_ratio <= 1.0))
        throw std::invalid_argument("config: data.labeled_ratio out of (0, 1]");
    if (ablate_seeds.empty()) throw std::invalid_argument("config: ablate.seeds must be non-empty");
    if (train.num_classes != data.num_classes)
        throw std::invalid_argument("config: class count mismatch");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                            ": unterminated section header");
            section = line.substr(1, line.size() - 2);
            if (section != "data" && section != "train" && section != "eaw" && section != "ablate")
                throw std::invalid_argument("config: unknown section [" + section + "]");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        std::string qkey = section + "." + key;

        if (section == "data") {
            if (key == "image_size") cfg.data.image_size = to_int(qkey, val);
            else if (key == "num_classes") cfg.data.num_classes = to_int(qkey, val);
            else if (key == "count") cfg.count = to_int(qkey, val);
            else if (key == "val_count") cfg.val_count = to_int(qkey, val);
            else if (key == "labeled_ratio") cfg.labeled_ratio = to_double(qkey, val);
            else if (key == "shapes_min") cfg.data.shapes_min = to_int(qkey, val);
            else if (key == "shapes_max") cfg.data.shapes_max = to_int(qkey, val);
            else if (key == "noise_std") cfg.data.noise_std = to_double(qkey, val);
            else if (key == "color_jitter") cfg.data.color_jitter = to_double(qkey, val);
            else if (key == "illumination") cfg.data.illumination = to_double(qkey, val);
            else if (key == "palette") cfg.data.palette = hex_to_palette(qkey, val);
            else if (key == "seed") cfg.data.seed = to_u64(qkey, val);
            else bad_key(qkey, "unknown key");
        } else if (section == "train") {
            if (key == "mode") cfg.train.mode = parse_train_mode(val);
            else if (key == "lr_init") cfg.train.lr_init = to_double(qkey, val);
            else if (key == "poly_power") cfg.train.poly_power = to_double(qkey, val);
            else if (key == "weight_decay") cfg.train.weight_decay = to_double(qkey, val);
            else if (key == "lambda") cfg.train.lambda = to_double(qkey, val);
            else if (key == "epochs") cfg.train.epochs = to_int(qkey, val);
            else if (key == "batch_size") cfg.train.batch_size = to_int(qkey, val);
            else if (key == "ema_alpha") cfg.train.ema_alpha = to_double(qkey, val);
            else if (key == "teacher_targets") cfg.train.teacher_targets = parse_teacher_targets(val);
            else if (key == "weak_flip_prob") cfg.train.weak_flip_prob = to_double(qkey, val);
            else if (key == "seed") cfg.train.seed = to_u64(qkey, val);
            else bad_key(qkey, "unknown key");
        } else if (section == "eaw") {
            EawConfig& e = cfg.train.eaw;
            if (key == "strategy") e.strategy.kind = parse_strategy(val);
            else if (key == "k_r") e.k_r = to_double(qkey, val);
            else if (key == "k_t") e.k_t = to_double(qkey, val);
            else if (key == "d_r") e.d_r = to_double(qkey, val);
            else if (key == "d_t") e.d_t = to_double(qkey, val);
            else if (key == "r_max") e.r_max = to_double(qkey, val);
            else if (key == "t_max") e.t_max = to_double(qkey, val);
            else if (key == "normalize_entropy") e.normalize_entropy = to_bool(qkey, val);
            else if (key == "clamp_output") e.clamp_output = to_bool(qkey, val);
            else if (key == "fixed_angle_deg") e.strategy.fixed_angle_deg = to_double(qkey, val);
            else if (key == "fixed_ratio") e.strategy.fixed_ratio = to_double(qkey, val);
            else if (key == "high_angle_deg") e.strategy.high_angle_deg = to_double(qkey, val);
            else if (key == "high_ratio") e.strategy.high_ratio = to_double(qkey, val);
            else if (key == "bipart_threshold") e.strategy.bipart_threshold = to_double(qkey, val);
            else if (key == "range_breaks") {
                auto items = split_list(val);
                if (items.size() != 2) bad_key(qkey, "expected 2 comma-separated values");
                for (int k = 0; k < 2; ++k) e.strategy.range_breaks[k] = to_double(qkey, items[k]);
            } else if (key == "range_angles") {
                auto items = split_list(val);
                if (items.size() != 3) bad_key(qkey, "expected 3 comma-separated values");
                for (int k = 0; k < 3; ++k) e.strategy.range_angles[k] = to_double(qkey, items[k]);
            } else if (key == "range_ratios") {
                auto items = split_list(val);
                if (items.size() != 3) bad_key(qkey, "expected 3 comma-separated values");
                for (int k = 0; k < 3; ++k) e.strategy.range_ratios[k] = to_double(qkey, items[k]);
            } else bad_key(qkey, "unknown key");
        } else if (section == "ablate") {
            if (key == "seeds") {
                cfg.ablate_seeds.clear();
                for (const std::string& s : split_list(val))
                    cfg.ablate_seeds.push_back(to_u64(qkey, s));
            } else bad_key(qkey, "unknown key");
        } else {
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        ": key outside any section");
        }
    }
    cfg.train.num_classes = cfg.data.num_classes;
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config not found: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string print_config(const ExperimentConfig& cfg) {
    const EawConfig& e = cfg.train.eaw;
    std::ostringstream out;
    out << "[data]\n"
        << "image_size = " << cfg.data.image_size << "\n"
        << "num_classes = " << cfg.data.num_classes << "\n"
        << "count = " << cfg.count << "\n"
        << "val_count = " << cfg.val_count << "\n"
        << "labeled_ratio = " << fmt(cfg.labeled_ratio) << "\n"
        << "shapes_min = " << cfg.data.shapes_min << "\n"
        << "shapes_max = " << cfg.data.shapes_max << "\n"
        << "noise_std = " << fmt(cfg.data.noise_std) << "\n"
        << "color_jitter = " << fmt(cfg.data.color_jitter) << "\n"
        << "illumination = " << fmt(cfg.data.illumination) << "\n"
        << "palette = " << palette_to_hex(cfg.data.palette) << "\n"
        << "seed = " << cfg.data.seed << "\n"
        << "\n[train]\n"
        << "mode = " << to_string(cfg.train.mode) << "\n"
        << "lr_init = " << fmt(cfg.train.lr_init) << "\n"
        << "poly_power = " << fmt(cfg.train.poly_power) << "\n"
        << "weight_decay = " << fmt(cfg.train.weight_decay) << "\n"
        << "lambda = " << fmt(cfg.train.lambda) << "\n"
        << "epochs = " << cfg.train.epochs << "\n"
        << "batch_size = " << cfg.train.batch_size << "\n"
        << "ema_alpha = " << fmt(cfg.train.ema_alpha) << "\n"
        << "teacher_targets = " << to_string(cfg.train.teacher_targets) << "\n"
        << "weak_flip_prob = " << fmt(cfg.train.weak_flip_prob) << "\n"
        << "seed = " << cfg.train.seed << "\n"
        << "\n[eaw]\n"
        << "strategy = " << to_string(e.strategy.kind) << "\n"
        << "k_r = " << fmt(e.k_r) << "\n"
        << "k_t = " << fmt(e.k_t) << "\n"
        << "d_r = " << fmt(e.d_r) << "\n"
        << "d_t = " << fmt(e.d_t) << "\n"
        << "r_max = " << fmt(e.r_max) << "\n"
        << "t_max = " << fmt(e.t_max) << "\n"
        << "normalize_entropy = " << (e.normalize_entropy ? "true" : "false") << "\n"
        << "clamp_output = " << (e.clamp_output ? "true" : "false") << "\n"
        << "fixed_angle_deg = " << fmt(e.strategy.fixed_angle_deg) << "\n"
        << "fixed_ratio = " << fmt(e.strategy.fixed_ratio) << "\n"
        << "high_angle_deg = " << fmt(e.strategy.high_angle_deg) << "\n"
        << "high_ratio = " << fmt(e.strategy.high_ratio) << "\n"
        << "bipart_threshold = " << fmt(e.strategy.bipart_threshold) << "\n"
        << "range_breaks = " << fmt(e.strategy.range_breaks[0]) << ","
        << fmt(e.strategy.range_breaks[1]) << "\n"
        << "range_angles = " << fmt(e.strategy.range_angles[0]) << ","
        << fmt(e.strategy.range_angles[1]) << "," << fmt(e.strategy.range_angles[2]) << "\n"
        << "range_ratios = " << fmt(e.strategy.range_ratios[0]) << ","
        << fmt(e.strategy.range_ratios[1]) << "," << fmt(e.strategy.range_ratios[2]) << "\n"
        << "\n[ablate]\n"
        << "seeds = ";
    for (size_t k = 0; k < cfg.ablate_seeds.size(); ++k)
        out << (k ? "," : "") << cfg.ablate_seeds[k];
    out << "\n";
    return out.str();
}

std::string config_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    const EawConfig& e = cfg.train.eaw;
    j["data"] = {{"image_size", cfg.data.image_size},
                 {"num_classes", cfg.data.num_classes},
                 {"count", cfg.count},
                 {"val_count", cfg.val_count},
                 {"labeled_ratio", cfg.labeled_ratio},
                 {"shapes_min", cfg.data.shapes_min},
                 {"shapes_max", cfg.data.shapes_max},
                 {"noise_std", cfg.data.noise_std},
                 {"color_jitter", cfg.data.color_jitter},
                 {"illumination", cfg.data.illumination},
                 {"palette", palette_to_hex(cfg.data.palette)},
                 {"seed", cfg.data.seed}};
    j["train"] = {{"mode", to_string(cfg.train.mode)},
                  {"lr_init", cfg.train.lr_init},
                  {"poly_power", cfg.train.poly_power},
                  {"weight_decay", cfg.train.weight_decay},
                  {"lambda", cfg.train.lambda},
                  {"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"ema_alpha", cfg.train.ema_alpha},
                  {"teacher_targets", to_string(cfg.train.teacher_targets)},
                  {"weak_flip_prob", cfg.train.weak_flip_prob},
                  {"seed", cfg.train.seed}};
    j["eaw"] = {{"strategy", to_string(e.strategy.kind)},
                {"k_r", e.k_r},
                {"k_t", e.k_t},
                {"d_r", e.d_r},
                {"d_t", e.d_t},
                {"r_max", e.r_max},
                {"t_max", e.t_max},
                {"normalize_entropy", e.normalize_entropy},
                {"clamp_output", e.clamp_output}};
    j["ablate"] = {{"seeds", cfg.ablate_seeds}};
    return j.dump(2);
}

}  // namespace adaseg
