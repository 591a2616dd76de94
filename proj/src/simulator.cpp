#include "fafilter/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fafilter/errors.hpp"
#include "fafilter/kvdoc.hpp"
#include "fafilter/rng.hpp"

namespace fs = std::filesystem;

namespace fafilter {

DetectorProfile default_profile() { return DetectorProfile{}; }

namespace {

void parse_beta(const KvEntry& e, BetaParams& out) {
    auto comma = e.value.find(',');
    if (comma == std::string::npos)
        throw ConfigError("line " + std::to_string(e.line) + ": expected 'a, b' for beta");
    const KvEntry a{e.line, e.key, e.value.substr(0, comma)};
    const KvEntry b{e.line, e.key, e.value.substr(comma + 1)};
    out.a = kv_double(a);
    out.b = kv_double(b);
}

void parse_geometry_key(const KvEntry& e, BlobGeometry& g, bool& known) {
    known = true;
    if (e.key == "width") {
        const KvInterval iv = kv_interval(e);
        g.width = Interval{iv.lo, iv.hi};
    } else if (e.key == "height") {
        const KvInterval iv = kv_interval(e);
        g.height = Interval{iv.lo, iv.hi};
    } else if (e.key == "region") {
        const KvBox b = kv_box(e);
        if (b.x0 < 0.0 || b.y0 < 0.0 || b.x1 > 1.0 || b.y1 > 1.0)
            throw ConfigError("line " + std::to_string(e.line) + ": region must lie inside the unit square");
        g.region = Box{b.x0, b.y0, b.x1, b.y1};
    } else {
        known = false;
    }
}

bool disjoint(const Interval& a, const Interval& b) { return a.hi < b.lo || b.hi < a.lo; }

void check_geometry_fits(const BlobGeometry& g, int height, int width, const char* what) {
    const auto fits = [](double center, double extent, double limit) {
        return center - extent / 2.0 >= 0.0 && center + extent / 2.0 <= limit;
    };
    const bool ok = g.width.lo > 0.0 && g.height.lo > 0.0 &&
                    fits(g.region.x0 * width, g.width.hi, width) &&
                    fits(g.region.x1 * width, g.width.hi, width) &&
                    fits(g.region.y0 * height, g.height.hi, height) &&
                    fits(g.region.y1 * height, g.height.hi, height);
    if (!ok)
        throw ConfigError(std::string(what) +
                          " geometry is unsatisfiable within the grid: the largest blob must fit at "
                          "every region corner");
}

}  // namespace

DetectorProfile parse_profile(const std::string& text) {
    DetectorProfile p;
    for (const auto& section : parse_kv_document(text)) {
        if (section.name == "grid") {
            for (const auto& e : section.entries) {
                if (e.key == "height") p.height = kv_int(e);
                else if (e.key == "width") p.width = kv_int(e);
                else throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "' in [grid]");
            }
        } else if (section.name == "background") {
            for (const auto& e : section.entries) {
                if (e.key == "beta") parse_beta(e, p.background);
                else throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "' in [background]");
            }
        } else if (section.name == "nuisance") {
            for (const auto& e : section.entries) {
                bool known = false;
                parse_geometry_key(e, p.nuisance, known);
                if (known) continue;
                if (e.key == "beta") parse_beta(e, p.nuisance_score);
                else if (e.key == "poisson_mean") p.nuisance_poisson_mean = kv_double(e);
                else throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "' in [nuisance]");
            }
        } else if (section.name == "defect") {
            for (const auto& e : section.entries) {
                bool known = false;
                parse_geometry_key(e, p.defect, known);
                if (known) continue;
                if (e.key == "beta") parse_beta(e, p.defect_score);
                else if (e.key == "count") p.defect_count = kv_int(e);
                else throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "' in [defect]");
            }
        } else {
            throw ConfigError("line " + std::to_string(section.line) + ": unknown section '" +
                              section.name + "'");
        }
    }
    validate_profile(p);
    return p;
}

void validate_profile(const DetectorProfile& p) {
    if (p.height < 8 || p.width < 8) throw ConfigError("grid must be at least 8x8");
    for (const BetaParams* bp : {&p.background, &p.nuisance_score, &p.defect_score})
        if (!(bp->a > 0.0 && bp->b > 0.0)) throw ConfigError("beta parameters must be positive");
    if (p.nuisance_poisson_mean < 0.0) throw ConfigError("poisson_mean must be non-negative");
    if (p.defect_count < 1) throw ConfigError("defect count must be at least 1");
    check_geometry_fits(p.nuisance, p.height, p.width, "nuisance");
    check_geometry_fits(p.defect, p.height, p.width, "defect");

    const Interval nx{p.nuisance.region.x0, p.nuisance.region.x1};
    const Interval dx{p.defect.region.x0, p.defect.region.x1};
    const Interval ny{p.nuisance.region.y0, p.nuisance.region.y1};
    const Interval dy{p.defect.region.y0, p.defect.region.y1};
    const bool separable = disjoint(p.nuisance.width, p.defect.width) ||
                           disjoint(p.nuisance.height, p.defect.height) ||
                           disjoint(nx, dx) || disjoint(ny, dy);
    if (!separable)
        throw ConfigError(
            "nuisance and defect geometries overlap in every feature; a separating classifier "
            "cannot exist");
}

namespace {

struct Blob {
    double cx = 0.0, cy = 0.0;  // pixel coordinates of the center
    double rx = 0.0, ry = 0.0;  // semi-axes
};

Blob sample_blob(const BlobGeometry& g, int height, int width, Rng& rng) {
    Blob b;
    b.rx = rng.uniform(g.width.lo, g.width.hi) / 2.0;
    b.ry = rng.uniform(g.height.lo, g.height.hi) / 2.0;
    b.cx = rng.uniform(g.region.x0, g.region.x1) * width;
    b.cy = rng.uniform(g.region.y0, g.region.y1) * height;
    return b;
}

void paint_blob(AnomalyMap& map, BinaryMask* gt, const Blob& b, const BetaParams& score, Rng& rng) {
    const int r0 = std::max(0, static_cast<int>(std::floor(b.cy - b.ry)));
    const int r1 = std::min(map.height - 1, static_cast<int>(std::ceil(b.cy + b.ry)));
    const int c0 = std::max(0, static_cast<int>(std::floor(b.cx - b.rx)));
    const int c1 = std::min(map.width - 1, static_cast<int>(std::ceil(b.cx + b.rx)));
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) {
            const double dx = (c + 0.5 - b.cx) / b.rx;
            const double dy = (r + 0.5 - b.cy) / b.ry;
            if (dx * dx + dy * dy > 1.0) continue;
            const double v = std::min(1.0, std::max(0.0, rng.beta(score.a, score.b)));
            map.at(r, c) = std::max(map.at(r, c), v);  // blobs overwrite background by max
            if (gt) gt->set(r, c, true);
        }
}

}  // namespace

SimImage simulate_image(const DetectorProfile& profile, bool abnormal, std::uint64_t seed) {
    validate_profile(profile);
    Rng rng(seed);
    SimImage out;
    out.map.height = profile.height;
    out.map.width = profile.width;
    out.map.scores.resize(static_cast<std::size_t>(profile.height) * profile.width);
    for (double& s : out.map.scores)
        s = std::min(1.0, std::max(0.0, rng.beta(profile.background.a, profile.background.b)));
    out.ground_truth = make_mask(profile.height, profile.width);

    const int nuisance_count = profile.nuisance_poisson_mean > 0.0
                                   ? rng.poisson(profile.nuisance_poisson_mean)
                                   : 0;
    for (int i = 0; i < nuisance_count; ++i) {
        const Blob b = sample_blob(profile.nuisance, profile.height, profile.width, rng);
        paint_blob(out.map, nullptr, b, profile.nuisance_score, rng);
    }
    if (abnormal) {
        for (int i = 0; i < profile.defect_count; ++i) {
            const Blob b = sample_blob(profile.defect, profile.height, profile.width, rng);
            paint_blob(out.map, &out.ground_truth, b, profile.defect_score, rng);
        }
    }
    out.image_score = *std::max_element(out.map.scores.begin(), out.map.scores.end());
    return out;
}

DatasetIndex simulate_dataset(const DetectorProfile& profile, int n_train, int n_test_normal,
                              int n_test_abnormal, std::uint64_t seed, const fs::path& root,
                              MapFormat format) {
    validate_profile(profile);
    if (n_train < 0 || n_test_normal < 0 || n_test_abnormal < 0)
        throw ConfigError("image counts must be non-negative");

    struct Row {
        std::string path;
        double score;
        int label;
    };
    std::vector<Row> rows;
    const char* ext = map_format_extension(format);
    std::uint64_t index = 0;

    const auto emit = [&](const std::string& rel_dir, int i, bool abnormal, bool with_gt) {
        char name[32];
        std::snprintf(name, sizeof(name), "%03d", i);
        const SimImage sim = simulate_image(profile, abnormal, mix_seed(seed, index++));
        const std::string rel = rel_dir + "/" + name + ext;
        save_anomaly_map(sim.map, root / rel, format);
        if (with_gt)
            save_mask_png(sim.ground_truth, root / "ground_truth" / "defect" / (std::string(name) + "_mask.png"));
        rows.push_back(Row{rel, sim.image_score, abnormal ? 1 : 0});
    };

    for (int i = 0; i < n_train; ++i) emit("train/good", i, false, false);
    for (int i = 0; i < n_test_normal; ++i) emit("test/good", i, false, false);
    for (int i = 0; i < n_test_abnormal; ++i) emit("test/defect", i, true, true);

    // train/good must exist even when empty so the tree always scans
    std::error_code ec;
    fs::create_directories(root / "train" / "good", ec);
    if (ec) throw IoError("cannot create '" + (root / "train" / "good").string() + "'");

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.path < b.path; });
    std::ofstream csv(root / "image_scores.csv");
    if (!csv) throw IoError("cannot write '" + (root / "image_scores.csv").string() + "'");
    csv << "path,score,label\n";
    char buf[512];
    for (const Row& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%d\n", r.path.c_str(), r.score, r.label);
        csv << buf;
    }
    csv.close();
    return scan_dataset(root);
}

}  // namespace fafilter
