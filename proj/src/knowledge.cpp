#include "fafilter/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fafilter/errors.hpp"
#include "fafilter/kvdoc.hpp"
#include "fafilter/rng.hpp"

namespace fafilter {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

bool has_feature(const FeatureSpec& spec, Feature f) {
    return std::find(spec.begin(), spec.end(), f) != spec.end();
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

}  // namespace

KnowledgeSpec parse_knowledge(const std::string& text) {
    const auto sections = parse_kv_document(text);
    KnowledgeSpec spec;
    bool have_defect = false;
    for (const auto& section : sections) {
        if (section.name == "defect") {
            have_defect = true;
            // features first: interval keys are validated against the list
            const KvEntry* features_entry = nullptr;
            for (const auto& e : section.entries)
                if (e.key == "features") features_entry = &e;
            if (!features_entry) fail(section.line, "[defect] requires a 'features' key");
            spec.features = parse_feature_spec(kv_name_list(*features_entry),
                                               "line " + std::to_string(features_entry->line));
            for (const auto& e : section.entries) {
                if (e.key == "features") continue;
                if (e.key == "count") {
                    spec.sample_count = kv_int(e);
                    if (spec.sample_count < 1) fail(e.line, "count must be at least 1");
                    continue;
                }
                if (e.key == "region") {
                    const KvBox b = kv_box(e);
                    if (b.x0 < 0.0 || b.y0 < 0.0 || b.x1 > 1.0 || b.y1 > 1.0)
                        fail(e.line, "region must lie inside the unit square");
                    spec.region = Box{b.x0, b.y0, b.x1, b.y1};
                    continue;
                }
                auto f = feature_from_name(e.key);
                if (!f) fail(e.line, "unknown key '" + e.key + "' in [defect]");
                if (!has_feature(spec.features, *f))
                    fail(e.line, "feature '" + e.key + "' has a range but is not listed in features");
                const KvInterval iv = kv_interval(e);
                spec.intervals[*f] = Interval{iv.lo, iv.hi};
            }
            if (spec.region && (spec.intervals.count(Feature::Cx) || spec.intervals.count(Feature::Cy)))
                fail(section.line, "region and explicit cx/cy ranges are mutually exclusive");
        } else if (section.name == "augment") {
            for (const auto& e : section.entries) {
                if (e.key == "noise") {
                    spec.noise_sigma_frac = kv_double(e);
                    if (spec.noise_sigma_frac < 0.0 || spec.noise_sigma_frac > 0.5)
                        fail(e.line, "noise must lie in [0, 0.5]");
                } else if (e.key == "translate") {
                    spec.translate_max_frac = kv_double(e);
                    if (spec.translate_max_frac < 0.0 || spec.translate_max_frac > 0.5)
                        fail(e.line, "translate must lie in [0, 0.5]");
                } else if (e.key == "mirror_x") {
                    spec.mirror_x = kv_bool(e);
                } else if (e.key == "mirror_y") {
                    spec.mirror_y = kv_bool(e);
                } else {
                    fail(e.line, "unknown key '" + e.key + "' in [augment]");
                }
            }
        } else {
            fail(section.line, "unknown section '" + section.name + "'");
        }
    }
    if (!have_defect) throw ConfigError("knowledge document requires a [defect] section with features");
    return spec;
}

std::string serialize_knowledge(const KnowledgeSpec& spec) {
    std::string out = "[defect]\n";
    out += "features = " + format_feature_spec(spec.features) + "\n";
    for (Feature f : spec.features) {
        auto it = spec.intervals.find(f);
        if (it == spec.intervals.end()) continue;
        out += std::string(feature_name(f)) + " = " + fmt_double(it->second.lo) + ".." +
               fmt_double(it->second.hi) + "\n";
    }
    if (spec.region) {
        out += "region = (" + fmt_double(spec.region->x0) + "," + fmt_double(spec.region->y0) +
               ")..(" + fmt_double(spec.region->x1) + "," + fmt_double(spec.region->y1) + ")\n";
    }
    out += "count = " + std::to_string(spec.sample_count) + "\n";
    out += "\n[augment]\n";
    out += "noise = " + fmt_double(spec.noise_sigma_frac) + "\n";
    out += "translate = " + fmt_double(spec.translate_max_frac) + "\n";
    out += std::string("mirror_x = ") + (spec.mirror_x ? "true" : "false") + "\n";
    out += std::string("mirror_y = ") + (spec.mirror_y ? "true" : "false") + "\n";
    return out;
}

std::optional<Interval> effective_interval(const KnowledgeSpec& spec, Feature f) {
    auto it = spec.intervals.find(f);
    if (it != spec.intervals.end()) return it->second;
    if (f == Feature::Cx) {
        if (spec.region) return Interval{spec.region->x0, spec.region->x1};
        return Interval{0.0, 1.0};
    }
    if (f == Feature::Cy) {
        if (spec.region) return Interval{spec.region->y0, spec.region->y1};
        return Interval{0.0, 1.0};
    }
    return std::nullopt;
}

SampleSet generate_defect_samples(const KnowledgeSpec& spec, int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("sample count must be at least 1");
    std::vector<Interval> ranges;
    ranges.reserve(spec.features.size());
    for (Feature f : spec.features) {
        auto iv = effective_interval(spec, f);
        if (!iv)
            throw ConfigError(std::string("feature '") + feature_name(f) +
                              "' is missing an interval in the knowledge spec");
        ranges.push_back(*iv);
    }
    Rng rng(seed);
    SampleSet out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Sample s;
        s.label = kLabelDefect;
        s.features.reserve(ranges.size());
        for (const Interval& iv : ranges) s.features.push_back(rng.uniform(iv.lo, iv.hi));
        out.push_back(std::move(s));
    }
    return out;
}

SampleSet augment(const SampleSet& samples, const KnowledgeSpec& spec, std::uint64_t seed) {
    const bool noise = spec.noise_sigma_frac > 0.0;
    const bool translate = spec.translate_max_frac > 0.0;
    if ((spec.mirror_x && !has_feature(spec.features, Feature::Cx)) ||
        (spec.mirror_y && !has_feature(spec.features, Feature::Cy)))
        throw ConfigError("mirror augmentation requires cx/cy in the feature spec");

    SampleSet out = samples;
    Rng rng(seed);

    if (noise) {
        for (const Sample& s : samples) {
            Sample copy = s;
            for (std::size_t i = 0; i < spec.features.size(); ++i) {
                auto iv = effective_interval(spec, spec.features[i]);
                if (!iv || iv->width() <= 0.0) continue;
                const double sigma = spec.noise_sigma_frac * iv->width();
                copy.features[i] = clamp(copy.features[i] + rng.normal() * sigma, iv->lo, iv->hi);
            }
            out.push_back(std::move(copy));
        }
    }
    if (translate) {
        for (const Sample& s : samples) {
            Sample copy = s;
            for (std::size_t i = 0; i < spec.features.size(); ++i) {
                const Feature f = spec.features[i];
                if (f != Feature::Cx && f != Feature::Cy) continue;
                const auto iv = effective_interval(spec, f);
                const double delta =
                    rng.uniform(-spec.translate_max_frac, spec.translate_max_frac);
                copy.features[i] = clamp(copy.features[i] + delta, iv->lo, iv->hi);
            }
            out.push_back(std::move(copy));
        }
    }
    if (spec.mirror_x) {
        for (const Sample& s : samples) {
            Sample copy = s;
            for (std::size_t i = 0; i < spec.features.size(); ++i) {
                if (spec.features[i] != Feature::Cx) continue;
                const auto iv = effective_interval(spec, Feature::Cx);
                copy.features[i] = clamp(1.0 - copy.features[i], iv->lo, iv->hi);
            }
            out.push_back(std::move(copy));
        }
    }
    if (spec.mirror_y) {
        for (const Sample& s : samples) {
            Sample copy = s;
            for (std::size_t i = 0; i < spec.features.size(); ++i) {
                if (spec.features[i] != Feature::Cy) continue;
                const auto iv = effective_interval(spec, Feature::Cy);
                copy.features[i] = clamp(1.0 - copy.features[i], iv->lo, iv->hi);
            }
            out.push_back(std::move(copy));
        }
    }
    return out;
}

}  // namespace fafilter
