#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fafilter/candidates.hpp"

namespace fafilter {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

// Axis-aligned box in normalized (cx, cy) coordinates.
struct Box {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

// Parsed fuzzy prior knowledge: which features describe a defect, the range
// each may take, and how synthetic samples are augmented.
struct KnowledgeSpec {
    FeatureSpec features;
    std::map<Feature, Interval> intervals;  // explicit per-feature ranges
    std::optional<Box> region;              // joint constraint on (cx, cy)
    int sample_count = 500;
    double noise_sigma_frac = 0.0;    // 0 = off; else in (0, 0.5]
    double translate_max_frac = 0.0;  // 0 = off; else in (0, 0.5]
    bool mirror_x = false;
    bool mirror_y = false;
};

// label convention: the classifier's positive class is the false alarm, so
// the calibrated probability reads directly as p_fa.
constexpr int kLabelFalseAlarm = +1;
constexpr int kLabelDefect = -1;

struct Sample {
    FeatureVector features;
    int label = 0;
};

using SampleSet = std::vector<Sample>;

KnowledgeSpec parse_knowledge(const std::string& text);
std::string serialize_knowledge(const KnowledgeSpec& spec);

// The range a feature is sampled from / clamped to: its explicit interval if
// present, else the region axis for cx/cy, else [0,1] for cx/cy (their
// natural domain). Other features without an interval have no range.
std::optional<Interval> effective_interval(const KnowledgeSpec& spec, Feature f);

// n vectors drawn feature-wise uniformly within the spec's ranges, all
// labeled defect. Deterministic in seed.
SampleSet generate_defect_samples(const KnowledgeSpec& spec, int n, std::uint64_t seed);

// Originals plus one perturbed copy per enabled operation per sample,
// appended in the order noise, translate, mirror_x, mirror_y.
SampleSet augment(const SampleSet& samples, const KnowledgeSpec& spec, std::uint64_t seed);

}  // namespace fafilter
